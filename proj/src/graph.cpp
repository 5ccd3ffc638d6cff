#include "arw/graph.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <stdexcept>

namespace arw {

namespace {

constexpr std::size_t kMaxVertices = std::size_t{1} << 26;

int parse_int_field(std::string_view text, std::string_view field) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("topology: field '" + std::string(field) +
                                "' is not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > kMaxVertices) throw std::invalid_argument("topology: too many vertices");
  }
  return r;
}

}  // namespace

TopologyDescriptor TopologyDescriptor::cycle(int length) {
  TopologyDescriptor d;
  d.kind = TopologyKind::Cycle;
  d.length = length;
  d.dim = 1;
  return d;
}

TopologyDescriptor TopologyDescriptor::torus(int length, int dim) {
  TopologyDescriptor d;
  d.kind = TopologyKind::Torus;
  d.length = length;
  d.dim = dim;
  return d;
}

TopologyDescriptor TopologyDescriptor::tree_ball(int degree, int radius) {
  TopologyDescriptor d;
  d.kind = TopologyKind::TreeBall;
  d.degree = degree;
  d.radius = radius;
  d.boundary = Boundary::Absorbing;
  return d;
}

TopologyDescriptor TopologyDescriptor::complete(int k) {
  TopologyDescriptor d;
  d.kind = TopologyKind::Complete;
  d.length = k;
  return d;
}

void TopologyDescriptor::validate() const {
  switch (kind) {
    case TopologyKind::Cycle:
    case TopologyKind::Torus:
      if (length < 3) throw std::invalid_argument("topology: field 'L' must be >= 3");
      if (dim < 1 || dim > 3) throw std::invalid_argument("topology: field 'dim' must be in {1,2,3}");
      if (kind == TopologyKind::Cycle && dim != 1) {
        throw std::invalid_argument("topology: field 'dim' must be 1 for a cycle");
      }
      if (boundary != Boundary::Periodic) {
        throw std::invalid_argument("topology: field 'boundary' must be Periodic for cycle/torus");
      }
      break;
    case TopologyKind::Complete:
      if (length < 2) throw std::invalid_argument("topology: field 'k' must be >= 2");
      if (boundary != Boundary::Periodic) {
        throw std::invalid_argument("topology: field 'boundary' must be Periodic for complete");
      }
      break;
    case TopologyKind::TreeBall:
      if (degree < 3) throw std::invalid_argument("topology: field 'degree' must be >= 3");
      if (radius < 1) throw std::invalid_argument("topology: field 'radius' must be >= 1");
      if (boundary != Boundary::Absorbing) {
        throw std::invalid_argument("topology: field 'boundary' must be Absorbing for treeball");
      }
      break;
  }
}

TopologyDescriptor TopologyDescriptor::parse(std::string_view text) {
  const auto parts = split(text, ':');
  const auto arity = [&](std::size_t n) {
    if (parts.size() != n) {
      throw std::invalid_argument("topology: '" + std::string(text) + "' expects " +
                                  std::to_string(n - 1) + " parameter(s)");
    }
  };
  TopologyDescriptor d;
  if (parts[0] == "cycle") {
    arity(2);
    d = cycle(parse_int_field(parts[1], "L"));
  } else if (parts[0] == "torus") {
    arity(3);
    d = torus(parse_int_field(parts[1], "L"), parse_int_field(parts[2], "dim"));
  } else if (parts[0] == "treeball") {
    arity(3);
    d = tree_ball(parse_int_field(parts[1], "degree"), parse_int_field(parts[2], "radius"));
  } else if (parts[0] == "complete") {
    arity(2);
    d = complete(parse_int_field(parts[1], "k"));
  } else {
    throw std::invalid_argument("topology: unknown kind '" + std::string(parts[0]) + "'");
  }
  d.validate();
  return d;
}

std::string TopologyDescriptor::to_string() const {
  switch (kind) {
    case TopologyKind::Cycle: return "cycle:" + std::to_string(length);
    case TopologyKind::Torus: return "torus:" + std::to_string(length) + ":" + std::to_string(dim);
    case TopologyKind::TreeBall:
      return "treeball:" + std::to_string(degree) + ":" + std::to_string(radius);
    case TopologyKind::Complete: return "complete:" + std::to_string(length);
  }
  return {};
}

FiniteGraph::FiniteGraph(const TopologyDescriptor& desc) : desc_(desc) {
  desc_.validate();
  std::vector<std::vector<VertexId>> adj;

  switch (desc_.kind) {
    case TopologyKind::Cycle:
    case TopologyKind::Torus: {
      const auto L = static_cast<std::size_t>(desc_.length);
      const std::size_t n = ipow(L, desc_.dim);
      adj.resize(n);
      degree_ = 2 * desc_.dim;
      for (std::size_t v = 0; v < n; ++v) {
        std::size_t stride = 1;
        for (int axis = 0; axis < desc_.dim; ++axis) {
          const std::size_t x = (v / stride) % L;
          const std::size_t up = v - x * stride + ((x + 1) % L) * stride;
          const std::size_t down = v - x * stride + ((x + L - 1) % L) * stride;
          adj[v].push_back(static_cast<VertexId>(up));
          adj[v].push_back(static_cast<VertexId>(down));
          stride *= L;
        }
      }
      break;
    }
    case TopologyKind::Complete: {
      const auto k = static_cast<std::size_t>(desc_.length);
      adj.resize(k);
      degree_ = desc_.length - 1;
      for (std::size_t v = 0; v < k; ++v) {
        for (std::size_t off = 1; off < k; ++off) {
          adj[v].push_back(static_cast<VertexId>((v + off) % k));
        }
      }
      break;
    }
    case TopologyKind::TreeBall: {
      degree_ = desc_.degree;
      adj.emplace_back();
      std::vector<int> depth{0};
      for (std::size_t v = 0; v < adj.size(); ++v) {
        if (depth[v] == desc_.radius) continue;
        const int children = (v == 0) ? desc_.degree : desc_.degree - 1;
        for (int c = 0; c < children; ++c) {
          const auto child = static_cast<VertexId>(adj.size());
          if (adj.size() >= kMaxVertices) throw std::invalid_argument("topology: too many vertices");
          adj.emplace_back();
          depth.push_back(depth[v] + 1);
          adj[v].push_back(child);
          adj[child].push_back(static_cast<VertexId>(v));
        }
      }
      is_sink_.assign(adj.size(), 0);
      for (std::size_t v = 0; v < adj.size(); ++v) {
        if (depth[v] == desc_.radius) {
          is_sink_[v] = 1;
          sinks_.push_back(static_cast<VertexId>(v));
        }
        std::sort(adj[v].begin(), adj[v].end());
      }
      break;
    }
  }

  if (is_sink_.empty()) is_sink_.assign(adj.size(), 0);
  offsets_.reserve(adj.size() + 1);
  offsets_.push_back(0);
  for (const auto& list : adj) {
    directed_.insert(directed_.end(), list.begin(), list.end());
    auto sorted = list;
    std::sort(sorted.begin(), sorted.end());
    sorted_.insert(sorted_.end(), sorted.begin(), sorted.end());
    offsets_.push_back(directed_.size());
  }
}

void FiniteGraph::check_vertex(VertexId v) const {
  if (v >= vertex_count()) {
    throw std::out_of_range("vertex " + std::to_string(v) + " out of range [0, " +
                            std::to_string(vertex_count()) + ")");
  }
}

int FiniteGraph::degree(VertexId v) const {
  check_vertex(v);
  return static_cast<int>(offsets_[v + 1] - offsets_[v]);
}

std::span<const VertexId> FiniteGraph::neighbors(VertexId v) const {
  check_vertex(v);
  return {sorted_.data() + offsets_[v], sorted_.data() + offsets_[v + 1]};
}

std::vector<int> FiniteGraph::coordinates(VertexId v) const {
  check_vertex(v);
  if (desc_.kind != TopologyKind::Cycle && desc_.kind != TopologyKind::Torus) {
    throw std::invalid_argument("coordinates: only defined for cycle/torus");
  }
  std::vector<int> coords(desc_.dim);
  std::size_t rest = v;
  for (auto& c : coords) {
    c = static_cast<int>(rest % desc_.length);
    rest /= desc_.length;
  }
  return coords;
}

VertexId FiniteGraph::from_coordinates(std::span<const int> coords) const {
  if (desc_.kind != TopologyKind::Cycle && desc_.kind != TopologyKind::Torus) {
    throw std::invalid_argument("from_coordinates: only defined for cycle/torus");
  }
  if (coords.size() != static_cast<std::size_t>(desc_.dim)) {
    throw std::invalid_argument("from_coordinates: wrong dimension");
  }
  std::size_t v = 0;
  std::size_t stride = 1;
  for (const int c : coords) {
    const int L = desc_.length;
    v += static_cast<std::size_t>(((c % L) + L) % L) * stride;
    stride *= static_cast<std::size_t>(L);
  }
  return static_cast<VertexId>(v);
}

VertexId FiniteGraph::translate(VertexId v, std::span<const int> shift) const {
  check_vertex(v);
  switch (desc_.kind) {
    case TopologyKind::Cycle:
    case TopologyKind::Torus: {
      auto coords = coordinates(v);
      if (shift.size() != coords.size()) throw std::invalid_argument("translate: wrong dimension");
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] += shift[i];
      return from_coordinates(coords);
    }
    case TopologyKind::Complete: {
      if (shift.empty()) throw std::invalid_argument("translate: empty shift");
      const int k = desc_.length;
      return static_cast<VertexId>(((static_cast<int>(v) + shift[0]) % k + k) % k);
    }
    case TopologyKind::TreeBall: break;
  }
  throw std::invalid_argument("translate: tree balls have no translation group");
}

std::size_t FiniteGraph::translation_count() const {
  if (desc_.boundary != Boundary::Periodic) {
    throw std::invalid_argument("translation_count: graph is not periodic");
  }
  return vertex_count();
}

std::vector<int> FiniteGraph::translation(std::size_t t) const {
  if (t >= translation_count()) throw std::out_of_range("translation index out of range");
  if (desc_.kind == TopologyKind::Complete) return {static_cast<int>(t)};
  return coordinates(static_cast<VertexId>(t));
}

GraphPtr build_topology(const TopologyDescriptor& desc) {
  return std::make_shared<const FiniteGraph>(desc);
}

std::span<const VertexId> neighbors(const FiniteGraph& g, VertexId v) { return g.neighbors(v); }

std::vector<int> distances_from(const FiniteGraph& g, VertexId source) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<VertexId> queue;
  g.neighbors(source);  // range check
  dist[source] = 0;
  queue.push_back(source);
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (const VertexId w : g.directed_neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

int distance(const FiniteGraph& g, VertexId u, VertexId v) {
  g.neighbors(v);
  if (u == v) {
    g.neighbors(u);
    return 0;
  }
  return distances_from(g, u)[v];
}

std::vector<std::vector<BallEntry>> balls(const FiniteGraph& g, int radius) {
  std::vector<std::vector<BallEntry>> out(g.vertex_count());
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<VertexId> touched;
  for (VertexId c = 0; c < g.vertex_count(); ++c) {
    touched.clear();
    dist[c] = 0;
    touched.push_back(c);
    for (std::size_t head = 0; head < touched.size(); ++head) {
      const VertexId v = touched[head];
      if (dist[v] == radius) continue;
      for (const VertexId w : g.directed_neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          touched.push_back(w);
        }
      }
    }
    auto& ball = out[c];
    ball.reserve(touched.size());
    for (const VertexId v : touched) {
      ball.push_back({v, dist[v]});
      dist[v] = -1;
    }
    std::sort(ball.begin(), ball.end(),
              [](const BallEntry& a, const BallEntry& b) { return a.vertex < b.vertex; });
  }
  return out;
}

bool verify_translation_invariance(const FiniteGraph& g) {
  if (g.descriptor().boundary != Boundary::Periodic) {
    throw std::invalid_argument("verify_translation_invariance: graph has Absorbing boundary");
  }
  const std::size_t n = g.vertex_count();
  for (std::size_t t = 0; t < g.translation_count(); ++t) {
    const auto shift = g.translation(t);
    std::vector<VertexId> image(n);
    for (VertexId v = 0; v < n; ++v) image[v] = g.translate(v, shift);
    for (VertexId u = 0; u < n; ++u) {
      const auto target = g.neighbors(image[u]);
      for (const VertexId w : g.neighbors(u)) {
        if (!std::binary_search(target.begin(), target.end(), image[w])) return false;
      }
    }
  }
  return true;
}

}  // namespace arw
