#include "arw/paths.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace arw::paths {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("paths: " + std::string(what) + " is not a number: '" +
                                std::string(text) + "'");
  }
  return value;
}

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

PathDistribution PathDistribution::simple_random_walk() { return {}; }

PathDistribution PathDistribution::holding_time_walk(double rate) {
  PathDistribution d;
  d.kind = PathKind::HoldingTimeWalk;
  d.rate = rate;
  d.validate();
  return d;
}

PathDistribution PathDistribution::weighted_kernel(std::vector<double> weights, double rate) {
  PathDistribution d;
  d.kind = PathKind::WeightedKernel;
  d.rate = rate;
  d.weights = std::move(weights);
  d.validate();
  return d;
}

PathDistribution PathDistribution::parse(std::string_view text) {
  if (text == "srw") return simple_random_walk();
  if (text.starts_with("hold:")) return holding_time_walk(parse_double(text.substr(5), "rate"));
  if (text.starts_with("kernel:")) {
    const auto body = text.substr(7);
    const auto colon = body.rfind(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("paths: kernel expects 'kernel:w1,w2,...:r'");
    }
    std::vector<double> weights;
    auto list = body.substr(0, colon);
    while (true) {
      const auto comma = list.find(',');
      weights.push_back(parse_double(list.substr(0, comma), "weight"));
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
    }
    return weighted_kernel(std::move(weights), parse_double(body.substr(colon + 1), "rate"));
  }
  throw std::invalid_argument("paths: unknown distribution '" + std::string(text) + "'");
}

std::string PathDistribution::to_string() const {
  switch (kind) {
    case PathKind::SimpleRandomWalk: return "srw";
    case PathKind::HoldingTimeWalk: return "hold:" + format_double(rate);
    case PathKind::WeightedKernel: {
      std::string s = "kernel:";
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (i) s += ',';
        s += format_double(weights[i]);
      }
      return s + ":" + format_double(rate);
    }
  }
  return {};
}

void PathDistribution::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("paths: rate must be positive and finite");
  }
  if (kind == PathKind::SimpleRandomWalk && rate != 1.0) {
    throw std::invalid_argument("paths: srw has rate 1; use hold:r");
  }
  if (kind == PathKind::WeightedKernel) {
    if (weights.empty()) throw std::invalid_argument("paths: kernel needs weights");
    double total = 0.0;
    for (const double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("paths: kernel weights must be nonnegative");
      }
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("paths: kernel weights are all zero");
  }
}

void PathDistribution::validate_for(const FiniteGraph& g) const {
  validate();
  if (kind != PathKind::WeightedKernel) return;
  if (weights.size() != static_cast<std::size_t>(g.degree())) {
    throw std::invalid_argument("paths: kernel has " + std::to_string(weights.size()) +
                                " weights but the graph has degree " +
                                std::to_string(g.degree()));
  }
}

std::vector<double> PathDistribution::step_probabilities(const FiniteGraph& g, VertexId v) const {
  const auto nbrs = g.directed_neighbors(v);
  std::vector<double> p(nbrs.size());
  if (kind == PathKind::WeightedKernel) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = weights.at(j) / total;
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
  }
  return p;
}

VertexId PathDistribution::sample_neighbor(const FiniteGraph& g, VertexId v, Rng& rng) const {
  const auto nbrs = g.directed_neighbors(v);
  if (kind == PathKind::WeightedKernel) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    return nbrs[rng.weighted_index(weights, total)];
  }
  return nbrs[rng.below(nbrs.size())];
}

PutativePath::PutativePath(VertexId start) { steps_.push_back({start, 0.0}); }

void PutativePath::append(VertexId vertex, double entry_time) {
  if (exited_) throw std::logic_error("PutativePath: append after exit");
  if (!(entry_time > steps_.back().entry_time)) {
    throw std::invalid_argument("PutativePath: entry times must strictly increase");
  }
  steps_.push_back({vertex, entry_time});
}

StepOutcome sample_next_step(const PathDistribution& dist, const FiniteGraph& g,
                             PutativePath& path, Rng& rng) {
  if (path.exited()) return StepOutcome::Exited;
  const VertexId here = path.back().vertex;
  if (g.is_sink(here)) {
    path.mark_exited();
    return StepOutcome::Exited;
  }
  double hold = rng.exponential(dist.rate);
  double entry = path.back().entry_time + hold;
  // An exponential draw can round to a zero increment at large inner times.
  if (!(entry > path.back().entry_time)) {
    entry = std::nextafter(path.back().entry_time, INFINITY);
  }
  path.append(dist.sample_neighbor(g, here, rng), entry);
  return StepOutcome::Extended;
}

DistinctPrefix first_n_distinct(const PathDistribution& dist, const FiniteGraph& g,
                                PutativePath& path, std::size_t n, Rng& rng) {
  if (n < 1 || n > g.vertex_count()) {
    throw std::invalid_argument("first_n_distinct: n = " + std::to_string(n) +
                                " outside [1, " + std::to_string(g.vertex_count()) + "]");
  }
  DistinctPrefix out;
  out.vertices.reserve(n);
  std::vector<std::uint8_t> seen(g.vertex_count(), 0);
  std::size_t i = 0;
  while (out.vertices.size() < n) {
    if (i == path.size()) {
      if (sample_next_step(dist, g, path, rng) == StepOutcome::Exited) return out;
    }
    const VertexId v = path[i++].vertex;
    if (!seen[v]) {
      seen[v] = 1;
      out.vertices.push_back(v);
    }
  }
  out.complete = true;
  return out;
}

InvarianceReport check_invariance(const PathDistribution& dist, const FiniteGraph& g,
                                  std::size_t samples, Rng& rng) {
  const auto& desc = g.descriptor();
  if (desc.boundary != Boundary::Periodic) {
    throw std::invalid_argument("check_invariance: requires a Periodic graph");
  }
  dist.validate_for(g);
  const std::size_t n = g.vertex_count();

  // Maps fixing vertex 0, each an involution.
  std::vector<std::pair<std::string, std::vector<VertexId>>> maps;
  if (desc.kind == TopologyKind::Complete) {
    for (VertexId j = 2; j < n; ++j) {
      std::vector<VertexId> m(n);
      std::iota(m.begin(), m.end(), VertexId{0});
      std::swap(m[1], m[j]);
      maps.emplace_back("swap(1," + std::to_string(j) + ")", std::move(m));
    }
  } else {
    for (int axis = 0; axis < desc.dim; ++axis) {
      std::vector<VertexId> m(n);
      for (VertexId v = 0; v < n; ++v) {
        auto c = g.coordinates(v);
        c[axis] = -c[axis];
        m[v] = g.from_coordinates(c);
      }
      maps.emplace_back("reflect(x" + std::to_string(axis + 1) + ")", std::move(m));
    }
    for (int a = 0; a < desc.dim; ++a) {
      for (int b = a + 1; b < desc.dim; ++b) {
        std::vector<VertexId> m(n);
        for (VertexId v = 0; v < n; ++v) {
          auto c = g.coordinates(v);
          std::swap(c[a], c[b]);
          m[v] = g.from_coordinates(c);
        }
        maps.emplace_back("swap(x" + std::to_string(a + 1) + ",x" + std::to_string(b + 1) + ")",
                          std::move(m));
      }
    }
  }

  std::vector<double> freq(n, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    PutativePath path(0);
    sample_next_step(dist, g, path, rng);
    freq[path[1].vertex] += 1.0;
  }
  if (samples > 0) {
    for (auto& f : freq) f /= static_cast<double>(samples);
  }

  InvarianceReport report;
  report.samples = samples;
  for (const VertexId w : g.directed_neighbors(0)) report.empirical.push_back(freq[w]);
  for (const auto& [name, m] : maps) {
    double tv = 0.0;
    for (VertexId w = 0; w < n; ++w) tv += std::abs(freq[w] - freq[m[w]]);
    tv *= 0.5;
    report.maps.push_back({name, tv});
    report.max_residual = std::max(report.max_residual, tv);
  }
  return report;
}

}  // namespace arw::paths
