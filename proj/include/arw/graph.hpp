#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace arw {

using VertexId = std::uint32_t;

enum class TopologyKind { Cycle, Torus, TreeBall, Complete };
enum class Boundary { Periodic, Absorbing };

/// Finite stand-in for an infinite transitive graph.
///
/// Cycle(L) is Torus(L, 1). Complete(k) is K_k. TreeBall(d, r) is the ball of
/// radius r around the root of the d-regular tree; its depth-r leaves are sinks.
struct TopologyDescriptor {
  TopologyKind kind = TopologyKind::Cycle;
  int length = 3;   // L for Cycle/Torus, k for Complete
  int dim = 1;      // Torus only
  int degree = 3;   // TreeBall only
  int radius = 1;   // TreeBall only
  Boundary boundary = Boundary::Periodic;

  static TopologyDescriptor cycle(int length);
  static TopologyDescriptor torus(int length, int dim);
  static TopologyDescriptor tree_ball(int degree, int radius);
  static TopologyDescriptor complete(int k);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Parses `cycle:L`, `torus:L:dim`, `treeball:d:r`, `complete:k`.
  static TopologyDescriptor parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const TopologyDescriptor&) const = default;
};

/// Immutable after construction; share freely across replicas.
class FiniteGraph {
 public:
  explicit FiniteGraph(const TopologyDescriptor& desc);

  std::size_t vertex_count() const noexcept { return offsets_.size() - 1; }
  const TopologyDescriptor& descriptor() const noexcept { return desc_; }

  /// Degree of interior (non-sink) vertices; every vertex for Periodic graphs.
  int degree() const noexcept { return degree_; }
  int degree(VertexId v) const;

  /// Neighbors in ascending index order.
  std::span<const VertexId> neighbors(VertexId v) const;

  /// Neighbors in direction order: (+e1, -e1, +e2, -e2, ...) on tori,
  /// offsets (+1, ..., +(k-1)) mod k on Complete(k), ascending on trees.
  /// Weighted path kernels index into this list.
  std::span<const VertexId> directed_neighbors(VertexId v) const noexcept {
    return {directed_.data() + offsets_[v], directed_.data() + offsets_[v + 1]};
  }

  bool transitive_by_construction() const noexcept { return desc_.boundary == Boundary::Periodic; }
  bool is_sink(VertexId v) const noexcept { return is_sink_[v] != 0; }
  const std::vector<VertexId>& sink_vertices() const noexcept { return sinks_; }

  /// Torus/Cycle coordinates (x_1, ..., x_dim) with v = sum x_i L^(i-1).
  std::vector<int> coordinates(VertexId v) const;
  VertexId from_coordinates(std::span<const int> coords) const;

  /// Image of v under the translation by `shift`. Torus/Cycle shift
  /// coordinates mod L; Complete(k) shifts the label mod k (shift[0] only).
  VertexId translate(VertexId v, std::span<const int> shift) const;

  /// Number of translations in the group (|V| for Periodic graphs).
  std::size_t translation_count() const;
  /// The translation with index t, as a shift vector.
  std::vector<int> translation(std::size_t t) const;

 private:
  void check_vertex(VertexId v) const;

  TopologyDescriptor desc_;
  int degree_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<VertexId> sorted_;
  std::vector<VertexId> directed_;
  std::vector<std::uint8_t> is_sink_;
  std::vector<VertexId> sinks_;
};

using GraphPtr = std::shared_ptr<const FiniteGraph>;

GraphPtr build_topology(const TopologyDescriptor& desc);

std::span<const VertexId> neighbors(const FiniteGraph& g, VertexId v);

/// Breadth-first distances from `source` to every vertex.
std::vector<int> distances_from(const FiniteGraph& g, VertexId source);

int distance(const FiniteGraph& g, VertexId u, VertexId v);

/// All vertices within distance `radius` of every vertex; entry v lists
/// (vertex, distance) pairs sorted by vertex index.
struct BallEntry {
  VertexId vertex;
  int distance;
};
std::vector<std::vector<BallEntry>> balls(const FiniteGraph& g, int radius);

/// Exhaustively checks that every translation maps edges to edges.
/// Throws std::invalid_argument for Absorbing-boundary graphs.
bool verify_translation_invariance(const FiniteGraph& g);

}  // namespace arw
