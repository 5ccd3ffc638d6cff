#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "arw/graph.hpp"
#include "arw/rng.hpp"

namespace arw::paths {

enum class PathKind { SimpleRandomWalk, HoldingTimeWalk, WeightedKernel };

/// Markov path law: exponential holding times at `rate`, then a step to a
/// neighbor. SimpleRandomWalk and HoldingTimeWalk pick uniformly among
/// neighbors; WeightedKernel picks direction j of `directed_neighbors`
/// with probability weights[j] / sum(weights).
struct PathDistribution {
  PathKind kind = PathKind::SimpleRandomWalk;
  double rate = 1.0;
  std::vector<double> weights;

  static PathDistribution simple_random_walk();
  static PathDistribution holding_time_walk(double rate);
  static PathDistribution weighted_kernel(std::vector<double> weights, double rate);

  /// Parses `srw`, `hold:r`, `kernel:w1,w2,...:r`.
  static PathDistribution parse(std::string_view text);
  std::string to_string() const;

  void validate() const;
  /// Kernel weights must match the degree of every non-sink vertex.
  void validate_for(const FiniteGraph& g) const;

  /// One-step law over `g.directed_neighbors(v)`.
  std::vector<double> step_probabilities(const FiniteGraph& g, VertexId v) const;
  VertexId sample_neighbor(const FiniteGraph& g, VertexId v, Rng& rng) const;

  bool operator==(const PathDistribution&) const = default;
};

struct PathStep {
  VertexId vertex;
  double entry_time;  // inner time at which the path enters `vertex`

  bool operator==(const PathStep&) const = default;
};

/// A path parameterized by inner time: its value on [t_i, t_{i+1}) is v_i.
/// Grown lazily; a path reaching a sink is terminated and flagged exited.
class PutativePath {
 public:
  explicit PutativePath(VertexId start);

  std::size_t size() const noexcept { return steps_.size(); }
  const PathStep& operator[](std::size_t i) const noexcept { return steps_[i]; }
  const PathStep& back() const noexcept { return steps_.back(); }
  const std::vector<PathStep>& steps() const noexcept { return steps_; }
  VertexId start() const noexcept { return steps_.front().vertex; }
  bool exited() const noexcept { return exited_; }

  /// Entry times must strictly increase.
  void append(VertexId vertex, double entry_time);
  void mark_exited() noexcept { exited_ = true; }

  bool operator==(const PutativePath&) const = default;

 private:
  std::vector<PathStep> steps_;
  bool exited_ = false;
};

enum class StepOutcome { Extended, Exited };

/// Appends one step: an Exponential(rate) hold at the current vertex, then a
/// kernel step. From a sink the path is terminated instead.
StepOutcome sample_next_step(const PathDistribution& dist, const FiniteGraph& g,
                             PutativePath& path, Rng& rng);

struct DistinctPrefix {
  std::vector<VertexId> vertices;  // in first-visit order
  bool complete = false;           // false iff the path exited first
};

/// First n distinct vertices visited by the path, extending it as needed.
/// Throws std::invalid_argument unless 1 <= n <= vertex_count.
DistinctPrefix first_n_distinct(const PathDistribution& dist, const FiniteGraph& g,
                                PutativePath& path, std::size_t n, Rng& rng);

struct MapResidual {
  std::string map;
  double total_variation;
};

struct InvarianceReport {
  std::size_t samples = 0;
  std::vector<double> empirical;  // first-step frequencies over directed_neighbors(0)
  std::vector<MapResidual> maps;
  double max_residual = 0.0;
};

/// Empirical first-step law from vertex 0 against its pushforward under each
/// reflection/coordinate-swap (torus, cycle) or transposition (complete) that
/// fixes vertex 0. Diagnostic only. Requires a Periodic graph.
InvarianceReport check_invariance(const PathDistribution& dist, const FiniteGraph& g,
                                  std::size_t samples, Rng& rng);

}  // namespace arw::paths
