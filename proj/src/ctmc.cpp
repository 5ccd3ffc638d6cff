#include "arw/ctmc.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace arw::lab {

namespace {

constexpr std::size_t kDenseLimit = 2000;
constexpr double kResidualTolerance = 1e-10;

bool has_active(const CtmcState& s) {
  return std::any_of(s.begin(), s.end(), [](std::uint32_t c) { return (c & 1u) == 0; });
}

struct LinearSolve {
  Eigen::VectorXd x;
  double residual;
  bool dense;
};

LinearSolve solve(const std::vector<Eigen::Triplet<double>>& triplets, const Eigen::VectorXd& rhs) {
  const auto n = rhs.size();
  LinearSolve out;
  if (static_cast<std::size_t>(n) < kDenseLimit) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : triplets) a(t.row(), t.col()) += t.value();
    out.x = a.partialPivLu().solve(rhs);
    out.residual = (a * out.x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    out.dense = true;
  } else {
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> iterative;
    iterative.setTolerance(1e-14);
    iterative.setMaxIterations(10000);
    iterative.compute(a);
    out.x = iterative.solve(rhs);
    out.residual = (a * out.x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (!(out.residual <= kResidualTolerance)) {
      // The iteration stalled; fall back to a sparse direct factorization.
      Eigen::SparseLU<Eigen::SparseMatrix<double>> direct;
      direct.compute(a);
      if (direct.info() == Eigen::Success) {
        out.x = direct.solve(rhs);
        out.residual = (a * out.x - rhs).norm() / std::max(rhs.norm(), 1e-300);
      }
    }
    out.dense = false;
  }
  if (!std::isfinite(out.residual) || out.residual > kResidualTolerance || !out.x.allFinite()) {
    throw SingularSystem("ctmc_oracle: linear solve failed (relative residual " +
                         std::to_string(out.residual) + "); the generator is singular");
  }
  return out;
}

}  // namespace

CtmcState ctmc_initial_state(const CtmcSpec& spec) {
  CtmcState s;
  for (const VertexId v : spec.placement) {
    if (v >= spec.graph->vertex_count()) throw std::out_of_range("ctmc: placement out of range");
    if (spec.graph->is_sink(v)) throw std::invalid_argument("ctmc: placement on a sink");
    s.push_back(2 * v);
  }
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<CtmcTransition> ctmc_transitions(const CtmcSpec& spec, const CtmcState& state) {
  const FiniteGraph& g = *spec.graph;
  const double jump_rate = spec.dist.rate;
  std::map<CtmcState, double> merged;

  std::size_t i = 0;
  while (i < state.size()) {
    const std::uint32_t code = state[i];
    std::size_t j = i;
    while (j < state.size() && state[j] == code) ++j;
    const std::size_t multiplicity = j - i;
    i = j;
    if (code & 1u) continue;  // sleeping particles have no transitions
    const VertexId p = code / 2;

    const auto nbrs = g.directed_neighbors(p);
    const auto probs = spec.dist.step_probabilities(g, p);
    for (std::size_t d = 0; d < nbrs.size(); ++d) {
      if (probs[d] == 0.0) continue;
      const VertexId w = nbrs[d];
      CtmcState next = state;
      next.erase(std::find(next.begin(), next.end(), code));
      if (!g.is_sink(w)) {
        const auto sleeper = std::find(next.begin(), next.end(), 2 * w + 1);
        if (sleeper != next.end()) *sleeper = 2 * w;
        next.push_back(2 * w);
        std::sort(next.begin(), next.end());
      }
      merged[std::move(next)] += static_cast<double>(multiplicity) * jump_rate * probs[d];
    }

    // A lone Active particle falls asleep; a shared vertex has no sleeper.
    if (multiplicity == 1 && spec.lambda > 0.0) {
      CtmcState next = state;
      *std::find(next.begin(), next.end(), code) = code + 1;
      std::sort(next.begin(), next.end());
      merged[std::move(next)] += spec.lambda;
    }
  }

  std::vector<CtmcTransition> out;
  out.reserve(merged.size());
  for (auto& [target, rate] : merged) out.push_back({target, rate});
  return out;
}

OracleResult ctmc_oracle(const CtmcSpec& spec) {
  if (!spec.graph) throw std::invalid_argument("ctmc: null graph");
  if (!(spec.lambda >= 0.0)) throw std::invalid_argument("ctmc: lambda must be >= 0");
  spec.dist.validate_for(*spec.graph);

  std::map<CtmcState, std::size_t> index;
  std::vector<CtmcState> states;
  std::vector<std::vector<std::pair<std::size_t, double>>> out_edges;

  const auto intern = [&](const CtmcState& s) {
    auto [it, inserted] = index.emplace(s, states.size());
    if (inserted) {
      if (states.size() >= spec.state_cap) {
        throw StateCapExceeded("ctmc: reachable state space exceeds cap of " +
                               std::to_string(spec.state_cap));
      }
      states.push_back(s);
    }
    return it->second;
  };

  intern(ctmc_initial_state(spec));
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::vector<std::pair<std::size_t, double>> edges;
    for (const auto& t : ctmc_transitions(spec, states[k])) edges.emplace_back(intern(t.target), t.rate);
    out_edges.push_back(std::move(edges));
  }

  const std::size_t n = states.size();
  std::vector<bool> absorbed(n);
  for (std::size_t k = 0; k < n; ++k) absorbed[k] = !has_active(states[k]);

  OracleResult result;
  result.states = n;
  result.transient_states = static_cast<std::size_t>(std::count(absorbed.begin(), absorbed.end(), false));
  if (absorbed[0]) {
    result.absorption_probability = 1.0;
    result.expected_absorption_time = 0.0;
    return result;
  }

  // States from which the absorbed set is reachable.
  std::vector<std::vector<std::size_t>> in_edges(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& [to, rate] : out_edges[k]) in_edges[to].push_back(k);
  }
  std::vector<bool> can_absorb(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t k = 0; k < n; ++k) {
    if (absorbed[k]) {
      can_absorb[k] = true;
      queue.push_back(k);
    }
  }
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (const std::size_t from : in_edges[k]) {
      if (!can_absorb[from]) {
        can_absorb[from] = true;
        queue.push_back(from);
      }
    }
  }
  if (!can_absorb[0]) {
    result.absorption_probability = 0.0;
    result.expected_absorption_time = std::numeric_limits<double>::infinity();
    return result;
  }

  // Absorption probability h on transient states that can absorb:
  //   q_k h_k - sum_{j transient} q_kj h_j = sum_{a absorbed} q_ka.
  std::vector<std::ptrdiff_t> row(n, -1);
  std::size_t m = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!absorbed[k] && can_absorb[k]) row[k] = static_cast<std::ptrdiff_t>(m++);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < n; ++k) {
    if (row[k] < 0) continue;
    double total = 0.0;
    for (const auto& [to, rate] : out_edges[k]) {
      total += rate;
      if (absorbed[to]) {
        rhs[row[k]] += rate;
      } else if (row[to] >= 0) {
        triplets.emplace_back(row[k], row[to], -rate);
      }
    }
    triplets.emplace_back(row[k], row[k], total);
  }
  const auto h = solve(triplets, rhs);
  result.absorption_probability = h.x[row[0]];
  result.relative_residual = h.residual;
  result.dense_solver = h.dense;

  // Every state was reached from the start, so absorption is certain iff
  // every transient state can absorb.
  if (m != result.transient_states) {
    // Some reachable transient state cannot absorb, so the hitting time is infinite.
    result.expected_absorption_time = std::numeric_limits<double>::infinity();
    return result;
  }

  // Expected hitting time: q_k t_k - sum_j q_kj t_j = 1 on transient states.
  triplets.clear();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < n; ++k) {
    if (row[k] < 0) continue;
    double total = 0.0;
    for (const auto& [to, rate] : out_edges[k]) {
      total += rate;
      if (!absorbed[to]) triplets.emplace_back(row[k], row[to], -rate);
    }
    triplets.emplace_back(row[k], row[k], total);
  }
  const auto t = solve(triplets, ones);
  result.expected_absorption_time = t.x[row[0]];
  result.relative_residual = std::max(result.relative_residual, t.residual);
  return result;
}

}  // namespace arw::lab
