#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arw/graph.hpp"
#include "arw/paths.hpp"

namespace arw::lab {

/// A tiny ARW instance for exact analysis under the standard rule.
struct CtmcSpec {
  GraphPtr graph;
  std::vector<VertexId> placement;  // one entry per particle, all Active at t = 0
  double lambda = 1.0;
  paths::PathDistribution dist = paths::PathDistribution::simple_random_walk();
  std::size_t state_cap = 20000;
};

struct OracleResult {
  std::size_t states = 0;             // reachable states, absorbed ones included
  std::size_t transient_states = 0;
  double absorption_probability = 0.0;
  /// +infinity unless absorption_probability is 1 (to solver tolerance).
  double expected_absorption_time = 0.0;
  double relative_residual = 0.0;     // worst residual over the solves performed
  bool dense_solver = true;
};

class StateCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State of the exact chain: sorted multiset of codes 2 * position + sleeping.
/// Particles are exchangeable, so identities are quotiented out.
using CtmcState = std::vector<std::uint32_t>;

struct CtmcTransition {
  CtmcState target;
  double rate;
};

/// Outgoing transitions of `state`, with duplicate targets merged.
std::vector<CtmcTransition> ctmc_transitions(const CtmcSpec& spec, const CtmcState& state);

CtmcState ctmc_initial_state(const CtmcSpec& spec);

/// Enumerates the reachable states breadth-first, builds the generator and
/// solves for the absorption probability and the expected hitting time of
/// the absorbed set (no Active particles). Dense LU below 2000 transient
/// states, preconditioned BiCGSTAB above; relative residual must be <= 1e-10.
OracleResult ctmc_oracle(const CtmcSpec& spec);

}  // namespace arw::lab
