#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arw/engine.hpp"
#include "arw/parallel.hpp"

namespace arw::gadget {

/// Finite-horizon candidate event for the particle (v, 0): N_v >= 1 and it
/// makes at least k jumps by time T. A candidate is bad if it makes no jump
/// in (T, T_long]. Its mark is uniform over the first n distinct vertices of
/// its putative path.
struct CandidateConfig {
  double T = 5.0;
  int k = 3;
  double T_long = 10.0;
  std::size_t n = 16;
  std::uint64_t budget = 100'000'000;  // events per replica before giving up

  /// T_long == T is accepted and marks the run degenerate (no bad candidates).
  void validate(std::size_t vertex_count) const;
  bool degenerate() const noexcept { return T_long == T; }
};

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// Per-replica statistics. Q(u) = sum_v q(v, u) with
/// q(v, u) = 1{candidate v} / n * 1{u among the first n distinct vertices}.
struct ReplicaStats {
  double b_hat = 0.0;              // candidate fraction
  double eps_hat = 0.0;            // fraction of vertices with a bad candidate
  double mean_Q = 0.0;
  double var_Q = 0.0;              // population variance over vertices
  double mean_Zbar = 0.0;
  double frac_Zu_positive = 0.0;
  double poisson_bound_rhs = 0.0;  // 1 - mean_u exp(-Q(u))
  double max_q = 0.0;
  double product_error = 0.0;      // max_u |prod_v (1 - q(v,u)) - (1 - 1/n)^m(u)|
  double exp_excess = 0.0;         // max_u (prod_v (1 - q(v,u)) - exp(-Q(u)))
  bool zbar_below_z = true;        // Zbar(u) <= Z(u) for every u
};

struct GadgetReport {
  CandidateConfig config;
  std::size_t vertices = 0;
  std::size_t replicas = 0;
  bool degenerate = false;
  std::vector<ReplicaStats> rows;
  double b_hat = 0.0;    // means over replicas
  double eps_hat = 0.0;
  std::vector<double> Q;                // per-vertex mean over replicas
  std::vector<std::uint64_t> Z;         // per-vertex totals over replicas
  std::vector<std::uint64_t> Zbar;
  std::vector<std::vector<std::uint8_t>> candidates;  // [replica][v]
  std::vector<std::vector<std::uint8_t>> bad;         // [replica][v]
  std::vector<BoundCheck> bound_checks;

  bool all_pass() const;
};

/// Replica r uses key derive_key(seed, {r}); marks come from the replica's
/// gadget stream, one draw per vertex in vertex order. The putative path
/// prefixes are read from the engine, so they are the paths actually walked.
GadgetReport run_gadget(const GraphPtr& graph, const engine::InitialLaw& law,
                        const paths::PathDistribution& dist, const engine::InteractionRule& rule,
                        const CandidateConfig& cfg, std::size_t replicas, std::uint64_t seed,
                        std::size_t threads = default_thread_count());

/// mean_u Q(u) equals the candidate fraction within 1e-12, and q <= 1/n.
std::vector<BoundCheck> check_exact_identity(const GadgetReport& report);

/// Product identity within 1e-12 per replica, pointwise exp(-Q) domination,
/// and the frequency of {Z(u) > 0} against 1 - mean exp(-Q(u)) - 3 SE.
std::vector<BoundCheck> check_poisson_bound(const GadgetReport& report);

/// mean_u Zbar(u) equals eps_hat within 1e-12 per replica, and Zbar <= Z.
std::vector<BoundCheck> check_bad_candidates(const GadgetReport& report);

/// Covariance of candidate indicators at neighbouring vertices (v, v + e_1),
/// pooled over vertices and replicas.
struct CovarianceDiagnostic {
  double covariance = 0.0;
  double se = 0.0;
  double z = 0.0;
  std::size_t pairs = 0;
};
CovarianceDiagnostic neighbor_candidate_covariance(const GraphPtr& graph,
                                                   const GadgetReport& report);

/// Fixation kernel estimate from absorbed runs on a Cycle or Torus.
/// F(u, v) is estimated by the frequency that a particle started at u sleeps
/// at v. `kernel[w]` is the translation-averaged F(u, u + w).
struct MassTransportResult {
  std::size_t runs = 0;
  std::vector<double> kernel;
  double row_sum = 0.0;        // sum_w kernel[w]
  double col_sum = 0.0;        // sum_w kernel[-w]
  double density = 0.0;        // mean particles per vertex
  double density_se = 0.0;
  // Reference vertex u0 = 0, without averaging over translations.
  double ref_row = 0.0;        // mean N_{u0}
  double ref_col = 0.0;        // frequency of u0 holding a sleeper
  double ref_residual_se = 0.0;
  double ref_density_se = 0.0;
  double max_col = 0.0;        // largest per-vertex column sum
  std::vector<BoundCheck> checks;

  bool all_pass() const;
};

/// Throws std::invalid_argument on a non-absorbed report or a graph that is
/// not a Cycle or Torus.
MassTransportResult mass_transport_residual(const GraphPtr& graph,
                                            std::span<const engine::RunReport> reports);

}  // namespace arw::gadget
