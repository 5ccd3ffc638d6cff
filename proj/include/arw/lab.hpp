#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arw/ctmc.hpp"
#include "arw/engine.hpp"
#include "arw/parallel.hpp"

namespace arw::lab {

enum class LawFamily { Poisson, Bernoulli, Deterministic };

LawFamily parse_law_family(std::string_view text);
std::string_view to_string(LawFamily family);
engine::InitialLaw make_law(LawFamily family, double zeta);

/// `cycle` or `torus:dim`, instantiated at side length L.
TopologyDescriptor family_descriptor(std::string_view family, int length);

struct SweepConfig {
  std::vector<double> zetas;
  std::vector<double> lambdas;
  std::vector<int> sizes;
  std::string graph_family = "cycle";
  LawFamily law = LawFamily::Poisson;
  paths::PathDistribution dist = paths::PathDistribution::simple_random_walk();
  std::size_t replicas = 10;
  std::uint64_t budget = 1'000'000;  // max events per replica
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct SweepRow {
  double zeta = 0.0;
  double lambda = 0.0;
  int length = 0;
  std::size_t replicas = 0;
  double frac_absorbed = 0.0;
  double mean_abs_time = 0.0;   // over absorbed replicas; NaN if none
  double se_abs_time = 0.0;
  double mean_events_pp = 0.0;  // order parameter
  double se_events_pp = 0.0;
  double budget_exhausted_frac = 0.0;
  bool all_exhausted = false;
};

/// Per-replica summary of one cell.
struct ReplicaOutcome {
  bool absorbed = false;
  bool exhausted = false;
  double absorption_time = 0.0;
  double events_per_particle = 0.0;
  std::size_t particles = 0;
};

/// Runs `replicas` independent replicas with keys derive_key(master, {cell, r}).
std::vector<ReplicaOutcome> run_cell(const GraphPtr& graph, const engine::InitialLaw& law,
                                     const paths::PathDistribution& dist, double lambda,
                                     std::size_t replicas, std::uint64_t budget,
                                     std::uint64_t master_seed, std::uint64_t cell,
                                     std::size_t threads);

SweepRow summarize_cell(double zeta, double lambda, int length,
                        std::span<const ReplicaOutcome> outcomes);

/// One row per (zeta, lambda, L) cell, zeta-major. Normal-approximation SEs.
std::vector<SweepRow> estimate_absorption_stats(const SweepConfig& cfg,
                                                std::size_t threads = default_thread_count());

struct FixationDiagnostics {
  std::size_t vertices = 0;
  std::size_t particles = 0;  // exited particles excluded
  double vertex_fixated_fraction = 0.0;
  double particle_fixated_fraction = 0.0;
  /// joint[a][b]: vertices with (fixated == a, every particle started there fixated == b).
  std::array<std::array<std::size_t, 2>, 2> joint{};
  /// Vertex-fixated minus particle-fixated fraction.
  double gap() const noexcept { return vertex_fixated_fraction - particle_fixated_fraction; }
};

/// A vertex counts as fixated at stop if it holds no Active particle; a
/// particle if it is Sleeping.
FixationDiagnostics fixation_diagnostics(std::span<const engine::RunReport> reports);

struct CriticalConfig {
  double lambda = 1.0;
  int length = 256;
  std::string graph_family = "cycle";
  paths::PathDistribution dist = paths::PathDistribution::simple_random_walk();
  std::size_t replicas = 20;
  std::uint64_t budget = 200'000;
  double threshold = 50.0;  // events per particle above which a density is active
  std::uint64_t master_seed = 0;
  int bisection_steps = 6;
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};

  void validate() const;
};

struct CurvePoint {
  double zeta = 0.0;
  double order_parameter = 0.0;  // mean events per particle
  double se = 0.0;
  double frac_absorbed = 0.0;
  bool median_exhausted = false;
  bool active = false;
};

enum class Bracket { Found, AllActive, AllAbsorbed };
std::string_view to_string(Bracket bracket);

struct CriticalEstimate {
  double zeta_c = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  Bracket bracket = Bracket::Found;
  std::vector<CurvePoint> curve;  // every evaluated density, sorted by zeta

  double ci_half_width() const noexcept { return 0.5 * (ci_high - ci_low); }
};

/// Evaluates the order parameter on the grid under Poisson(zeta) initial
/// counts, brackets the first active density and bisects inside the bracket.
/// A density is active if the median replica exhausts the budget or the mean
/// events per particle exceeds the threshold. Each density's replicas are
/// keyed by (master, zeta bits, replica), independent of evaluation order.
/// The estimate is the midpoint of the final bracket; the interval runs from
/// the largest evaluated density below it that is inactive at two standard
/// errors to the smallest one above it that is active at two standard errors.
CriticalEstimate estimate_critical_density(const CriticalConfig& cfg,
                                           std::size_t threads = default_thread_count());

struct McOptions {
  std::size_t replicas = 100000;
  std::uint64_t master_seed = 0;
  std::uint64_t budget = 10'000'000;  // per replica
  double lambda_scale = 1.0;          // engine runs at lambda_scale * lambda
  std::size_t threads = default_thread_count();
};

enum class ComparisonStatus { Compared, SkippedNeverAbsorbs, SkippedZeroVariance };
std::string_view to_string(ComparisonStatus status);

struct OracleComparison {
  OracleResult oracle;
  ComparisonStatus status = ComparisonStatus::Compared;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double z = 0.0;
  std::size_t replicas = 0;
  std::size_t unabsorbed = 0;  // replicas that hit the event budget
  bool pass = false;           // |z| <= 4 and every replica absorbed
};

/// z = (MC mean absorption time - oracle) / SE over engine replicas.
OracleComparison compare_mc_to_oracle(const CtmcSpec& spec, const McOptions& options);

}  // namespace arw::lab
