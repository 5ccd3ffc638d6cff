#include "arw/lab.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace arw::lab {

namespace {

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (const double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    out.se = 0.0;
    return out;
  }
  double ss = 0.0;
  for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

LawFamily parse_law_family(std::string_view text) {
  if (text == "poisson") return LawFamily::Poisson;
  if (text == "bern") return LawFamily::Bernoulli;
  if (text == "det") return LawFamily::Deterministic;
  throw std::invalid_argument("law family must be poisson, bern or det, got '" +
                              std::string(text) + "'");
}

std::string_view to_string(LawFamily family) {
  switch (family) {
    case LawFamily::Poisson: return "poisson";
    case LawFamily::Bernoulli: return "bern";
    case LawFamily::Deterministic: return "det";
  }
  return "";
}

engine::InitialLaw make_law(LawFamily family, double zeta) {
  switch (family) {
    case LawFamily::Poisson: return engine::InitialLaw::poisson(zeta);
    case LawFamily::Bernoulli: return engine::InitialLaw::bernoulli(zeta);
    case LawFamily::Deterministic:
      if (zeta != std::floor(zeta)) throw std::invalid_argument("det law needs integer zeta");
      return engine::InitialLaw::deterministic(static_cast<int>(zeta));
  }
  throw std::invalid_argument("unknown law family");
}

TopologyDescriptor family_descriptor(std::string_view family, int length) {
  if (family == "cycle") return TopologyDescriptor::cycle(length);
  if (family.starts_with("torus:")) {
    int dim = 0;
    const auto text = family.substr(6);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), dim);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw std::invalid_argument("graph family: bad torus dimension in '" + std::string(family) + "'");
    }
    return TopologyDescriptor::torus(length, dim);
  }
  throw std::invalid_argument("graph family must be 'cycle' or 'torus:dim', got '" +
                              std::string(family) + "'");
}

void SweepConfig::validate() const {
  if (zetas.empty()) throw std::invalid_argument("sweep: zetas is empty");
  if (lambdas.empty()) throw std::invalid_argument("sweep: lambdas is empty");
  if (sizes.empty()) throw std::invalid_argument("sweep: sizes is empty");
  if (replicas < 1) throw std::invalid_argument("sweep: reps must be >= 1");
  if (budget < 1) throw std::invalid_argument("sweep: budget must be >= 1");
  for (const double z : zetas) make_law(law, z);
  for (const double l : lambdas) {
    if (!(l >= 0.0)) throw std::invalid_argument("sweep: lambdas must be >= 0");
  }
  for (const int L : sizes) family_descriptor(graph_family, L).validate();
  dist.validate();
}

std::vector<ReplicaOutcome> run_cell(const GraphPtr& graph, const engine::InitialLaw& law,
                                     const paths::PathDistribution& dist, double lambda,
                                     std::size_t replicas, std::uint64_t budget,
                                     std::uint64_t master_seed, std::uint64_t cell,
                                     std::size_t threads) {
  std::vector<ReplicaOutcome> out(replicas);
  const auto rule = engine::InteractionRule::standard(lambda);
  parallel_for(replicas, threads, [&](std::size_t r) {
    auto sim = engine::init_system(graph, law, dist, rule, derive_key(master_seed, {cell, r}));
    const auto report = sim.run_until(engine::StopCondition::absorbed(budget));
    ReplicaOutcome& o = out[r];
    o.absorbed = report.absorbed;
    o.exhausted = report.stop_reason == engine::StopReason::EventBudget;
    o.absorption_time = report.final_time;
    o.particles = report.n_particles;
    o.events_per_particle =
        report.n_particles > 0 ? static_cast<double>(report.events) / static_cast<double>(report.n_particles) : 0.0;
  });
  return out;
}

SweepRow summarize_cell(double zeta, double lambda, int length,
                        std::span<const ReplicaOutcome> outcomes) {
  SweepRow row;
  row.zeta = zeta;
  row.lambda = lambda;
  row.length = length;
  row.replicas = outcomes.size();
  std::vector<double> times, epp;
  std::size_t absorbed = 0, exhausted = 0;
  for (const auto& o : outcomes) {
    if (o.absorbed) {
      ++absorbed;
      times.push_back(o.absorption_time);
    }
    exhausted += o.exhausted;
    epp.push_back(o.events_per_particle);
  }
  const double n = static_cast<double>(outcomes.size());
  row.frac_absorbed = static_cast<double>(absorbed) / n;
  row.budget_exhausted_frac = static_cast<double>(exhausted) / n;
  row.all_exhausted = exhausted == outcomes.size();
  const auto t = mean_se(times);
  row.mean_abs_time = t.mean;
  row.se_abs_time = t.se;
  const auto e = mean_se(epp);
  row.mean_events_pp = e.mean;
  row.se_events_pp = e.se;
  return row;
}

std::vector<SweepRow> estimate_absorption_stats(const SweepConfig& cfg, std::size_t threads) {
  cfg.validate();
  std::vector<SweepRow> rows;
  std::map<int, GraphPtr> graphs;
  for (const int L : cfg.sizes) graphs[L] = build_topology(family_descriptor(cfg.graph_family, L));
  std::uint64_t cell = 0;
  for (const double zeta : cfg.zetas) {
    const auto law = make_law(cfg.law, zeta);
    for (const double lambda : cfg.lambdas) {
      for (const int L : cfg.sizes) {
        const auto outcomes = run_cell(graphs[L], law, cfg.dist, lambda, cfg.replicas, cfg.budget,
                                       cfg.master_seed, cell++, threads);
        rows.push_back(summarize_cell(zeta, lambda, L, outcomes));
      }
    }
  }
  return rows;
}

FixationDiagnostics fixation_diagnostics(std::span<const engine::RunReport> reports) {
  FixationDiagnostics d;
  std::size_t fixated_vertices = 0, fixated_particles = 0;
  for (const auto& r : reports) {
    const std::size_t n = r.vertex_fixation_time.size();
    std::vector<std::uint8_t> all_fixated(n, 1);
    for (const auto& p : r.particles) {
      if (p.mode == engine::Mode::Exited) continue;
      ++d.particles;
      if (p.mode == engine::Mode::Sleeping) {
        ++fixated_particles;
      } else {
        all_fixated[p.origin.vertex] = 0;
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      const bool vertex_fixated = r.vertex_fixation_time[v].has_value();
      fixated_vertices += vertex_fixated;
      ++d.joint[vertex_fixated][all_fixated[v]];
    }
    d.vertices += n;
  }
  if (d.vertices > 0) {
    d.vertex_fixated_fraction = static_cast<double>(fixated_vertices) / static_cast<double>(d.vertices);
  }
  d.particle_fixated_fraction =
      d.particles > 0 ? static_cast<double>(fixated_particles) / static_cast<double>(d.particles) : 1.0;
  return d;
}

void CriticalConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("critical: lambda must be >= 0");
  family_descriptor(graph_family, length).validate();
  if (replicas < 1) throw std::invalid_argument("critical: reps must be >= 1");
  if (budget < 1) throw std::invalid_argument("critical: budget must be >= 1");
  if (!(threshold > 0.0)) throw std::invalid_argument("critical: K must be > 0");
  if (bisection_steps < 0) throw std::invalid_argument("critical: iters must be >= 0");
  if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()) || !(grid.front() > 0.0)) {
    throw std::invalid_argument("critical: grid must be nonempty, increasing and positive");
  }
  dist.validate();
}

std::string_view to_string(Bracket bracket) {
  switch (bracket) {
    case Bracket::Found: return "found";
    case Bracket::AllActive: return "all-active";
    case Bracket::AllAbsorbed: return "all-absorbed";
  }
  return "";
}

CriticalEstimate estimate_critical_density(const CriticalConfig& cfg, std::size_t threads) {
  cfg.validate();
  const auto graph = build_topology(family_descriptor(cfg.graph_family, cfg.length));
  CriticalEstimate est;

  const auto evaluate = [&](double zeta) {
    const auto outcomes =
        run_cell(graph, engine::InitialLaw::poisson(zeta), cfg.dist, cfg.lambda, cfg.replicas,
                 cfg.budget, cfg.master_seed, std::bit_cast<std::uint64_t>(zeta), threads);
    const auto row = summarize_cell(zeta, cfg.lambda, cfg.length, outcomes);
    std::size_t exhausted = 0;
    for (const auto& o : outcomes) exhausted += o.exhausted;
    CurvePoint p;
    p.zeta = zeta;
    p.order_parameter = row.mean_events_pp;
    p.se = row.se_events_pp;
    p.frac_absorbed = row.frac_absorbed;
    p.median_exhausted = 2 * exhausted > outcomes.size();
    p.active = p.median_exhausted || p.order_parameter > cfg.threshold;
    est.curve.push_back(p);
    return p.active;
  };

  std::size_t first_active = cfg.grid.size();
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (evaluate(cfg.grid[i]) && first_active == cfg.grid.size()) first_active = i;
  }

  if (first_active == 0) {
    est.bracket = Bracket::AllActive;
    est.zeta_c = 0.0;
    est.ci_low = 0.0;
    est.ci_high = cfg.grid.front();
  } else if (first_active == cfg.grid.size()) {
    est.bracket = Bracket::AllAbsorbed;
    est.zeta_c = cfg.grid.back();
    est.ci_low = cfg.grid.back();
    est.ci_high = std::numeric_limits<double>::infinity();
  } else {
    double lo = cfg.grid[first_active - 1];
    double hi = cfg.grid[first_active];
    for (int step = 0; step < cfg.bisection_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      (evaluate(mid) ? hi : lo) = mid;
    }
    est.bracket = Bracket::Found;
    est.zeta_c = 0.5 * (lo + hi);
    // Widen the bracket to the nearest densities whose classification is
    // clear at two standard errors.
    est.ci_low = 0.0;
    est.ci_high = std::numeric_limits<double>::infinity();
    for (const auto& p : est.curve) {
      const bool inactive = !p.median_exhausted && p.order_parameter + 2.0 * p.se <= cfg.threshold;
      const bool active = p.median_exhausted || p.order_parameter - 2.0 * p.se > cfg.threshold;
      if (p.zeta <= lo && inactive) est.ci_low = std::max(est.ci_low, p.zeta);
      if (p.zeta >= hi && active) est.ci_high = std::min(est.ci_high, p.zeta);
    }
  }
  std::sort(est.curve.begin(), est.curve.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.zeta < b.zeta; });
  return est;
}

std::string_view to_string(ComparisonStatus status) {
  switch (status) {
    case ComparisonStatus::Compared: return "compared";
    case ComparisonStatus::SkippedNeverAbsorbs: return "skipped-never-absorbs";
    case ComparisonStatus::SkippedZeroVariance: return "skipped-zero-variance";
  }
  return "";
}

OracleComparison compare_mc_to_oracle(const CtmcSpec& spec, const McOptions& options) {
  OracleComparison cmp;
  cmp.oracle = ctmc_oracle(spec);
  cmp.replicas = options.replicas;
  if (cmp.oracle.absorption_probability < 1.0 - 1e-9 ||
      !std::isfinite(cmp.oracle.expected_absorption_time)) {
    cmp.status = ComparisonStatus::SkippedNeverAbsorbs;
    return cmp;
  }

  const auto rule = engine::InteractionRule::standard(spec.lambda * options.lambda_scale);
  std::vector<double> times(options.replicas, 0.0);
  std::vector<std::uint8_t> absorbed(options.replicas, 0);
  parallel_for(options.replicas, options.threads, [&](std::size_t r) {
    auto sim = engine::init_with_placement(spec.graph, spec.placement, spec.dist, rule,
                                           derive_key(options.master_seed, {r}));
    const auto report = sim.run_until(engine::StopCondition::absorbed(options.budget));
    times[r] = report.final_time;
    absorbed[r] = report.absorbed;
  });
  std::vector<double> absorbed_times;
  for (std::size_t r = 0; r < options.replicas; ++r) {
    if (absorbed[r]) {
      absorbed_times.push_back(times[r]);
    } else {
      ++cmp.unabsorbed;
    }
  }
  const auto stats = mean_se(absorbed_times);
  cmp.mc_mean = stats.mean;
  cmp.mc_se = stats.se;
  if (!(stats.se > 0.0)) {
    cmp.status = ComparisonStatus::SkippedZeroVariance;
    cmp.pass = cmp.unabsorbed == 0 && stats.mean == cmp.oracle.expected_absorption_time;
    return cmp;
  }
  cmp.z = (stats.mean - cmp.oracle.expected_absorption_time) / stats.se;
  cmp.pass = cmp.unabsorbed == 0 && std::abs(cmp.z) <= 4.0;
  return cmp;
}

}  // namespace arw::lab
