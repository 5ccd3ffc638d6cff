// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. The performance smoke test only warns.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "arw/cli.hpp"
#include "arw/gadget.hpp"
#include "arw/lab.hpp"

using namespace arw;

namespace {

const auto kSrw = paths::PathDistribution::simple_random_walk();
int failures = 0;

void verdict(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error(const std::vector<double>& xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

void pigeonhole() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = build_topology(TopologyDescriptor::torus(10, 2));
  std::vector<std::uint32_t> counts(100, 1);
  counts[0] = 2;
  int absorbed = 0;
  std::uint64_t events = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    engine::Simulation sim(g, counts, kSrw, engine::InteractionRule::standard(1.0), seed);
    const auto r = sim.run_until(engine::StopCondition::absorbed(1'000'000));
    absorbed += r.absorbed;
    events += r.events;
  }
  const double secs = seconds_since(t0);
  verdict(1, "pigeonhole non-fixation", absorbed == 0 && secs < 10.0,
          fmt("101 particles on Torus(10,2), 20 seeds x 1e6 events: %d absorbed, %llu events, %.1f s (limit 10)",
              absorbed, static_cast<unsigned long long>(events), secs));
}

void absorbed_accounting() {
  const std::vector<const char*> graphs{"cycle:3",   "cycle:5",    "cycle:8",      "torus:3:2",   "torus:4:2",
                                        "complete:3", "complete:5", "treeball:3:2", "treeball:4:2"};
  Rng pick(derive_key(2024, {2}));
  std::size_t absorbed = 0, attempts = 0, violations = 0;
  double max_density = 0.0;
  while (absorbed < 1000 && attempts < 10000) {
    ++attempts;
    const auto g = build_topology(TopologyDescriptor::parse(graphs[pick.below(graphs.size())]));
    engine::InitialLaw law = engine::InitialLaw::deterministic(1);
    switch (pick.below(3)) {
      case 0: law = engine::InitialLaw::poisson(0.2 + 0.8 * pick.uniform()); break;
      case 1: law = engine::InitialLaw::bernoulli(0.2 + 0.8 * pick.uniform()); break;
      default: break;
    }
    const double lambda = 0.5 + 3.5 * pick.uniform();
    auto sim = engine::init_system(g, law, kSrw, engine::InteractionRule::standard(lambda), pick.below(1u << 30));
    if (!sim.run_until(engine::StopCondition::absorbed(1'000'000)).absorbed) continue;
    ++absorbed;
    std::vector<std::size_t> sleeping(g->vertex_count(), 0), active(g->vertex_count(), 0);
    std::size_t remaining = 0;
    for (const auto& p : sim.particles()) {
      if (p.mode == engine::Mode::Exited) continue;
      ++remaining;
      (p.mode == engine::Mode::Sleeping ? sleeping : active)[p.position] += 1;
    }
    std::size_t sites = 0;
    for (VertexId v = 0; v < g->vertex_count(); ++v) {
      if (g->is_sink(v)) continue;
      ++sites;
      violations += active[v] != 0 || sleeping[v] > 1;
      violations += (sim.occupancy(v).total() > 0) != sim.occupancy(v).sleeper.has_value();
    }
    violations += remaining > sites;
    max_density = std::max(max_density, static_cast<double>(remaining) / static_cast<double>(sites));
  }
  verdict(2, "absorbed-state accounting", absorbed >= 1000 && violations == 0 && max_density <= 1.0,
          fmt("%zu absorbed runs (%zu attempts): %zu violations, max fixated density %.3f", absorbed, attempts,
              violations, max_density));
}

void ctmc_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = build_topology(TopologyDescriptor::cycle(3));
  lab::McOptions mc;
  mc.replicas = 100'000;
  mc.master_seed = 33;
  mc.threads = default_thread_count();
  const auto two = lab::compare_mc_to_oracle({g, {0, 1}, 1.0}, mc);
  mc.master_seed = 34;
  const auto one = lab::compare_mc_to_oracle({g, {0}, 1.0}, mc);
  const double z_one = (one.mc_mean - 1.0) / one.mc_se;
  const double secs = seconds_since(t0);
  const bool pass = two.pass && std::abs(z_one) <= 4.0 && one.unabsorbed == 0 &&
                    std::abs(one.oracle.expected_absorption_time - 1.0) < 1e-12 && secs < 60.0;
  verdict(3, "CTMC oracle equivalence", pass,
          fmt("2 particles: exact %.6f, MC %.6f +- %.6f (z %.2f); 1 particle: MC %.5f +- %.5f vs 1 (z %.2f); "
              "%.1f s (limit 60)",
              two.oracle.expected_absorption_time, two.mc_mean, two.mc_se, two.z, one.mc_mean, one.mc_se, z_one,
              secs));
}

gadget::GadgetReport gadget_run(double T, double T_long, std::size_t n) {
  const auto g = build_topology(TopologyDescriptor::torus(32, 2));
  return gadget::run_gadget(g, engine::InitialLaw::poisson(0.5), kSrw, engine::InteractionRule::standard(1.0),
                            {T, 3, T_long, n}, 100, 4242, default_thread_count());
}

const gadget::BoundCheck& check_named(const std::vector<gadget::BoundCheck>& checks, const std::string& name) {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  std::fprintf(stderr, "missing check %s\n", name.c_str());
  std::abort();
}

void gadget_criteria() {
  const std::vector<std::size_t> ns{4, 16, 64};
  std::vector<gadget::GadgetReport> reports;
  for (const auto n : ns) reports.push_back(gadget_run(5.0, 10.0, n));

  {
    double identity = 0.0;
    bool q_ok = true;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto exact = gadget::check_exact_identity(reports[i]);
      identity = std::max(identity, check_named(exact, "mean_Q_equals_b_hat").lhs);
      q_ok = q_ok && check_named(exact, "q_at_most_1_over_n").pass;
    }
    verdict(4, "gadget exact identity", identity <= 1e-12 && q_ok,
            fmt("Torus(32,2), 100 replicas, n in {4,16,64}: max |mean_u Q - b_hat| = %.3g (tol 1e-12), "
                "q <= 1/n %s, b_hat %.4f",
                identity, q_ok ? "holds" : "VIOLATED", reports[1].b_hat));
  }
  {
    std::vector<double> medians;
    for (const auto& r : reports) {
      std::vector<double> v;
      for (const auto& row : r.rows) v.push_back(row.var_Q);
      medians.push_back(median(v));
    }
    const bool pass = medians[0] > medians[1] && medians[1] > medians[2];
    verdict(5, "Var_u Q decreases in n", pass,
            fmt("median Var_u(Q): n=4 %.5f, n=16 %.5f, n=64 %.5f", medians[0], medians[1], medians[2]));
  }
  {
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto checks = gadget::check_poisson_bound(reports[i]);
      const auto& product = check_named(checks, "product_identity");
      const auto& dom = check_named(checks, "exp_domination");
      const auto& freq = check_named(checks, "Z_positive_frequency");
      pass = pass && product.pass && dom.pass && freq.pass;
      detail += fmt("%sn=%zu: P(Z>0) %.4f >= %.4f, product err %.2g", i ? "; " : "", ns[i], freq.lhs, freq.rhs,
                    product.lhs);
    }
    verdict(6, "Z(u) > 0 frequency and product identity", pass, detail);
  }
  {
    // Horizon T = 2 so that every look-ahead in {5, 10, 20} is nondegenerate.
    std::vector<gadget::GadgetReport> look;
    for (const double tl : {5.0, 10.0, 20.0}) look.push_back(gadget_run(2.0, tl, 16));
    double identity = 0.0;
    bool monotone = true;
    std::string detail;
    for (std::size_t i = 0; i < look.size(); ++i) {
      identity = std::max(identity, check_named(gadget::check_bad_candidates(look[i]), "mean_Zbar_equals_eps_hat").lhs);
      detail += fmt("eps(Tlong=%g) %.5f; ", look[i].config.T_long, look[i].eps_hat);
      if (i == 0) continue;
      std::vector<double> diff;
      for (std::size_t r = 0; r < look[i].rows.size(); ++r) {
        diff.push_back(look[i].rows[r].eps_hat - look[i - 1].rows[r].eps_hat);
      }
      monotone = monotone && mean(diff) <= 3.0 * standard_error(diff);
    }
    const auto degenerate = gadget_run(5.0, 5.0, 16);
    verdict(7, "bad candidates: Zbar identity and eps monotone in Tlong", identity <= 1e-12 && monotone &&
                                                                               degenerate.eps_hat == 0.0,
            detail + fmt("max |mean_u Zbar - eps| %.3g; T=2, k=3, n=16; Tlong=T gives eps %g (degenerate)",
                         identity, degenerate.eps_hat));
  }
}

void mass_transport() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = build_topology(TopologyDescriptor::torus(16, 2));
  const std::size_t runs = 1000;
  std::vector<engine::RunReport> reports(runs);
  parallel_for(runs, default_thread_count(), [&](std::size_t r) {
    auto sim = engine::init_system(g, engine::InitialLaw::poisson(0.5), kSrw, engine::InteractionRule::standard(1.0),
                                   derive_key(88, {r}));
    reports[r] = sim.run_until(engine::StopCondition::absorbed(50'000'000));
  });
  std::vector<engine::RunReport> absorbed;
  for (auto& r : reports) {
    if (r.absorbed) absorbed.push_back(std::move(r));
  }
  const auto m = gadget::mass_transport_residual(g, absorbed);
  const auto& rc = check_named(m.checks, "row_equals_column");
  const auto& col = check_named(m.checks, "column_at_most_one");
  const auto& den = check_named(m.checks, "row_equals_density");
  verdict(8, "mass transport residual", m.all_pass() && !absorbed.empty(),
          fmt("Torus(16,2), %zu/%zu absorbed runs: |row - col| %.4f <= %.4f, max column %.3f <= %.3f, "
              "|row - density| %.4f <= %.4f (row %.4f, density %.4f); %.1f s",
              absorbed.size(), runs, rc.lhs, rc.rhs, col.lhs, col.rhs, den.lhs, den.rhs, m.ref_row, m.density,
              seconds_since(t0)));
}

void critical_density() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<lab::CriticalEstimate> est;
  const std::vector<double> lambdas{0.25, 1.0, 4.0};
  std::string detail;
  bool bound = true;
  for (const double lambda : lambdas) {
    lab::CriticalConfig cfg;
    cfg.lambda = lambda;
    cfg.master_seed = 99;
    est.push_back(lab::estimate_critical_density(cfg, default_thread_count()));
    const auto& e = est.back();
    bound = bound && e.bracket == lab::Bracket::Found && e.zeta_c <= 1.0 + (e.zeta_c - e.ci_low);
    detail += fmt("lambda %g: zeta_c %.4f [%.3f, %.3f]; ", lambda, e.zeta_c, e.ci_low, e.ci_high);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < est.size(); ++i) {
    monotone = monotone && (est[i].zeta_c >= est[i - 1].zeta_c || est[i].ci_high >= est[i - 1].ci_low);
  }
  const lab::CriticalConfig base;
  const auto g = build_topology(TopologyDescriptor::cycle(base.length));
  const auto order = [&](double zeta) {
    const auto out = lab::run_cell(g, engine::InitialLaw::poisson(zeta), kSrw, 0.25, base.replicas, base.budget, 99,
                                   std::bit_cast<std::uint64_t>(zeta), default_thread_count());
    return lab::summarize_cell(zeta, 0.25, base.length, out).mean_events_pp;
  };
  const double low = order(0.2), high = order(0.95);
  const double secs = seconds_since(t0);
  verdict(9, "critical density bound", bound && monotone && high >= 10.0 * low && secs < 600.0,
          detail + fmt("order parameter at lambda 0.25: %.1f (zeta 0.95) vs %.1f (zeta 0.2), ratio %.0f; %.0f s",
                       high, low, high / low, secs));
}

void determinism() {
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--graph", "torus:8:2", "--law", "poisson:0.8", "--lambda", "0.5", "--reps", "6", "--seed", "5"},
      {"sweep", "--zeta", "0.3,0.7", "--lambda", "0.5,2", "--L", "16,32", "--reps", "6", "--seed", "5"},
      {"critical", "--lambda", "1", "--L", "48", "--reps", "6", "--grid", "0.3,0.9", "--iters", "2", "--seed", "5"},
      {"oracle", "--graph", "cycle:4", "--place", "0,1,2", "--lambda", "1", "--mc_reps", "3000", "--seed", "5"},
      {"gadget", "--graph", "torus:8:2", "--lambda", "1", "--T", "3", "--k", "2", "--Tlong", "6", "--n", "8",
       "--reps", "8", "--seed", "5"},
      {"report", "--check", "--seed", "5"},
  };
  std::size_t identical = 0;
  for (const auto& cmd : commands) {
    std::string outputs[2];
    for (int pass = 0; pass < 2; ++pass) {
      setenv("ARW_THREADS", pass == 0 ? "1" : "3", 1);
      std::ostringstream out, err;
      const int code = cli::run(cmd, out, err);
      outputs[pass] = code == cli::kOk ? out.str() : "exit " + std::to_string(code) + err.str();
    }
    identical += outputs[0] == outputs[1] && outputs[0].starts_with("# config:");
  }
  unsetenv("ARW_THREADS");
  verdict(10, "byte-identical output", identical == commands.size(),
          fmt("%zu/%zu subcommands identical across two runs (1 and 3 worker threads)", identical, commands.size()));
}

void performance() {
  // The system absorbs after ~10^5 events, so fresh replicas continue the count.
  const auto g = build_topology(TopologyDescriptor::torus(128, 2));
  const std::uint64_t target = 1'000'000;
  std::uint64_t events = 0, replicas = 0;
  double secs = 0.0;
  while (events < target) {
    auto sim = engine::init_system(g, engine::InitialLaw::poisson(0.5), kSrw,
                                   engine::InteractionRule::standard(1.0), ++replicas);
    const auto t0 = std::chrono::steady_clock::now();
    events += sim.run_until(engine::StopCondition::events(target - events)).events;
    secs += seconds_since(t0);
  }
  std::printf("[%s] 11 performance smoke: %llu events on Torus(128,2) (%llu replicas) in %.2f s (target 5 s)\n",
              secs < 5.0 ? "PASS" : "WARN", static_cast<unsigned long long>(events),
              static_cast<unsigned long long>(replicas), secs);
}

}  // namespace

int main() {
  pigeonhole();
  absorbed_accounting();
  ctmc_equivalence();
  gadget_criteria();
  mass_transport();
  critical_density();
  determinism();
  performance();
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
