#include "arw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "arw/gadget.hpp"
#include "arw/lab.hpp"
#include "arw/report.hpp"

namespace arw::cli {

namespace {

using report::CsvTable;
using report::format_real;

std::string format_int(std::uint64_t x) { return std::to_string(x); }

engine::InteractionRule parse_rule(std::string_view text, double lambda) {
  if (text == "standard") return engine::InteractionRule::standard(lambda);
  if (text.starts_with("crowding:")) {
    std::istringstream in{std::string(text.substr(9))};
    int radius = 0;
    double strength = 0.0;
    char sep = 0;
    if (in >> radius >> sep >> strength && sep == ':' && in.peek() == EOF) {
      return engine::InteractionRule::crowding(lambda, radius, strength);
    }
  }
  throw std::invalid_argument("expected 'standard' or 'crowding:R:strength', got '" +
                              std::string(text) + "'");
}

std::size_t to_size(const Config& cfg, std::string_view key, std::uint64_t min = 1) {
  const auto v = cfg.unsigned_integer(key);
  if (v < min) throw ConfigError("key '" + std::string(key) + "' must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

double nonnegative(const Config& cfg, std::string_view key) {
  const double v = cfg.real(key);
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError("key '" + std::string(key) + "' must be finite and >= 0");
  }
  return v;
}

GraphPtr graph_of(const Config& cfg) {
  return cfg.parsed("graph", [](std::string_view s) { return build_topology(TopologyDescriptor::parse(s)); });
}

paths::PathDistribution paths_of(const Config& cfg) {
  return cfg.parsed("paths", [](std::string_view s) { return paths::PathDistribution::parse(s); });
}

void emit(const Config& cfg, const std::string& body, std::ostream& out, std::string_view key = "out") {
  const std::string& path = cfg.text(key);
  if (path == "-") {
    out << body;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << body;
  if (!file.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

std::string csv_text(const CsvTable& table) {
  std::ostringstream os;
  report::write_csv(os, table);
  return os.str();
}

int cmd_simulate(const Config& cfg, std::ostream& out) {
  const auto graph = graph_of(cfg);
  const auto law = cfg.parsed("law", [](std::string_view s) { return engine::InitialLaw::parse(s); });
  const auto dist = paths_of(cfg);
  const double lambda = nonnegative(cfg, "lambda");
  const auto rule = cfg.parsed("rule", [&](std::string_view s) { return parse_rule(s, lambda); });
  const auto budget = to_size(cfg, "budget");
  const auto stop = cfg.parsed("stop", [&](std::string_view s) { return engine::StopCondition::parse(s, budget); });
  const auto seed = cfg.unsigned_integer("seed");
  const auto reps = to_size(cfg, "reps");
  dist.validate_for(*graph);

  std::vector<engine::RunReport> reports(reps);
  parallel_for(reps, default_thread_count(), [&](std::size_t r) {
    auto sim = engine::init_system(graph, law, dist, rule, seed + r);
    reports[r] = sim.run_until(stop);
  });

  CsvTable table;
  table.config = cfg.echo();
  table.header = {"seed", "stop_reason", "absorbed", "final_time", "n_particles",
                  "n_events", "n_sleeping", "max_odometer"};
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& rep = reports[r];
    table.rows.push_back({format_int(seed + r), std::string(engine::to_string(rep.stop_reason)),
                          rep.absorbed ? "1" : "0", format_real(rep.final_time),
                          format_int(rep.n_particles), format_int(rep.events),
                          format_int(rep.n_sleeping), format_int(rep.max_odometer)});
  }
  emit(cfg, csv_text(table), out);
  return kOk;
}

std::vector<report::HeatCell> heat_cells(const std::vector<lab::SweepRow>& rows) {
  int largest = 0;
  for (const auto& r : rows) largest = std::max(largest, r.length);
  std::vector<report::HeatCell> cells;
  for (const auto& r : rows) {
    if (r.length == largest) cells.push_back({r.zeta, r.lambda, r.mean_events_pp});
  }
  return cells;
}

int cmd_sweep(const Config& cfg, std::ostream& out) {
  lab::SweepConfig sc;
  sc.zetas = cfg.real_list("zeta");
  sc.lambdas = cfg.real_list("lambda");
  for (const auto L : cfg.integer_list("L")) {
    if (L < 1 || L > 1 << 20) throw ConfigError("key 'L': side lengths must be in [1, 2^20]");
    sc.sizes.push_back(static_cast<int>(L));
  }
  sc.graph_family = cfg.text("graph");
  sc.law = cfg.parsed("law", [](std::string_view s) { return lab::parse_law_family(s); });
  sc.dist = paths_of(cfg);
  sc.replicas = to_size(cfg, "reps");
  sc.budget = to_size(cfg, "budget");
  sc.master_seed = cfg.unsigned_integer("seed");
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto rows = lab::estimate_absorption_stats(sc, default_thread_count());
  CsvTable table;
  table.config = cfg.echo();
  table.header = {"zeta", "lambda", "L", "reps", "frac_absorbed", "mean_abs_time",
                  "se_abs_time", "mean_events_pp", "se_events_pp", "budget_exhausted_frac"};
  for (const auto& r : rows) {
    table.rows.push_back({format_real(r.zeta), format_real(r.lambda), std::to_string(r.length),
                          format_int(r.replicas), format_real(r.frac_absorbed),
                          format_real(r.mean_abs_time), format_real(r.se_abs_time),
                          format_real(r.mean_events_pp), format_real(r.se_events_pp),
                          format_real(r.budget_exhausted_frac)});
  }
  emit(cfg, csv_text(table), out);
  if (!cfg.text("svg").empty()) {
    const int largest = std::ranges::max(sc.sizes);
    emit(cfg,
         report::render_heatmap(heat_cells(rows), "mean_events_pp",
                                "events per particle, " + sc.graph_family + " L=" + std::to_string(largest)),
         out, "svg");
  }
  return kOk;
}

int cmd_critical(const Config& cfg, std::ostream& out) {
  lab::CriticalConfig cc;
  cc.lambda = nonnegative(cfg, "lambda");
  const auto L = cfg.integer("L");
  if (L < 1 || L > 1 << 20) throw ConfigError("key 'L' must be in [1, 2^20]");
  cc.length = static_cast<int>(L);
  cc.graph_family = cfg.text("graph");
  cc.dist = paths_of(cfg);
  cc.replicas = to_size(cfg, "reps");
  cc.budget = to_size(cfg, "budget");
  cc.threshold = cfg.real("K");
  cc.bisection_steps = static_cast<int>(to_size(cfg, "iters", 0));
  cc.grid = cfg.real_list("grid");
  cc.master_seed = cfg.unsigned_integer("seed");
  try {
    cc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto est = lab::estimate_critical_density(cc, default_thread_count());
  CsvTable table;
  table.config = cfg.echo();
  table.comments = {
      "estimate: zeta_c=" + format_real(est.zeta_c) + " ci_low=" + format_real(est.ci_low) +
          " ci_high=" + format_real(est.ci_high) + " bracket=" + std::string(lab::to_string(est.bracket)),
      "active: median replica exhausts the budget or mean events per particle > K (heuristic)",
  };
  table.header = {"zeta", "order_parameter", "se", "frac_absorbed", "median_exhausted", "active"};
  for (const auto& p : est.curve) {
    table.rows.push_back({format_real(p.zeta), format_real(p.order_parameter), format_real(p.se),
                          format_real(p.frac_absorbed), p.median_exhausted ? "1" : "0",
                          p.active ? "1" : "0"});
  }
  emit(cfg, csv_text(table), out);
  return kOk;
}

int cmd_oracle(const Config& cfg, std::ostream& out) {
  lab::CtmcSpec spec;
  spec.graph = graph_of(cfg);
  for (const auto v : cfg.integer_list("place")) {
    if (v < 0 || static_cast<std::uint64_t>(v) >= spec.graph->vertex_count()) {
      throw ConfigError("key 'place': vertex " + std::to_string(v) + " is out of range");
    }
    spec.placement.push_back(static_cast<VertexId>(v));
  }
  spec.lambda = nonnegative(cfg, "lambda");
  spec.dist = paths_of(cfg);
  spec.state_cap = to_size(cfg, "cap");
  const auto mc_reps = cfg.unsigned_integer("mc_reps");

  CsvTable table;
  table.config = cfg.echo();
  table.header = {"states", "transient_states", "absorption_probability", "expected_absorption_time",
                  "relative_residual", "solver", "mc_reps", "mc_mean", "mc_se", "z", "status"};
  const auto row = [](const lab::OracleResult& o, std::uint64_t reps, double mean, double se, double z,
                      std::string_view status) {
    return std::vector<std::string>{format_int(o.states), format_int(o.transient_states),
                                    format_real(o.absorption_probability),
                                    format_real(o.expected_absorption_time),
                                    format_real(o.relative_residual), o.dense_solver ? "dense" : "sparse",
                                    format_int(reps), format_real(mean), format_real(se),
                                    format_real(z), std::string(status)};
  };
  if (mc_reps == 0) {
    const auto o = lab::ctmc_oracle(spec);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.rows.push_back(row(o, 0, nan, nan, nan, "oracle-only"));
  } else {
    lab::McOptions mc;
    mc.replicas = mc_reps;
    mc.master_seed = cfg.unsigned_integer("seed");
    mc.budget = to_size(cfg, "budget");
    mc.threads = default_thread_count();
    const auto cmp = lab::compare_mc_to_oracle(spec, mc);
    std::string status(lab::to_string(cmp.status));
    if (cmp.status == lab::ComparisonStatus::Compared) status += cmp.pass ? ":pass" : ":fail";
    table.rows.push_back(row(cmp.oracle, mc_reps, cmp.mc_mean, cmp.mc_se, cmp.z, status));
  }
  emit(cfg, csv_text(table), out);
  return kOk;
}

std::string replica_flags(const gadget::ReplicaStats& r, std::size_t n) {
  std::string flags;
  flags += std::abs(r.mean_Q - r.b_hat) <= 1e-12 ? '1' : '0';
  flags += r.max_q <= 1.0 / static_cast<double>(n) ? '1' : '0';
  flags += r.product_error <= 1e-12 && r.exp_excess <= 1e-12 ? '1' : '0';
  flags += std::abs(r.mean_Zbar - r.eps_hat) <= 1e-12 && r.zbar_below_z ? '1' : '0';
  return flags;
}

int cmd_gadget(const Config& cfg, std::ostream& out) {
  const auto graph = graph_of(cfg);
  if (graph->descriptor().boundary != Boundary::Periodic ||
      (graph->descriptor().kind != TopologyKind::Torus && graph->descriptor().kind != TopologyKind::Cycle)) {
    throw ConfigError("key 'graph': gadget needs a cycle or torus");
  }
  const auto law = cfg.parsed("law", [](std::string_view s) { return engine::InitialLaw::parse(s); });
  const auto dist = paths_of(cfg);
  const double lambda = nonnegative(cfg, "lambda");
  const auto rule = cfg.parsed("rule", [&](std::string_view s) { return parse_rule(s, lambda); });
  gadget::CandidateConfig cc;
  cc.T = cfg.real("T");
  cc.k = static_cast<int>(cfg.integer("k"));
  cc.T_long = cfg.real("Tlong");
  cc.n = to_size(cfg, "n");
  cc.budget = to_size(cfg, "budget");
  try {
    cc.validate(graph->vertex_count());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto reps = to_size(cfg, "reps");

  const auto rep = gadget::run_gadget(graph, law, dist, rule, cc, reps, cfg.unsigned_integer("seed"),
                                      default_thread_count());
  const auto cov = gadget::neighbor_candidate_covariance(graph, rep);

  CsvTable table;
  table.config = cfg.echo();
  table.comments.push_back("pass_flags: mean_Q identity, q <= 1/n, product identity, Zbar identity");
  table.comments.push_back("b_hat=" + format_real(rep.b_hat) + " eps_hat=" + format_real(rep.eps_hat) +
                           " degenerate=" + (rep.degenerate ? "1" : "0"));
  for (const auto& c : rep.bound_checks) {
    table.comments.push_back("check " + c.name + ": lhs=" + format_real(c.lhs) + " rhs=" + format_real(c.rhs) +
                             (c.pass ? " pass" : " FAIL"));
  }
  table.comments.push_back("neighbor candidate covariance (diagnostic): cov=" + format_real(cov.covariance) +
                           " se=" + format_real(cov.se) + " z=" + format_real(cov.z));
  table.header = {"replica", "b_hat", "eps_hat", "mean_Q", "var_Q", "frac_Zu_positive",
                  "poisson_bound_rhs", "pass_flags"};
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    const auto& s = rep.rows[r];
    table.rows.push_back({format_int(r), format_real(s.b_hat), format_real(s.eps_hat), format_real(s.mean_Q),
                          format_real(s.var_Q), format_real(s.frac_Zu_positive),
                          format_real(s.poisson_bound_rhs), replica_flags(s, cc.n)});
  }
  emit(cfg, csv_text(table), out);
  return kOk;
}

struct SelfCheck {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<SelfCheck> self_checks(double fault, std::uint64_t seed) {
  const auto srw = paths::PathDistribution::simple_random_walk();
  const auto standard = engine::InteractionRule::standard(1.0);
  std::vector<SelfCheck> out;

  {
    // One more particle than vertices can never come to rest.
    const auto g = build_topology(TopologyDescriptor::torus(4, 2));
    std::vector<std::uint32_t> counts(16, 1);
    counts[0] = 2;
    bool ever = false;
    for (std::uint64_t s = 0; s < 5; ++s) {
      engine::Simulation sim(g, counts, srw, standard, derive_key(seed, {1, s}));
      ever = ever || sim.run_until(engine::StopCondition::absorbed(200000)).absorbed;
    }
    out.push_back({"pigeonhole", !ever, "17 particles on 16 vertices, 5 runs"});
  }
  {
    const auto g = build_topology(TopologyDescriptor::cycle(6));
    std::size_t violations = 0, absorbed = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
      auto sim = engine::init_system(g, engine::InitialLaw::poisson(0.6), srw,
                                     engine::InteractionRule::standard(2.0), derive_key(seed, {2, s}));
      if (!sim.run_until(engine::StopCondition::absorbed(1000000)).absorbed) continue;
      ++absorbed;
      std::size_t sleepers = 0;
      for (VertexId v = 0; v < 6; ++v) {
        const auto& occ = sim.occupancy(v);
        sleepers += occ.sleeper.has_value();
        violations += occ.active != 0;
      }
      violations += sleepers != sim.particle_count() || sim.particle_count() > 6;
    }
    out.push_back({"absorbed_accounting", violations == 0 && absorbed > 0,
                   std::to_string(absorbed) + " absorbed runs, " + std::to_string(violations) + " violations"});
  }
  {
    lab::McOptions mc;
    mc.replicas = 20000;
    mc.master_seed = derive_key(seed, {3});
    mc.lambda_scale = fault;
    mc.threads = default_thread_count();
    const auto cmp = lab::compare_mc_to_oracle({build_topology(TopologyDescriptor::cycle(3)), {0, 1}, 1.0}, mc);
    out.push_back({"ctmc_oracle", cmp.pass,
                   "exact " + format_real(cmp.oracle.expected_absorption_time) + " mc " +
                       format_real(cmp.mc_mean) + " z " + format_real(cmp.z)});
  }
  {
    const auto rep = gadget::run_gadget(build_topology(TopologyDescriptor::torus(8, 2)),
                                        engine::InitialLaw::poisson(0.5), srw, standard,
                                        {2.0, 2, 6.0, 8}, 20, derive_key(seed, {4}), default_thread_count());
    bool exact = true;
    for (const auto& c : rep.bound_checks) {
      if (c.name != "Z_positive_frequency") exact = exact && c.pass;
    }
    out.push_back({"gadget_identities", exact, "b_hat " + format_real(rep.b_hat)});
  }
  {
    const auto g = build_topology(TopologyDescriptor::torus(6, 2));
    std::vector<engine::RunReport> runs;
    for (std::uint64_t s = 0; s < 200; ++s) {
      auto sim = engine::init_system(g, engine::InitialLaw::poisson(0.5), srw, standard, derive_key(seed, {5, s}));
      auto r = sim.run_until(engine::StopCondition::absorbed(1000000));
      if (r.absorbed) runs.push_back(std::move(r));
    }
    const auto m = gadget::mass_transport_residual(g, runs);
    out.push_back({"mass_transport", m.all_pass(),
                   "row " + format_real(m.ref_row) + " column " + format_real(m.ref_col)});
  }
  return out;
}

int cmd_report(const Config& cfg, std::ostream& out) {
  if (cfg.boolean("check")) {
    const double fault = cfg.real("fault");
    if (!(fault > 0.0)) throw ConfigError("key 'fault' must be > 0");
    const auto checks = self_checks(fault, cfg.unsigned_integer("seed"));
    std::string log = "# config: " + cfg.echo() + "\n";
    bool ok = true;
    for (const auto& c : checks) {
      log += (c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
      ok = ok && c.pass;
    }
    emit(cfg, log, out);
    return ok ? kOk : kCheckFailed;
  }
  if (cfg.text("in").empty() || cfg.text("svg").empty()) {
    throw ConfigError("report needs --check, or both --in and --svg");
  }
  std::ifstream in(cfg.text("in"));
  if (!in) throw std::runtime_error("cannot read '" + cfg.text("in") + "'");
  const auto table = report::read_csv(in);
  const auto metric = cfg.text("metric");
  const auto iz = report::column(table, "zeta");
  const auto il = report::column(table, "lambda");
  const auto im = report::column(table, metric);
  const auto parse = [](const std::string& s) {
    return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
  };
  std::vector<report::HeatCell> cells;
  std::string title = metric;
  if (std::find(table.header.begin(), table.header.end(), "L") != table.header.end()) {
    const auto iL = report::column(table, "L");
    long largest = 0;
    for (const auto& row : table.rows) largest = std::max(largest, std::stol(row[iL]));
    for (const auto& row : table.rows) {
      if (std::stol(row[iL]) == largest) cells.push_back({parse(row[iz]), parse(row[il]), parse(row[im])});
    }
    title += ", L=" + std::to_string(largest);
  } else {
    for (const auto& row : table.rows) cells.push_back({parse(row[iz]), parse(row[il]), parse(row[im])});
  }
  emit(cfg, report::render_heatmap(cells, metric, title), out, "svg");
  return kOk;
}

}  // namespace

std::string usage() {
  std::ostringstream os;
  os << "usage: arw <subcommand> [--key value]... [--config file]\n";
  for (const auto& s : all_schemas()) {
    os << "\n  " << s.subcommand << ": " << s.summary << '\n';
    for (const auto& k : s.keys) {
      os << "    --" << k.name;
      if (k.fallback) {
        os << " (default " << (k.fallback->empty() ? "none" : *k.fallback) << ")";
      } else {
        os << " (required)";
      }
      os << "  " << k.help << '\n';
    }
  }
  os << "\nARW_THREADS caps worker threads. Exit codes: 0 ok, 1 config error, 2 runtime error, 3 check failed.\n";
  return os.str();
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? kConfigError : kOk;
  }
  static const std::vector<std::pair<std::string_view, std::function<int(const Config&, std::ostream&)>>>
      commands{{"simulate", cmd_simulate}, {"sweep", cmd_sweep},   {"critical", cmd_critical},
               {"oracle", cmd_oracle},     {"gadget", cmd_gadget}, {"report", cmd_report}};
  try {
    const Config cfg = parse_config(args);
    for (const auto& [name, fn] : commands) {
      if (name == cfg.subcommand()) return fn(cfg, out);
    }
    throw ConfigError("unknown subcommand '" + args[0] + "'");
  } catch (const ConfigError& e) {
    err << "arw: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "arw: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "arw: error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace arw::cli
