#include "arw/gadget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arw::gadget {

namespace {

struct ReplicaFields {
  ReplicaStats stats;
  std::vector<double> Q;
  std::vector<std::uint32_t> Z;
  std::vector<std::uint32_t> Zbar;
  std::vector<std::uint8_t> candidate;
  std::vector<std::uint8_t> bad;
};

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

ReplicaFields run_replica(const GraphPtr& graph, const engine::InitialLaw& law,
                          const paths::PathDistribution& dist, const engine::InteractionRule& rule,
                          const CandidateConfig& cfg, std::uint64_t key) {
  const std::size_t nv = graph->vertex_count();
  const double inv_n = 1.0 / static_cast<double>(cfg.n);
  auto sim = engine::init_system(graph, law, dist, rule, key);
  Rng marks(derive_key(key, {stream_tag::gadget}));

  std::vector<std::optional<engine::ParticleId>> first(nv);
  std::vector<std::vector<VertexId>> prefix(nv);
  std::vector<VertexId> mark(nv);
  for (VertexId v = 0; v < nv; ++v) {
    const auto z = static_cast<std::size_t>(marks.below(cfg.n));
    first[v] = sim.find({v, 0});
    if (!first[v]) continue;
    auto p = sim.putative_first_distinct(*first[v], cfg.n);
    if (!p.complete) throw std::invalid_argument("run_gadget: putative path exited the graph");
    prefix[v] = std::move(p.vertices);
    mark[v] = prefix[v][z];
  }

  const auto check_budget = [&](const engine::RunReport& r) {
    if (r.stop_reason == engine::StopReason::EventBudget) {
      throw std::runtime_error("run_gadget: event budget exhausted before the horizon");
    }
  };
  check_budget(sim.run_until({cfg.T, cfg.budget}));
  std::vector<std::uint64_t> jumps_at_T(nv, 0);
  for (VertexId v = 0; v < nv; ++v) {
    if (first[v]) jumps_at_T[v] = sim.particles()[*first[v]].jumps_made;
  }
  if (!cfg.degenerate()) check_budget(sim.run_until({cfg.T_long, cfg.budget}));

  ReplicaFields out;
  out.Q.assign(nv, 0.0);
  out.Z.assign(nv, 0);
  out.Zbar.assign(nv, 0);
  out.candidate.assign(nv, 0);
  out.bad.assign(nv, 0);
  std::vector<double> product(nv, 1.0);
  std::vector<std::uint32_t> cover(nv, 0);
  std::size_t n_candidates = 0, n_bad = 0;
  for (VertexId v = 0; v < nv; ++v) {
    if (!first[v] || jumps_at_T[v] < static_cast<std::uint64_t>(cfg.k)) continue;
    out.candidate[v] = 1;
    ++n_candidates;
    for (const VertexId u : prefix[v]) {
      out.Q[u] += inv_n;
      product[u] *= 1.0 - inv_n;
      ++cover[u];
    }
    ++out.Z[mark[v]];
    if (!cfg.degenerate() && sim.particles()[*first[v]].jumps_made == jumps_at_T[v]) {
      out.bad[v] = 1;
      ++n_bad;
      ++out.Zbar[mark[v]];
    }
  }

  ReplicaStats& s = out.stats;
  const double size = static_cast<double>(nv);
  s.b_hat = static_cast<double>(n_candidates) / size;
  s.eps_hat = static_cast<double>(n_bad) / size;
  s.max_q = n_candidates > 0 ? inv_n : 0.0;
  double sum_q = 0.0, sum_exp = 0.0, zbar_total = 0.0;
  std::size_t positive = 0;
  for (VertexId u = 0; u < nv; ++u) {
    sum_q += out.Q[u];
    sum_exp += std::exp(-out.Q[u]);
    zbar_total += out.Zbar[u];
    positive += out.Z[u] > 0;
    s.zbar_below_z = s.zbar_below_z && out.Zbar[u] <= out.Z[u];
    const double closed_form = std::pow(1.0 - inv_n, static_cast<double>(cover[u]));
    s.product_error = std::max(s.product_error, std::abs(product[u] - closed_form));
    s.exp_excess = std::max(s.exp_excess, product[u] - std::exp(-out.Q[u]));
  }
  s.mean_Q = sum_q / size;
  double ss = 0.0;
  for (const double q : out.Q) ss += (q - s.mean_Q) * (q - s.mean_Q);
  s.var_Q = ss / size;
  s.mean_Zbar = zbar_total / size;
  s.frac_Zu_positive = static_cast<double>(positive) / size;
  s.poisson_bound_rhs = 1.0 - sum_exp / size;
  return out;
}

}  // namespace

void CandidateConfig::validate(std::size_t vertex_count) const {
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("gadget: T must be finite and >= 0");
  if (!(T_long >= T) || !std::isfinite(T_long)) {
    throw std::invalid_argument("gadget: Tlong must be finite and >= T");
  }
  if (k < 1) throw std::invalid_argument("gadget: k must be >= 1");
  if (n < 1 || n > vertex_count) {
    throw std::invalid_argument("gadget: n must be in [1, " + std::to_string(vertex_count) + "]");
  }
  if (budget < 1) throw std::invalid_argument("gadget: budget must be >= 1");
}

bool GadgetReport::all_pass() const {
  return std::all_of(bound_checks.begin(), bound_checks.end(),
                     [](const BoundCheck& c) { return c.pass; });
}

GadgetReport run_gadget(const GraphPtr& graph, const engine::InitialLaw& law,
                        const paths::PathDistribution& dist, const engine::InteractionRule& rule,
                        const CandidateConfig& cfg, std::size_t replicas, std::uint64_t seed,
                        std::size_t threads) {
  if (!graph) throw std::invalid_argument("run_gadget: null graph");
  if (graph->descriptor().boundary != Boundary::Periodic || !graph->transitive_by_construction()) {
    throw std::invalid_argument("run_gadget: graph must be periodic and vertex-transitive");
  }
  cfg.validate(graph->vertex_count());
  law.validate();
  dist.validate_for(*graph);
  if (replicas < 1) throw std::invalid_argument("run_gadget: reps must be >= 1");

  std::vector<ReplicaFields> fields(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    fields[r] = run_replica(graph, law, dist, rule, cfg, derive_key(seed, {r}));
  });

  const std::size_t nv = graph->vertex_count();
  GadgetReport report;
  report.config = cfg;
  report.vertices = nv;
  report.replicas = replicas;
  report.degenerate = cfg.degenerate();
  report.Q.assign(nv, 0.0);
  report.Z.assign(nv, 0);
  report.Zbar.assign(nv, 0);
  for (auto& f : fields) {
    report.rows.push_back(f.stats);
    report.b_hat += f.stats.b_hat;
    report.eps_hat += f.stats.eps_hat;
    for (std::size_t u = 0; u < nv; ++u) {
      report.Q[u] += f.Q[u];
      report.Z[u] += f.Z[u];
      report.Zbar[u] += f.Zbar[u];
    }
    report.candidates.push_back(std::move(f.candidate));
    report.bad.push_back(std::move(f.bad));
  }
  const double reps = static_cast<double>(replicas);
  report.b_hat /= reps;
  report.eps_hat /= reps;
  for (double& q : report.Q) q /= reps;

  for (auto* check : {&check_exact_identity, &check_poisson_bound, &check_bad_candidates}) {
    for (auto& c : check(report)) report.bound_checks.push_back(std::move(c));
  }
  return report;
}

std::vector<BoundCheck> check_exact_identity(const GadgetReport& report) {
  double identity = 0.0, max_q = 0.0;
  for (const auto& r : report.rows) {
    identity = std::max(identity, std::abs(r.mean_Q - r.b_hat));
    max_q = std::max(max_q, r.max_q);
  }
  const double bound = 1.0 / static_cast<double>(report.config.n);
  return {
      {"mean_Q_equals_b_hat", identity, 1e-12, identity <= 1e-12},
      {"q_at_most_1_over_n", max_q, bound, max_q <= bound},
  };
}

std::vector<BoundCheck> check_poisson_bound(const GadgetReport& report) {
  double product = 0.0, excess = 0.0, freq = 0.0, rhs = 0.0;
  std::vector<double> diff;
  for (const auto& r : report.rows) {
    product = std::max(product, r.product_error);
    excess = std::max(excess, r.exp_excess);
    freq += r.frac_Zu_positive;
    rhs += r.poisson_bound_rhs;
    diff.push_back(r.frac_Zu_positive - r.poisson_bound_rhs);
  }
  const double reps = static_cast<double>(std::max<std::size_t>(report.rows.size(), 1));
  freq /= reps;
  rhs /= reps;
  const double lower = rhs - 3.0 * standard_error(diff);
  return {
      {"product_identity", product, 1e-12, product <= 1e-12},
      {"exp_domination", excess, 1e-12, excess <= 1e-12},
      {"Z_positive_frequency", freq, lower, freq >= lower},
  };
}

std::vector<BoundCheck> check_bad_candidates(const GadgetReport& report) {
  double identity = 0.0, violations = 0.0;
  for (const auto& r : report.rows) {
    identity = std::max(identity, std::abs(r.mean_Zbar - r.eps_hat));
    violations += !r.zbar_below_z;
  }
  return {
      {"mean_Zbar_equals_eps_hat", identity, 1e-12, identity <= 1e-12},
      {"Zbar_at_most_Z", violations, 0.0, violations == 0.0},
      {"eps_hat_at_most_b_hat", report.eps_hat, report.b_hat, report.eps_hat <= report.b_hat},
  };
}

CovarianceDiagnostic neighbor_candidate_covariance(const GraphPtr& graph,
                                                   const GadgetReport& report) {
  CovarianceDiagnostic d;
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (const auto& c : report.candidates) {
    for (VertexId v = 0; v < c.size(); ++v) {
      const VertexId w = graph->directed_neighbors(v)[0];
      sx += c[v];
      sy += c[w];
      sxy += c[v] * c[w];
      ++d.pairs;
    }
  }
  if (d.pairs < 2) return d;
  const double n = static_cast<double>(d.pairs);
  const double mx = sx / n, my = sy / n;
  d.covariance = sxy / n - mx * my;
  double ss = 0.0;
  for (const auto& c : report.candidates) {
    for (VertexId v = 0; v < c.size(); ++v) {
      const double t = (c[v] - mx) * (c[graph->directed_neighbors(v)[0]] - my) - d.covariance;
      ss += t * t;
    }
  }
  d.se = std::sqrt(ss / (n - 1) / n);
  d.z = d.se > 0.0 ? d.covariance / d.se : 0.0;
  return d;
}

bool MassTransportResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

MassTransportResult mass_transport_residual(const GraphPtr& graph,
                                            std::span<const engine::RunReport> reports) {
  if (!graph) throw std::invalid_argument("mass_transport_residual: null graph");
  const auto& desc = graph->descriptor();
  if (desc.kind != TopologyKind::Cycle && desc.kind != TopologyKind::Torus) {
    throw std::invalid_argument("mass_transport_residual: graph must be a cycle or torus");
  }
  if (reports.empty()) throw std::invalid_argument("mass_transport_residual: no runs");
  const std::size_t nv = graph->vertex_count();
  const int L = desc.length;

  // Vertex index of the translation taking u to v.
  std::vector<std::vector<int>> coords(nv);
  for (VertexId v = 0; v < nv; ++v) coords[v] = graph->coordinates(v);
  std::vector<int> shift(coords[0].size());
  const auto offset = [&](VertexId u, VertexId v) {
    for (std::size_t i = 0; i < shift.size(); ++i) shift[i] = ((coords[v][i] - coords[u][i]) % L + L) % L;
    return graph->from_coordinates(shift);
  };

  MassTransportResult res;
  res.runs = reports.size();
  res.kernel.assign(nv, 0.0);
  std::vector<double> occupied(nv, 0.0);
  std::vector<double> density, ref_diff, ref_density;
  for (const auto& r : reports) {
    if (!r.absorbed) throw std::invalid_argument("mass_transport_residual: input contains a non-absorbed run");
    if (r.vertex_fixation_time.size() != nv) {
      throw std::invalid_argument("mass_transport_residual: run does not match the graph");
    }
    std::vector<std::uint32_t> here(nv, 0);
    double n0 = 0.0;
    for (const auto& p : r.particles) {
      if (p.mode != engine::Mode::Sleeping) {
        throw std::invalid_argument("mass_transport_residual: particle not sleeping in an absorbed run");
      }
      res.kernel[offset(p.origin.vertex, p.position)] += 1.0;
      ++here[p.position];
      if (p.origin.vertex == 0) n0 += 1.0;
    }
    for (VertexId v = 0; v < nv; ++v) occupied[v] += here[v] > 0;
    const double rho = static_cast<double>(r.particles.size()) / static_cast<double>(nv);
    const double occ0 = here[0] > 0 ? 1.0 : 0.0;
    density.push_back(rho);
    res.ref_row += n0;
    res.ref_col += occ0;
    ref_diff.push_back(n0 - occ0);
    ref_density.push_back(n0 - rho);
  }

  const double runs = static_cast<double>(res.runs);
  for (double& k : res.kernel) k /= runs * static_cast<double>(nv);
  for (VertexId w = 0; w < nv; ++w) {
    res.row_sum += res.kernel[w];
    res.col_sum += res.kernel[offset(w, 0)];
  }
  for (const double x : density) res.density += x;
  res.density /= runs;
  res.density_se = standard_error(density);
  res.ref_row /= runs;
  res.ref_col /= runs;
  res.ref_residual_se = standard_error(ref_diff);
  res.ref_density_se = standard_error(ref_density);

  std::size_t argmax = 0;
  for (VertexId v = 0; v < nv; ++v) {
    if (occupied[v] > occupied[argmax]) argmax = v;
  }
  res.max_col = occupied[argmax] / runs;
  const double col_se = std::sqrt(res.max_col * (1.0 - res.max_col) / runs);

  const double ref_gap = std::abs(res.ref_row - res.ref_col);
  const double ref_density_gap = std::abs(res.ref_row - res.density);
  res.checks = {
      {"row_equals_column", ref_gap, 3.0 * res.ref_residual_se, ref_gap <= 3.0 * res.ref_residual_se},
      {"column_at_most_one", res.max_col, 1.0 + 3.0 * col_se, res.max_col <= 1.0 + 3.0 * col_se},
      {"row_equals_density", ref_density_gap, 3.0 * res.ref_density_se,
       ref_density_gap <= 3.0 * res.ref_density_se},
      {"averaged_row_equals_column", std::abs(res.row_sum - res.col_sum), 1e-12,
       std::abs(res.row_sum - res.col_sum) <= 1e-12},
      {"averaged_row_equals_density", std::abs(res.row_sum - res.density), 1e-12,
       std::abs(res.row_sum - res.density) <= 1e-12},
  };
  return res;
}

}  // namespace arw::gadget
