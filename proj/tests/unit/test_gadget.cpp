#include <doctest.h>

#include <cmath>

#include "arw/gadget.hpp"

using namespace arw;
using namespace arw::gadget;
using engine::InitialLaw;
using engine::InteractionRule;

namespace {

const auto kSrw = paths::PathDistribution::simple_random_walk();

GraphPtr graph(const char* text) { return build_topology(TopologyDescriptor::parse(text)); }

const BoundCheck& find_check(const std::vector<BoundCheck>& checks, const std::string& name) {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  FAIL("missing check " << name);
  return checks.front();
}

}  // namespace

TEST_CASE("run_gadget identities on a small torus") {
  const auto g = graph("torus:8:2");
  const CandidateConfig cfg{2.0, 2, 6.0, 8};
  const auto report = run_gadget(g, InitialLaw::poisson(0.5), kSrw, InteractionRule::standard(1.0),
                                 cfg, 20, 11, 1);
  REQUIRE(report.rows.size() == 20);
  CHECK(report.all_pass());
  for (const auto& r : report.rows) {
    CHECK(std::abs(r.mean_Q - r.b_hat) <= 1e-12);
    CHECK(std::abs(r.mean_Zbar - r.eps_hat) <= 1e-12);
    CHECK(r.eps_hat <= r.b_hat);
    CHECK(r.max_q <= 1.0 / 8);
    CHECK(r.var_Q >= 0.0);
  }
  CHECK(report.b_hat > 0.0);
  CHECK(report.b_hat < 1.0);
  // Every candidate's mark is tallied exactly once.
  std::uint64_t z_total = 0, candidates = 0;
  for (const auto z : report.Z) z_total += z;
  for (const auto& c : report.candidates) {
    for (const auto x : c) candidates += x;
  }
  CHECK(z_total == candidates);
}

TEST_CASE("run_gadget is reproducible across thread counts") {
  const auto g = graph("torus:6:2");
  const CandidateConfig cfg{1.0, 1, 3.0, 5};
  const auto a = run_gadget(g, InitialLaw::poisson(0.7), kSrw, InteractionRule::standard(0.5), cfg, 8, 3, 1);
  const auto b = run_gadget(g, InitialLaw::poisson(0.7), kSrw, InteractionRule::standard(0.5), cfg, 8, 3, 4);
  CHECK(a.candidates == b.candidates);
  CHECK(a.bad == b.bad);
  CHECK(a.Q == b.Q);
  CHECK(a.Z == b.Z);
}

TEST_CASE("full coverage: every particle a candidate and n = |V|") {
  // Without sleeping, one particle per site, the walks are sure to cover
  // the 9 vertices eventually; every candidate then covers every vertex.
  const auto g = graph("torus:3:2");
  const CandidateConfig cfg{40.0, 1, 90.0, 9};
  const auto report = run_gadget(g, InitialLaw::deterministic(1), kSrw, InteractionRule::standard(0.0),
                                 cfg, 5, 1, 1);
  for (const auto& r : report.rows) {
    CHECK(r.b_hat == 1.0);
    CHECK(r.mean_Q == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.var_Q <= 1e-24);
    CHECK(r.eps_hat == 0.0);  // no sleeping and a long look-ahead
  }
  for (const double q : report.Q) CHECK(q == doctest::Approx(1.0));
}

TEST_CASE("bad candidates") {
  const auto g = graph("torus:8:2");
  const auto law = InitialLaw::poisson(0.5);
  const auto rule = InteractionRule::standard(1.0);
  SUBCASE("Tlong == T is degenerate with no bad candidates") {
    const auto report = run_gadget(g, law, kSrw, rule, {2.0, 1, 2.0, 4}, 10, 9, 1);
    CHECK(report.degenerate);
    CHECK(report.eps_hat == 0.0);
    for (const auto z : report.Zbar) CHECK(z == 0);
  }
  SUBCASE("bad sets shrink pathwise as Tlong grows") {
    const auto r3 = run_gadget(g, law, kSrw, rule, {2.0, 1, 3.0, 4}, 10, 9, 1);
    const auto r6 = run_gadget(g, law, kSrw, rule, {2.0, 1, 6.0, 4}, 10, 9, 1);
    const auto r12 = run_gadget(g, law, kSrw, rule, {2.0, 1, 12.0, 4}, 10, 9, 1);
    CHECK(r3.candidates == r12.candidates);
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t v = 0; v < g->vertex_count(); ++v) {
        CHECK(r12.bad[r][v] <= r6.bad[r][v]);
        CHECK(r6.bad[r][v] <= r3.bad[r][v]);
      }
    }
    CHECK(r12.eps_hat <= r6.eps_hat);
    CHECK(r6.eps_hat <= r3.eps_hat);
  }
}

TEST_CASE("poisson bound pieces") {
  // A single q = 1/n factor: 1 - 1/n <= exp(-1/n).
  for (const double n : {1.0, 2.0, 16.0, 1024.0}) CHECK(1.0 - 1.0 / n <= std::exp(-1.0 / n));
  GadgetReport empty;
  empty.config.n = 4;
  empty.rows.resize(3);  // all q = 0: P(Z = 0) = 1 = exp(0)
  for (auto& r : empty.rows) r.poisson_bound_rhs = 0.0;
  const auto checks = check_poisson_bound(empty);
  CHECK(find_check(checks, "product_identity").pass);
  CHECK(find_check(checks, "Z_positive_frequency").pass);
}

TEST_CASE("candidate covariance diagnostic") {
  const auto g = graph("torus:6:2");
  GadgetReport report;
  report.candidates = {std::vector<std::uint8_t>(36, 1), std::vector<std::uint8_t>(36, 0)};
  const auto d = neighbor_candidate_covariance(g, report);
  CHECK(d.pairs == 72);
  CHECK(d.covariance == doctest::Approx(0.25));
}

TEST_CASE("gadget validation") {
  const auto law = InitialLaw::poisson(0.5);
  const auto rule = InteractionRule::standard(1.0);
  CHECK_THROWS_WITH_AS(run_gadget(graph("torus:4:2"), law, kSrw, rule, {1.0, 1, 2.0, 17}, 1, 0, 1),
                       doctest::Contains("n must be"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(run_gadget(graph("torus:4:2"), law, kSrw, rule, {3.0, 1, 2.0, 4}, 1, 0, 1),
                       doctest::Contains("Tlong"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(run_gadget(graph("torus:4:2"), law, kSrw, rule, {1.0, 0, 2.0, 4}, 1, 0, 1),
                       doctest::Contains("k must be"), std::invalid_argument);
  CHECK_THROWS_AS(run_gadget(graph("treeball:3:2"), law, kSrw, rule, {1.0, 1, 2.0, 4}, 1, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("mass_transport_residual") {
  SUBCASE("hand-built runs on Cycle(4)") {
    const auto g = graph("cycle:4");
    using engine::Mode;
    engine::RunReport a;
    a.absorbed = true;
    a.vertex_fixation_time.assign(4, 0.0);
    a.particles = {{{1, 0}, 3, Mode::Sleeping, 2, 1.0}, {{0, 0}, 0, Mode::Sleeping, 0, 0.5}};
    engine::RunReport b = a;
    b.particles = {{{0, 0}, 1, Mode::Sleeping, 1, 1.0}};
    const std::vector<engine::RunReport> runs{a, b};
    const auto m = mass_transport_residual(g, runs);
    CHECK(m.runs == 2);
    CHECK(m.kernel[0] == doctest::Approx(1.0 / 8));
    CHECK(m.kernel[1] == doctest::Approx(1.0 / 8));
    CHECK(m.kernel[2] == doctest::Approx(1.0 / 8));
    CHECK(m.kernel[3] == 0.0);
    CHECK(m.row_sum == doctest::Approx(3.0 / 8));
    CHECK(m.col_sum == doctest::Approx(3.0 / 8));
    CHECK(m.density == doctest::Approx(3.0 / 8));
    CHECK(m.ref_row == doctest::Approx(1.0));
    CHECK(m.ref_col == doctest::Approx(0.5));
    CHECK(m.max_col == doctest::Approx(0.5));
  }
  SUBCASE("single particle: sums are 1/|V| after averaging") {
    const auto g = graph("torus:4:2");
    std::vector<engine::RunReport> runs;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const std::vector<VertexId> placement{static_cast<VertexId>(s % 16)};
      auto sim = engine::init_with_placement(g, placement, kSrw, InteractionRule::standard(1.0), s);
      runs.push_back(sim.run_until(engine::StopCondition::absorbed(100000)));
    }
    const auto m = mass_transport_residual(g, runs);
    CHECK(m.row_sum == doctest::Approx(1.0 / 16));
    CHECK(m.col_sum == doctest::Approx(1.0 / 16));
    CHECK(m.all_pass());
  }
  SUBCASE("one particle per site and fast sleeping gives density 1") {
    const auto g = graph("torus:8:2");
    std::vector<engine::RunReport> runs;
    for (std::uint64_t s = 0; s < 40; ++s) {
      auto sim = engine::init_system(g, InitialLaw::deterministic(1), kSrw,
                                     InteractionRule::standard(50.0), s);
      runs.push_back(sim.run_until(engine::StopCondition::absorbed(1000000)));
      REQUIRE(runs.back().absorbed);
    }
    const auto m = mass_transport_residual(g, runs);
    CHECK(m.row_sum == doctest::Approx(1.0));
    CHECK(m.max_col == 1.0);
    CHECK(m.all_pass());
  }
  SUBCASE("non-absorbed runs are rejected") {
    const auto g = graph("cycle:4");
    engine::RunReport r;
    r.vertex_fixation_time.resize(4);
    const std::vector<engine::RunReport> runs{r};
    CHECK_THROWS_WITH_AS(mass_transport_residual(g, runs), doctest::Contains("non-absorbed"),
                         std::invalid_argument);
    CHECK_THROWS_AS(mass_transport_residual(graph("complete:4"), runs), std::invalid_argument);
  }
}
