#include <doctest.h>

#include <cmath>

#include "arw/lab.hpp"

using namespace arw;
using namespace arw::lab;

namespace {

GraphPtr graph(const char* text) { return build_topology(TopologyDescriptor::parse(text)); }

}  // namespace

TEST_CASE("summarize_cell") {
  const std::vector<ReplicaOutcome> outcomes{
      {true, false, 2.0, 4.0, 3},
      {true, false, 4.0, 6.0, 3},
      {false, true, 9.0, 8.0, 3},
  };
  const auto row = summarize_cell(0.5, 1.0, 16, outcomes);
  CHECK(row.replicas == 3);
  CHECK(row.frac_absorbed == doctest::Approx(2.0 / 3.0));
  CHECK(row.budget_exhausted_frac == doctest::Approx(1.0 / 3.0));
  CHECK(row.mean_abs_time == doctest::Approx(3.0));
  CHECK(row.se_abs_time == doctest::Approx(1.0));  // sd sqrt(2) over sqrt(2)
  CHECK(row.mean_events_pp == doctest::Approx(6.0));
  CHECK(row.se_events_pp == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK_FALSE(row.all_exhausted);

  const std::vector<ReplicaOutcome> stuck{{false, true, 1.0, 1.0, 1}};
  const auto none = summarize_cell(0.5, 1.0, 16, stuck);
  CHECK(std::isnan(none.mean_abs_time));
  CHECK(none.all_exhausted);
}

TEST_CASE("sweep") {
  SweepConfig cfg;
  cfg.zetas = {0.3, 0.6};
  cfg.lambdas = {0.5, 2.0};
  cfg.sizes = {8, 12};
  cfg.replicas = 6;
  cfg.budget = 20000;
  cfg.master_seed = 42;

  SUBCASE("rows are zeta-major and reproducible across thread counts") {
    const auto a = estimate_absorption_stats(cfg, 1);
    const auto b = estimate_absorption_stats(cfg, 3);
    REQUIRE(a.size() == 8);
    CHECK(a[0].zeta == 0.3);
    CHECK(a[0].lambda == 0.5);
    CHECK(a[0].length == 8);
    CHECK(a[1].length == 12);
    CHECK(a[2].lambda == 2.0);
    CHECK(a[4].zeta == 0.6);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].frac_absorbed == b[i].frac_absorbed);
      CHECK(a[i].mean_events_pp == b[i].mean_events_pp);
      CHECK((a[i].mean_abs_time == b[i].mean_abs_time ||
             (std::isnan(a[i].mean_abs_time) && std::isnan(b[i].mean_abs_time))));
    }
  }
  SUBCASE("more particles than sites never absorb") {
    cfg.law = LawFamily::Deterministic;
    cfg.zetas = {2};
    cfg.budget = 2000;
    for (const auto& row : estimate_absorption_stats(cfg, 1)) {
      CHECK(row.frac_absorbed == 0.0);
      CHECK(row.all_exhausted);
    }
  }
  SUBCASE("validation names the problem") {
    cfg.zetas.clear();
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("zetas"), std::invalid_argument);
  }
}

TEST_CASE("family_descriptor") {
  CHECK(family_descriptor("cycle", 5).kind == TopologyKind::Cycle);
  const auto t = family_descriptor("torus:2", 6);
  CHECK(t.kind == TopologyKind::Torus);
  CHECK(t.dim == 2);
  CHECK_THROWS_AS(family_descriptor("torus:x", 6), std::invalid_argument);
  CHECK_THROWS_AS(family_descriptor("tree", 6), std::invalid_argument);
  CHECK(parse_law_family("bern") == LawFamily::Bernoulli);
  CHECK_THROWS_AS(make_law(LawFamily::Deterministic, 1.5), std::invalid_argument);
}

TEST_CASE("fixation_diagnostics") {
  engine::RunReport r;
  r.vertex_fixation_time = {1.0, std::nullopt, 2.0};
  using engine::Mode;
  r.particles = {
      {{0, 0}, 0, Mode::Sleeping, 1, 1.0},
      {{1, 0}, 1, Mode::Active, 1, std::nullopt},
      {{2, 0}, 1, Mode::Active, 3, std::nullopt},
      {{2, 1}, 2, Mode::Exited, 2, std::nullopt},
  };
  const std::vector<engine::RunReport> reports{r};
  const auto d = fixation_diagnostics(reports);
  CHECK(d.vertices == 3);
  CHECK(d.particles == 3);
  CHECK(d.vertex_fixated_fraction == doctest::Approx(2.0 / 3.0));
  CHECK(d.particle_fixated_fraction == doctest::Approx(1.0 / 3.0));
  CHECK(d.joint[1][1] == 1);  // vertex 0
  CHECK(d.joint[0][0] == 1);  // vertex 1
  CHECK(d.joint[1][0] == 1);  // vertex 2: its own particle still walks elsewhere
  CHECK(d.gap() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("critical density bracketing edge cases") {
  CriticalConfig cfg;
  cfg.length = 16;
  cfg.replicas = 4;
  cfg.budget = 5000;
  cfg.grid = {0.1, 0.2};
  SUBCASE("no sleeping means every density is active") {
    cfg.lambda = 0.0;
    const auto est = estimate_critical_density(cfg, 1);
    CHECK(est.bracket == Bracket::AllActive);
    CHECK(est.zeta_c == 0.0);
    CHECK(est.curve.size() == 2);
  }
  SUBCASE("fast sleeping absorbs every grid density") {
    cfg.lambda = 1000.0;
    const auto est = estimate_critical_density(cfg, 1);
    CHECK(est.bracket == Bracket::AllAbsorbed);
    CHECK(std::isinf(est.ci_high));
  }
  SUBCASE("a found bracket is refined by bisection") {
    cfg.lambda = 1.0;
    cfg.length = 64;
    cfg.budget = 100000;
    cfg.threshold = 30;
    cfg.grid = {0.2, 1.4};
    cfg.bisection_steps = 3;
    const auto est = estimate_critical_density(cfg, 1);
    REQUIRE(est.bracket == Bracket::Found);
    CHECK(est.curve.size() == 5);
    // The interval contains the final bracket of width 1.2 / 8.
    CHECK(est.ci_low <= est.zeta_c - 1.2 / 16 + 1e-12);
    CHECK(est.ci_high >= est.zeta_c + 1.2 / 16 - 1e-12);
  }
}

TEST_CASE("compare_mc_to_oracle") {
  const CtmcSpec spec{graph("cycle:3"), {0, 1}, 1.0};
  McOptions options;
  options.replicas = 20000;
  options.master_seed = 5;
  options.threads = 1;
  SUBCASE("the engine agrees with the exact chain") {
    const auto cmp = compare_mc_to_oracle(spec, options);
    CHECK(cmp.status == ComparisonStatus::Compared);
    CHECK(cmp.pass);
    CHECK(std::abs(cmp.z) <= 4.0);
  }
  SUBCASE("a doubled sleep rate is detected") {
    options.lambda_scale = 2.0;
    const auto cmp = compare_mc_to_oracle(spec, options);
    CHECK_FALSE(cmp.pass);
    CHECK(std::abs(cmp.z) > 10.0);
  }
  SUBCASE("never absorbing systems are skipped") {
    const auto cmp = compare_mc_to_oracle({graph("cycle:3"), {0, 1}, 0.0}, options);
    CHECK(cmp.status == ComparisonStatus::SkippedNeverAbsorbs);
  }
}
