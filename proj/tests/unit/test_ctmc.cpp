#include <doctest.h>

#include <array>
#include <cmath>

#include "arw/ctmc.hpp"

using namespace arw;
using namespace arw::lab;

namespace {

GraphPtr graph(const char* text) { return build_topology(TopologyDescriptor::parse(text)); }

// Plain Gaussian elimination with partial pivoting on a small dense system.
template <std::size_t N>
std::array<double, N> gauss(std::array<std::array<double, N + 1>, N> a) {
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < N; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    for (std::size_t r = 0; r < N; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= N; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = 0; i < N; ++i) x[i] = a[i][N] / a[i][i];
  return x;
}

// Two particles on the two-vertex complete graph, written out by hand.
// Transient states: 0 = {A0,A0}, 1 = {A1,A1}, 2 = {A0,A1}, 3 = {A0,S1}, 4 = {S0,A1}.
std::array<double, 5> two_site_times(double lambda) {
  std::array<std::array<double, 6>, 5> a{};
  // {A0,A0}: either particle jumps to 1 at rate 1 -> {A0,A1}.
  a[0][0] = 2; a[0][2] = -2; a[0][5] = 1;
  a[1][1] = 2; a[1][2] = -2; a[1][5] = 1;
  // {A0,A1}: jumps merge the pair, sleeps leave one sleeper.
  a[2][2] = 2 + 2 * lambda; a[2][0] = -1; a[2][1] = -1; a[2][3] = -lambda; a[2][4] = -lambda; a[2][5] = 1;
  // {A0,S1}: the walker wakes the sleeper or falls asleep itself.
  a[3][3] = 1 + lambda; a[3][1] = -1; a[3][5] = 1;
  a[4][4] = 1 + lambda; a[4][0] = -1; a[4][5] = 1;
  return gauss<5>(a);
}

}  // namespace

TEST_CASE("ctmc: one particle sleeps at rate lambda") {
  for (const double lambda : {0.25, 1.0, 3.0}) {
    const auto r = ctmc_oracle({graph("cycle:3"), {0}, lambda});
    CHECK(r.absorption_probability == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.expected_absorption_time == doctest::Approx(1.0 / lambda).epsilon(1e-12));
    CHECK(r.relative_residual <= 1e-10);
    CHECK(r.dense_solver);
  }
}

TEST_CASE("ctmc: two particles on Complete(2) match a hand-built chain") {
  for (const double lambda : {0.5, 1.0, 2.0}) {
    const auto expected = two_site_times(lambda);
    CHECK(ctmc_oracle({graph("complete:2"), {0, 1}, lambda}).expected_absorption_time ==
          doctest::Approx(expected[2]).epsilon(1e-10));
    CHECK(ctmc_oracle({graph("complete:2"), {0, 0}, lambda}).expected_absorption_time ==
          doctest::Approx(expected[0]).epsilon(1e-10));
    CHECK(ctmc_oracle({graph("complete:2"), {1, 1}, lambda}).expected_absorption_time ==
          doctest::Approx(expected[1]).epsilon(1e-10));
  }
  const auto t = two_site_times(1.0);
  CHECK(t[0] == doctest::Approx(4.0));
  CHECK(t[2] == doctest::Approx(3.5));
  CHECK(t[3] == doctest::Approx(2.5));
  const auto r = ctmc_oracle({graph("complete:2"), {0, 1}, 1.0});
  CHECK(r.states == 6);
  CHECK(r.transient_states == 5);
}

TEST_CASE("ctmc: transitions") {
  const CtmcSpec spec{graph("complete:2"), {0, 1}, 0.5};
  const auto start = ctmc_initial_state(spec);
  CHECK(start == CtmcState{0, 2});
  double total = 0;
  for (const auto& t : ctmc_transitions(spec, start)) total += t.rate;
  CHECK(total == doctest::Approx(3.0));
  // A walker arriving at a sleeper wakes it.
  const auto from_sleeper = ctmc_transitions(spec, CtmcState{0, 3});
  REQUIRE(from_sleeper.size() == 2);
  CHECK(from_sleeper[0].target == CtmcState{1, 3});
  CHECK(from_sleeper[1].target == CtmcState{2, 2});
}

TEST_CASE("ctmc: absorbing boundary") {
  // Root of a depth-1 tree: every jump exits.
  for (const double lambda : {0.5, 2.0}) {
    const auto r = ctmc_oracle({graph("treeball:3:1"), {0}, lambda});
    CHECK(r.absorption_probability == doctest::Approx(1.0));
    CHECK(r.expected_absorption_time == doctest::Approx(1.0 / (1.0 + lambda)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ctmc_oracle({graph("treeball:3:1"), {1}, 1.0}), std::invalid_argument);
}

TEST_CASE("ctmc: never absorbing systems") {
  SUBCASE("lambda = 0") {
    const auto r = ctmc_oracle({graph("cycle:4"), {0, 2}, 0.0});
    CHECK(r.absorption_probability == 0.0);
    CHECK(std::isinf(r.expected_absorption_time));
  }
  SUBCASE("more particles than vertices") {
    const auto r = ctmc_oracle({graph("cycle:3"), {0, 1, 2, 0}, 1.0});
    CHECK(r.absorption_probability == 0.0);
    CHECK(std::isinf(r.expected_absorption_time));
  }
}

TEST_CASE("ctmc: state cap") {
  CtmcSpec spec{graph("cycle:8"), {0, 1, 2}, 1.0};
  spec.state_cap = 10;
  CHECK_THROWS_AS(ctmc_oracle(spec), StateCapExceeded);
}

TEST_CASE("ctmc: large systems use the sparse solver") {
  const auto r = ctmc_oracle({graph("cycle:10"), {0, 3, 6, 8}, 1.0});
  CHECK(r.transient_states >= 2000);
  CHECK_FALSE(r.dense_solver);
  CHECK(r.absorption_probability == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.relative_residual <= 1e-10);
  // The cycle is translation invariant, so a shifted start gives the same time.
  const auto shifted = ctmc_oracle({graph("cycle:10"), {1, 4, 7, 9}, 1.0});
  CHECK(shifted.expected_absorption_time ==
        doctest::Approx(r.expected_absorption_time).epsilon(1e-9));
}
