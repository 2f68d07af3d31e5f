#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pidopt/extractable.hpp"
#include "support.hpp"

using namespace pidopt;

TEST_CASE("project_simplex examples") {
  auto a = project_simplex({0.6, 0.9});
  CHECK(a[0] == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(0.65).epsilon(1e-14));

  auto b = project_simplex({0.25, 0.75});  // already feasible
  CHECK(b[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(b[1] == doctest::Approx(0.75).epsilon(1e-14));

  auto c = project_simplex({2.0, -1.0, 0.0});
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c[1] == 0.0);
  CHECK(c[2] == 0.0);
}

TEST_CASE("project_simplex optimality condition") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + int(rng() % 5);
    std::vector<double> v(n);
    for (double& x : v) x = 2.0 * gauss(rng);
    auto x = project_simplex(v);
    double sum = 0.0;
    for (double xi : x) {
      CHECK(xi >= 0.0);
      sum += xi;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // (v - x) . (y - x) <= 0 for feasible y
    for (int k = 0; k < 10; ++k) {
      std::vector<double> y(n);
      double ys = 0.0;
      for (double& yi : y) {
        yi = expo(rng);
        ys += yi;
      }
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += (v[i] - x[i]) * (y[i] / ys - x[i]);
      CHECK(dot <= 1e-10);
    }
  }
}

TEST_CASE("si_ext on RDN finds the identity map") {
  auto r = si_ext(JointDistribution::rdn_gate(), 2);
  CHECK(r.certified);
  CHECK(nats_to_bits(r.value) == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(r.argmax_map.size() == 2);
  CHECK(r.argmax_map[0] != r.argmax_map[1]);  // identity or swap
}

TEST_CASE("si_ext with one row only fits the constant map") {
  auto r = si_ext(JointDistribution::and_gate(), 1);
  CHECK(std::abs(r.value) <= 1e-10);
}

TEST_CASE("si_ext on AND recovers SI(AND)") {
  auto r = si_ext(JointDistribution::and_gate(), 2);
  CHECK(nats_to_bits(r.value) == doctest::Approx(0.311278124459133).epsilon(1e-7));
  CHECK(r.argmax_map[0] != r.argmax_map[1]);
}

TEST_CASE("si_ext guard") {
  CHECK_THROWS_AS(si_ext(JointDistribution::and_gate(), 1001), EnumerationTooLarge);
}

TEST_CASE("si_club on RDN reaches 1 bit") {
  ClubOptions opts;
  opts.restarts = 10;
  opts.seed = 42;
  auto r = si_club(JointDistribution::rdn_gate(), 2, opts);
  CHECK_FALSE(r.certified);
  CHECK(nats_to_bits(r.value) >= 1.0 - 1e-4);
  CHECK(r.restarts_used >= 10);
  CHECK_FALSE(r.trace.empty());
}

TEST_CASE("si_club on a constant source is zero for every m") {
  std::vector<JointDistribution::Entry> e{
      {"c", "0", "0", 0.1}, {"c", "0", "1", 0.4}, {"c", "1", "0", 0.3}, {"c", "1", "1", 0.2}};
  auto p = JointDistribution::validate(e);
  ClubOptions opts;
  opts.restarts = 3;
  for (int m = 1; m <= 3; ++m) {
    auto r = si_club(p, m, opts);
    CHECK(std::abs(r.value) <= 1e-9);
  }
}

TEST_CASE("si_club monotone in m via padded warm start") {
  ClubOptions opts;
  opts.restarts = 5;
  auto p = JointDistribution::and_gate();
  auto r2 = si_club(p, 2, opts);
  auto r3 = si_club(p, 3, opts, {pad_rows(r2.argmax, 3)});
  CHECK(r3.value >= r2.value - 1e-5);
}

TEST_CASE("reported value is reproduced by an independent recomputation") {
  std::mt19937_64 rng(2718);
  auto p = testsup::random_full_support(rng, 3, 2, 2);
  ClubOptions opts;
  opts.restarts = 4;
  auto r = si_club(p, 3, opts);
  auto push = pushforward(r.argmax, p).restrict_support();
  auto check = pid(push);
  CHECK(std::abs(check.SI - r.value) <= 1e-9);
}

TEST_CASE("check_sandwich on the gates") {
  ClubOptions opts;
  opts.restarts = 6;
  auto rep_and = check_sandwich(JointDistribution::and_gate(), 2, opts);
  CHECK(rep_and.ok);
  CHECK(nats_to_bits(rep_and.ext_value) == doctest::Approx(0.311278124459133).epsilon(1e-7));
  CHECK(nats_to_bits(rep_and.club_values.front().second) ==
        doctest::Approx(0.311278124459133).epsilon(1e-4));

  auto rep_rdn = check_sandwich(JointDistribution::rdn_gate(), 2, opts);
  CHECK(rep_rdn.ok);
  CHECK(nats_to_bits(rep_rdn.ext_value) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nats_to_bits(rep_rdn.club_values.front().second) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("check_sandwich on random 3x2x2 instances") {
  std::mt19937_64 rng(515253);
  ClubOptions opts;
  opts.restarts = 5;
  for (int trial = 0; trial < 3; ++trial) {
    auto p = testsup::random_full_support(rng, 3, 2, 2);
    auto rep = check_sandwich(p, 3, opts);
    CHECK(rep.ok);
    CHECK(rep.ext_value >= pid(p).SI - 1e-9);  // identity map is enumerated
  }
}

TEST_CASE("trace rows are plot-ready") {
  ClubOptions opts;
  opts.restarts = 2;
  opts.seed = 7;
  auto r = si_club(JointDistribution::xor_gate(), 2, opts);
  REQUIRE_FALSE(r.trace.empty());
  int last_restart = 0;
  for (const auto& t : r.trace) {
    CHECK(t.restart >= last_restart);
    last_restart = t.restart;
    CHECK(std::isfinite(t.objective));
  }
}
