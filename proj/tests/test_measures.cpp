#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pidopt/measures.hpp"
#include "support.hpp"

using namespace pidopt;

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

TEST_CASE("entropy basics") {
  std::vector<double> half{0.5, 0.5};
  CHECK(entropy(std::span(half)) == doctest::Approx(kLn2).epsilon(1e-15));

  std::vector<double> point{0.0, 1.0, 0.0};
  CHECK(entropy(std::span(point)) == 0.0);

  // direct evaluation: (1/4) ln 4 + (3/4) ln(4/3)
  std::vector<double> skew{0.25, 0.75};
  double expected = 0.25 * std::log(4.0) + 0.75 * std::log(4.0 / 3.0);
  CHECK(entropy(std::span(skew)) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.562335).epsilon(1e-6));

  std::vector<double> bad{0.5, 0.4};
  CHECK_THROWS_AS(entropy(std::span(bad)), InvalidDistribution);
  std::vector<double> neg{1.5, -0.5};
  CHECK_THROWS_AS(entropy(std::span(neg)), InvalidDistribution);
}

TEST_CASE("entropy is permutation invariant") {
  std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  std::vector<double> b{0.4, 0.1, 0.3, 0.2};
  CHECK(entropy(std::span(a)) == doctest::Approx(entropy(std::span(b))).epsilon(1e-15));
}

TEST_CASE("conditional entropy on the gates") {
  CHECK(conditional_entropy(JointDistribution::xor_gate(), {Axis::S}, {Axis::Y, Axis::Z}) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(conditional_entropy(JointDistribution::rdn_gate(), {Axis::S}, {Axis::Z}) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(conditional_entropy(JointDistribution::and_gate(), {Axis::S}, {Axis::Y}) ==
        doctest::Approx(0.5 * kLn2).epsilon(1e-14));
  CHECK_THROWS_AS(
      conditional_entropy(JointDistribution::and_gate(), {Axis::S}, {Axis::S, Axis::Y}),
      AxisOverlap);
}

TEST_CASE("mutual information and co-information") {
  CHECK(mutual_information(JointDistribution::unq_gate(), {Axis::S}, {Axis::Y}) ==
        doctest::Approx(kLn2).epsilon(1e-14));
  CHECK(mutual_information(JointDistribution::xor_gate(), {Axis::S}, {Axis::Y}) ==
        doctest::Approx(0.0).epsilon(1e-14));
  // XOR: MI(S;Y) = 0, MI(S;Y|Z) = ln 2
  CHECK(co_information(JointDistribution::xor_gate()) == doctest::Approx(-kLn2).epsilon(1e-14));
  CHECK_THROWS_AS(mutual_information(JointDistribution::xor_gate(), {Axis::S}, {Axis::S}),
                  AxisOverlap);
}

TEST_CASE("chain rule holds on random distributions") {
  std::mt19937_64 rng(777);
  for (int i = 0; i < 30; ++i) {
    auto p = testsup::random_full_support(rng, 3, 3, 2);
    double lhs = entropy(std::span(p.pmf()));
    double rhs = entropy(p.marginal({Axis::Y, Axis::Z})) +
                 conditional_entropy(p, {Axis::S}, {Axis::Y, Axis::Z});
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("g_value identities") {
  std::mt19937_64 rng(4242);
  auto p = testsup::random_full_support(rng, 2, 3, 2);
  CHECK(g_value(p, MeasureSelector::CI) ==
        doctest::Approx(conditional_entropy(p, {Axis::S}, {Axis::Y, Axis::Z})).epsilon(1e-14));
  CHECK(g_value(p, MeasureSelector::SI) ==
        doctest::Approx(mutual_information(p, {Axis::S}, {Axis::Y}) -
                        conditional_entropy(p, {Axis::S}, {Axis::Z}))
            .epsilon(1e-14));
  CHECK(g_value(p, MeasureSelector::UIY) ==
        doctest::Approx(conditional_entropy(p, {Axis::S}, {Axis::Z})).epsilon(1e-14));
  CHECK(g_value(p, MeasureSelector::UIZ) ==
        doctest::Approx(conditional_entropy(p, {Axis::S}, {Axis::Y})).epsilon(1e-14));
}

TEST_CASE("g_gradient closed forms at the uniform cube") {
  auto p = JointDistribution::from_pmf(testsup::make_labels(2, 2, 2), std::vector<double>(8, 0.125));
  auto gci = g_gradient(p, MeasureSelector::CI);
  for (double v : gci) CHECK(v == doctest::Approx(kLn2).epsilon(1e-14));
  // p_{*,*,z} = 1/2 over p_{s,*,z} = 1/4: every entry ln 2 (gauge-equivalent to zero)
  auto guiy = g_gradient(p, MeasureSelector::UIY);
  for (double v : guiy) CHECK(v == doctest::Approx(kLn2).epsilon(1e-14));
}

TEST_CASE("g_gradient requires full support") {
  CHECK_THROWS_AS(g_gradient(JointDistribution::xor_gate(), MeasureSelector::CI),
                  ZeroCellOnSupportRequired);
}

TEST_CASE("g_gradient matches central finite differences of g_value") {
  std::mt19937_64 rng(999);
  const double eps = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    auto p = testsup::random_full_support(rng, 2, 2, 2, 0.05);
    for (auto sel : kAllSelectors) {
      auto grad = g_gradient(p, sel);
      for (int k = 0; k < 20; ++k) {
        auto d = testsup::random_zero_sum_direction(rng, p.cell_count());
        double fd = testsup::central_difference(
            p, d, eps, [sel](const JointDistribution& q) { return g_value(q, sel); });
        CHECK(std::abs(fd - testsup::dot(grad, d)) <= 1e-6);
      }
    }
  }
}
