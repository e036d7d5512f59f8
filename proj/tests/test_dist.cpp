#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lco/dist.hpp"
#include "lco/errors.hpp"
#include "lco/optimal_target.hpp"
#include "support/oracles.hpp"

using namespace lco;

TEST_SUITE("dist") {
  TEST_CASE("softmax matches the long-double reference") {
    oracle::Draw d(11);
    for (int c = 0; c < 200; ++c) {
      const std::size_t n = 2 + d.index(15);
      const oracle::Vec z = d.normals(n, 5.0);
      const ProbVector p = softmax(LogitVector(z));
      const oracle::LVec ref = oracle::softmax(z);
      const std::vector<double> lp = log_softmax(LogitVector(z));
      const oracle::LVec lref = oracle::log_softmax(z);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(p[i] - static_cast<double>(ref[i])) <= 1e-15);
        CHECK(std::abs(lp[i] - static_cast<double>(lref[i])) <= 1e-13);
      }
    }
  }

  TEST_CASE("softmax survives extreme logits and is shift invariant") {
    const ProbVector p = softmax(LogitVector{1000.0, 0.0, -1000.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[2] == 0.0);
    const ProbVector a = softmax(LogitVector{0.3, -1.2, 2.0});
    const ProbVector b = softmax(LogitVector{500.3, 498.8, 502.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  }

  TEST_CASE("vector types reject invalid contents") {
    CHECK_THROWS_AS(LogitVector({1.0}), InvalidInputError);
    CHECK_THROWS_AS(LogitVector({1.0, NAN}), InvalidInputError);
    CHECK_THROWS_AS(ProbVector({0.5, 0.6}), InvalidInputError);
    CHECK_THROWS_AS(ProbVector({1.5, -0.5}), InvalidInputError);
    CHECK_THROWS_AS(AdvantageVector({1.0, 2.0}, std::vector<ActionIndex>{0}), InvalidInputError);
    CHECK_NOTHROW(AdvantageVector({0.0, 2.0}, std::vector<ActionIndex>{1}));
  }

  TEST_CASE("entropy, KL and total variation") {
    CHECK(entropy(ProbVector{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
    CHECK(entropy(ProbVector{1.0, 0.0}) == 0.0);
    oracle::Draw d(12);
    for (int c = 0; c < 100; ++c) {
      const std::size_t n = 2 + d.index(8);
      const oracle::Vec p = d.distribution(n), q = d.distribution(n);
      const double kl = kl_divergence(ProbVector(p), ProbVector(q));
      const oracle::LVec lp(p.begin(), p.end()), lq(q.begin(), q.end());
      CHECK(kl == doctest::Approx(static_cast<double>(oracle::kl(lp, lq))).epsilon(1e-12));
      CHECK(total_variation(ProbVector(p), ProbVector(q)) ==
            doctest::Approx(static_cast<double>(oracle::total_variation(lp, lq))).epsilon(1e-12));
      CHECK(kl_divergence(ProbVector(p), ProbVector(p)) == 0.0);
    }
    CHECK_THROWS_AS(kl_divergence(ProbVector{0.5, 0.5}, ProbVector{1.0, 0.0}), DivergenceUndefinedError);
    CHECK(kl_divergence(ProbVector{1.0, 0.0}, ProbVector{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("KL stays accurate for nearly equal distributions") {
    // KL(p || q) ~ sum d^2 / (2 p) for q = p + d; the naive log-difference sum
    // loses this to rounding once |d| is near 1e-8.
    const oracle::Vec p = {0.7, 0.2, 0.1};
    for (double eps : {1e-6, 1e-8, 1e-10}) {
      const oracle::Vec q = {0.7 - 2 * eps, 0.2 + eps, 0.1 + eps};
      const double expected = (4 * eps * eps / 0.7 + eps * eps / 0.2 + eps * eps / 0.1) / 2;
      CHECK(kl_divergence(ProbVector(p), ProbVector(q)) == doctest::Approx(expected).epsilon(1e-4));
    }
    CHECK(exp_excess(1e-9) == doctest::Approx(5e-19).epsilon(1e-9));
    CHECK(exp_excess(2.0) == doctest::Approx(std::exp(2.0) - 3.0).epsilon(1e-15));
  }

  TEST_CASE("normalized advantages have mean zero") {
    oracle::Draw d(13);
    for (int c = 0; c < 1000; ++c) {
      const oracle::Vec a = d.normals(2 + d.index(30), d.uniform(0.1, 100.0));
      const AdvantageVector n = normalize_advantages(AdvantageVector(a));
      const double mean = std::accumulate(n.vec().begin(), n.vec().end(), 0.0) / static_cast<double>(n.size());
      CHECK(std::abs(mean) <= 1e-12 * std::max(1.0, *std::max_element(a.begin(), a.end())));
    }
    const AdvantageVector s = normalize_advantages(AdvantageVector{1.0, 2.0, 3.0, 6.0}, NormalizeMode::kStandardize);
    double var = 0;
    for (double x : s.vec()) var += x * x;
    CHECK(var / 4 == doctest::Approx(1.0));
    const AdvantageVector flat = normalize_advantages(AdvantageVector{2.5, 2.5, 2.5}, NormalizeMode::kStandardize);
    for (double x : flat.vec()) CHECK(x == 0.0);
  }

  TEST_CASE("nucleus truncation keeps the smallest covering prefix") {
    const ProbVector q = nucleus_distribution(ProbVector{0.5, 0.3, 0.2}, 1.0, 0.7);
    CHECK(q[0] == doctest::Approx(0.625));
    CHECK(q[1] == doctest::Approx(0.375));
    CHECK(q[2] == 0.0);
    const ProbVector same = nucleus_distribution(ProbVector{0.5, 0.3, 0.2}, 1.0, 1.0);
    CHECK(same[2] == doctest::Approx(0.2));
    // Ties go to the lower index.
    const ProbVector tie = nucleus_distribution(ProbVector{0.25, 0.25, 0.25, 0.25}, 1.0, 0.5);
    CHECK(tie[0] == doctest::Approx(0.5));
    CHECK(tie[1] == doctest::Approx(0.5));
    CHECK(tie[2] == 0.0);
    // Temperature sharpens through log p / T.
    const ProbVector cold = nucleus_distribution(ProbVector{0.6, 0.4}, 0.5, 1.0);
    CHECK(cold[0] == doctest::Approx(0.36 / (0.36 + 0.16)));
  }

  TEST_CASE("sampling is deterministic and follows the nucleus distribution") {
    const ProbVector p{0.1, 0.2, 0.3, 0.4};
    Rng a(5), b(5);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 40000; ++i) {
      const ActionIndex x = sample_action(p, 1.0, 1.0, a);
      CHECK(x == sample_action(p, 1.0, 1.0, b));
      ++counts[x];
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(counts[i] / 40000.0 == doctest::Approx(p[i]).epsilon(0.05));
    Rng r(9);
    for (int i = 0; i < 1000; ++i) CHECK(sample_action(p, 1.0, 0.5, r) >= 2);
  }

  TEST_CASE("advantage estimators") {
    const AdvantageVector s = estimate_advantages(SparseSampled{2.0, 3}, 5);
    CHECK(s.vec() == std::vector<double>{0, 0, 0, 2, 0});
    REQUIRE(s.sparse_mask());
    CHECK(*s.sparse_mask() == std::vector<ActionIndex>{3});
    const double l4 = -std::log(4.0);
    const AdvantageVector dense = estimate_advantages(DenseLogProb{{l4, l4, l4, l4}}, 4);
    for (double x : dense.vec()) CHECK(x == doctest::Approx(l4));
    const AdvantageVector centered = normalize_advantages(dense);
    for (double x : centered.vec()) CHECK(x == 0.0);
    const AdvantageVector dpo = estimate_advantages(DenseDpoRatio{{-1.0, -2.0}, {-1.5, -0.5}}, 2);
    CHECK(dpo[0] == doctest::Approx(0.5));
    CHECK(dpo[1] == doctest::Approx(-1.5));
  }
}
