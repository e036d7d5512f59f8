#include <cmath>

#include "doctest.h"
#include "lco/convexity.hpp"
#include "lco/errors.hpp"
#include "support/oracles.hpp"

using namespace lco;

TEST_SUITE("convexity") {
  TEST_CASE("SFT and LCO-KLD Hessians are positive semidefinite") {
    oracle::Draw d(31);
    for (int c = 0; c < 300; ++c) {
      const std::size_t n = 2 + d.index(10);
      const LogitVector z(d.normals(n, 3.0));
      CHECK(hessian_analytic(ObjectiveKind::kSft, SftPoint{z, d.index(n)}).min_eigenvalue >= -1e-9);
      CHECK(hessian_analytic(ObjectiveKind::kLcoKld, DistributionPoint{z, ProbVector(d.distribution(n))}).min_eigenvalue >=
            -1e-9);
    }
  }

  TEST_CASE("LCO-MSE Hessian is 2/|V| times the identity") {
    oracle::Draw d(32);
    for (std::size_t n : {2u, 3u, 7u}) {
      const HessianReport h =
          hessian_analytic(ObjectiveKind::kLcoMse, RegressionPoint{LogitVector(d.normals(n)), LogitVector(d.normals(n))});
      CHECK(max_abs_diff(h.matrix, Matrix::identity(n) * Matrix::diagonal(std::vector<double>(n, 2.0 / n))) <= 1e-12);
    }
  }

  TEST_CASE("LCO-LCH Hessian is diagonal with sech^2 curvature") {
    oracle::Draw d(33);
    for (int c = 0; c < 100; ++c) {
      const std::size_t n = 2 + d.index(6);
      const oracle::Vec z = d.normals(n, 2.0), zs = d.normals(n, 2.0);
      const HessianReport h = hessian_analytic(ObjectiveKind::kLcoLch, RegressionPoint{LogitVector(z), LogitVector(zs)});
      double r = 0;
      for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(z[i] - zs[i]));
      const double sech = 1.0 / std::cosh(r);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) CHECK(h.matrix(i, j) == 0.0);
        CHECK(h.matrix(i, i) > 0.0);
        CHECK(h.matrix(i, i) <= 1.0 / n + 1e-15);
        CHECK(h.matrix(i, i) >= sech * sech / n - 1e-15);
      }
    }
  }

  TEST_CASE("PPO Hessian agrees with the reference formula") {
    oracle::Draw d(34);
    for (int c = 0; c < 100; ++c) {
      const std::size_t n = 2 + d.index(6);
      const oracle::Vec z = d.normals(n);
      const std::size_t k = d.index(n);
      const double pi_old_k = d.uniform(0.05, 0.9), adv = d.normal();
      const Matrix h = ppo_hessian(softmax(LogitVector(z)), k, pi_old_k, adv);
      const auto ref = oracle::ppo_hessian(z, k, pi_old_k, adv);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(h(i, j) == doctest::Approx(static_cast<double>(ref[i][j])).epsilon(1e-12).scale(1e-12));
    }
  }

  TEST_CASE("PPO witnesses have negative curvature for either advantage sign") {
    oracle::Draw d(35);
    for (int sign : {1, -1}) {
      int found = 0;
      while (found < 100) {
        const std::size_t n = 2 + d.index(6);
        const oracle::Vec z = d.normals(n);
        const std::size_t k = d.index(n);
        const ProbVector pi = softmax(LogitVector(z));
        // A positive advantage admits negative curvature only when pi(k) < 1/2.
        // A negative one needs |V| >= 3 or pi(k) > 1/2: with two actions the
        // Hessian is rank one along (1, -1).
        if (sign > 0 && pi[k] >= 0.5) continue;
        if (sign < 0 && n == 2 && pi[k] <= 0.5) continue;
        const std::vector<double> v = ppo_witness(pi, k, sign);
        CHECK(oracle::norm(v) == doctest::Approx(1.0));
        CHECK(oracle::quadratic_form(oracle::ppo_hessian(z, k, pi[k], sign), v) < -1e-8);
        ++found;
      }
    }
  }

  TEST_CASE("PPO is locally convex outside the witness region") {
    const ProbVector pi{0.7, 0.2, 0.1};
    CHECK_THROWS_AS(ppo_witness(pi, 0, 1), WitnessSearchFailedError);
    CHECK(min_eigenvalue(ppo_hessian(pi, 0, 0.7, 1.0)) >= -1e-12);
    const ProbVector two{0.3, 0.7};
    CHECK_THROWS_AS(ppo_witness(two, 0, -1), WitnessSearchFailedError);
    CHECK(min_eigenvalue(ppo_hessian(two, 0, 0.3, -1.0)) >= -1e-12);
  }

  TEST_CASE("curvature decomposition reproduces the quadratic form") {
    oracle::Draw d(36);
    for (int c = 0; c < 50; ++c) {
      const std::size_t n = 3 + d.index(4);
      const oracle::Vec z = d.normals(n), v = d.normals(n);
      const std::size_t k = d.index(n);
      const ProbVector pi = softmax(LogitVector(z));
      const double adv = d.normal(), pi_old_k = d.uniform(0.1, 0.9);
      const double q = quadratic_form(ppo_hessian(pi, k, pi_old_k, adv), v);
      CHECK(q == doctest::Approx(adv / pi_old_k * pi[k] * ppo_curvature_decomposition(pi, k, v)).scale(1e-12));
    }
  }

  TEST_CASE("analytic and numeric Hessians agree") {
    oracle::Draw d(37);
    for (int c = 0; c < 30; ++c) {
      const std::size_t n = 2 + d.index(5);
      const LogitVector z(d.normals(n)), zs(d.normals(n));
      for (const auto& [kind, point] : std::vector<std::pair<ObjectiveKind, HessianPoint>>{
               {ObjectiveKind::kSft, SftPoint{z, 0}},
               {ObjectiveKind::kLcoMse, RegressionPoint{z, zs}},
               {ObjectiveKind::kLcoLch, RegressionPoint{z, zs}},
               {ObjectiveKind::kLcoKld, DistributionPoint{z, softmax(zs)}}}) {
        CHECK(max_abs_diff(hessian_analytic(kind, point).matrix, hessian_numeric(kind, point).matrix) <= 1e-5);
      }
    }
    const TimestepContext clipped = TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{1.0, 0.0});
    CHECK_THROWS_AS(hessian_analytic(ObjectiveKind::kPpo, PolicyGradientPoint{clipped, LogitVector{2.0, 0.0}}),
                    InactiveRegionError);
  }

  TEST_CASE("LCO gradients point away from the target") {
    oracle::Draw d(38);
    for (int c = 0; c < 200; ++c) {
      const std::size_t n = 2 + d.index(8);
      const LogitVector z(d.normals(n, 2.0)), zs(d.normals(n, 2.0));
      for (ObjectiveKind k : {ObjectiveKind::kLcoMse, ObjectiveKind::kLcoLch, ObjectiveKind::kLcoKld})
        CHECK(directionality(k, z, zs) >= -1e-12);
    }
  }

  TEST_CASE("gradient norm bounds hold with an identity Jacobian") {
    oracle::Draw d(39);
    for (int c = 0; c < 200; ++c) {
      const std::size_t n = 2 + d.index(8);
      const LogitVector z(d.normals(n, 2.0)), zs(d.normals(n, 2.0));
      const Matrix j = Matrix::identity(n);
      CHECK(check_gradient_norm_bound(ObjectiveKind::kLcoMse, j, 1.0, lco_mse_eval(z, zs)).satisfied);
      CHECK(check_gradient_norm_bound(ObjectiveKind::kLcoLch, j, 1.0, lco_lch_eval(z, zs)).satisfied);
      CHECK(check_gradient_norm_bound(ObjectiveKind::kLcoKld, j, 1.0, lco_kld_eval(z, softmax(zs))).satisfied);
    }
    // The MSE bound is tight with an identity Jacobian.
    const LossEval e = lco_mse_eval(LogitVector{1.0, -1.0}, LogitVector{0.0, 0.0});
    CHECK(gradient_norm_bound(ObjectiveKind::kLcoMse, e.value, 1.0, 2) == doctest::Approx(oracle::norm(e.logit_gradient)));
  }
}
