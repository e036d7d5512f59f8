#include <cmath>

#include "doctest.h"
#include "lco/errors.hpp"
#include "lco/objectives.hpp"
#include "support/oracles.hpp"

using namespace lco;

namespace {

constexpr std::size_t kVocabs[] = {2, 3, 5, 16};

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("names round-trip") {
    for (ObjectiveKind k : kAllObjectives) CHECK(parse_objective(to_string(k)) == k);
    CHECK(parse_objective("lco-kld") == ObjectiveKind::kLcoKld);
    CHECK_THROWS_AS(parse_objective("DPO"), InvalidInputError);
    CHECK(is_lco(ObjectiveKind::kLcoMse));
    CHECK_FALSE(is_lco(ObjectiveKind::kPpo));
  }

  TEST_CASE("loss values match the reference definitions") {
    oracle::Draw d(21);
    for (std::size_t n : kVocabs) {
      for (int c = 0; c < 25; ++c) {
        const oracle::Vec z = d.normals(n, 2.0), zs = d.normals(n, 2.0);
        const std::size_t a = d.index(n);
        CHECK(sft_eval(LogitVector(z), a).value == doctest::Approx(static_cast<double>(oracle::sft_loss(z, a))));
        CHECK(lco_mse_eval(LogitVector(z), LogitVector(zs)).value ==
              doctest::Approx(static_cast<double>(oracle::mse_loss(z, zs))));
        CHECK(lco_lch_eval(LogitVector(z), LogitVector(zs)).value ==
              doctest::Approx(static_cast<double>(oracle::lch_loss(z, zs))));
        const oracle::Vec ps = d.distribution(n);
        CHECK(lco_kld_eval(LogitVector(z), ProbVector(ps)).value ==
              doctest::Approx(static_cast<double>(oracle::kld_loss(z, ps))));
      }
    }
  }

  TEST_CASE("logit gradients match central differences of the reference losses") {
    oracle::Draw d(22);
    for (std::size_t n : kVocabs) {
      for (int c = 0; c < 50; ++c) {
        const oracle::Vec z = d.normals(n, 2.0), zs = d.normals(n, 2.0), ps = d.distribution(n);
        const std::size_t a = d.index(n);
        const LogitVector lz(z);
        CHECK(oracle::relative_error(sft_eval(lz, a).logit_gradient,
                                     oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::sft_loss(x, a); }, z)) <= 1e-6);
        CHECK(oracle::relative_error(lco_mse_eval(lz, LogitVector(zs)).logit_gradient,
                                     oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::mse_loss(x, zs); }, z)) <= 1e-6);
        CHECK(oracle::relative_error(lco_lch_eval(lz, LogitVector(zs)).logit_gradient,
                                     oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::lch_loss(x, zs); }, z)) <= 1e-6);
        CHECK(oracle::relative_error(lco_kld_eval(lz, ProbVector(ps)).logit_gradient,
                                     oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::kld_loss(x, ps); }, z)) <= 1e-6);

        const double adv = d.normal();
        const oracle::Vec z_old = d.normals(n, 2.0);
        std::vector<double> av(n, 0.0);
        av[a] = adv;
        const TimestepContext ctx = TimestepContext::make(LogitVector(z_old), a, AdvantageVector(av), 1.0, 0.2);
        CHECK(oracle::relative_error(
                  reinforce_eval(ctx, lz).logit_gradient,
                  oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::reinforce_loss(x, a, adv); }, z)) <= 1e-6);
        // On-policy the ratio is 1, strictly inside the clip band.
        CHECK(ppo_active(ctx, LogitVector(z_old)));
        CHECK(oracle::relative_error(
                  ppo_eval(ctx, LogitVector(z_old)).logit_gradient,
                  oracle::fd_gradient([&](const oracle::Vec& x) { return oracle::ppo_loss(x, z_old, a, adv, 0.2); }, z_old)) <=
              1e-6);
      }
    }
  }

  TEST_CASE("PPO gradient vanishes outside the clip band") {
    // Ratio pushed above 1 + eps with a positive advantage.
    const TimestepContext pos = TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{1.0, 0.0});
    const LogitVector up{1.0, 0.0};
    CHECK(ppo_ratio(pos, up) > 1.2);
    CHECK_FALSE(ppo_active(pos, up));
    const LossEval e = ppo_eval(pos, up);
    for (double g : e.logit_gradient) CHECK(g == 0.0);
    CHECK(e.value == doctest::Approx(-1.2));
    // Ratio below 1 - eps with a negative advantage.
    const TimestepContext neg = TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{-1.0, 0.0});
    const LogitVector down{-1.0, 0.0};
    CHECK_FALSE(ppo_active(neg, down));
    for (double g : ppo_eval(neg, down).logit_gradient) CHECK(g == 0.0);
    // Same displacement on the other side stays active.
    CHECK(ppo_active(neg, up));
  }

  TEST_CASE("SFT gradient is softmax minus the one-hot target") {
    const LossEval e = sft_eval(LogitVector{0.0, 0.0, 0.0, 0.0}, 2);
    CHECK(e.value == doctest::Approx(std::log(4.0)));
    CHECK(e.logit_gradient[2] == doctest::Approx(-0.75));
    CHECK(e.logit_gradient[0] == doctest::Approx(0.25));
  }

  TEST_CASE("log cosh is finite far from the origin") {
    CHECK(log_cosh(1000.0) == doctest::Approx(1000.0 - std::log(2.0)));
    CHECK(log_cosh(-1e-8) == doctest::Approx(5e-17).epsilon(1e-6));
    CHECK(log_cosh(0.0) == 0.0);
  }

  TEST_CASE("context construction checks its invariants") {
    CHECK_THROWS_AS(TimestepContext::make(LogitVector{0.0, 0.0}, 2, AdvantageVector{0.0, 0.0}), InvalidInputError);
    CHECK_THROWS_AS(TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{0.0}), InvalidInputError);
    CHECK_THROWS_AS(TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{0.0, 0.0}, 0.0), InvalidInputError);
    CHECK_THROWS_AS(TimestepContext::make(LogitVector{0.0, 0.0}, 0, AdvantageVector{0.0, 0.0}, 1.0, 1.5),
                    InvalidInputError);
    const TimestepContext degenerate = TimestepContext::make(LogitVector{-800.0, 0.0}, 0, AdvantageVector{1.0, 0.0});
    CHECK_THROWS_AS(ppo_eval(degenerate, LogitVector{0.0, 0.0}), DegenerateRatioError);
  }

  TEST_CASE("evaluate derives the targets from the context") {
    const TimestepContext ctx = TimestepContext::make(LogitVector{0.5, -0.5, 1.0}, 1, AdvantageVector{1.0, -2.0, 0.5}, 2.0);
    const LogitVector z{0.1, 0.2, 0.3};
    const LogitVector zs = optimal_logits(ctx.z_old, ctx.advantages, 2.0);
    CHECK(evaluate(ObjectiveKind::kLcoMse, ctx, z).value == doctest::Approx(lco_mse_eval(z, zs).value));
    CHECK(evaluate(ObjectiveKind::kLcoKld, ctx, z).value == doctest::Approx(lco_kld_eval(z, softmax(zs)).value));
    CHECK(evaluate(ObjectiveKind::kSft, ctx, z).value == doctest::Approx(sft_eval(z, 1).value));
  }

  TEST_CASE("batch gradients are divided by the batch size") {
    const TimestepContext ctx = TimestepContext::make(LogitVector{0.0, 1.0}, 0, AdvantageVector{1.0, 0.0});
    const std::vector<TimestepInput> batch = {{ctx, LogitVector{0.2, 0.1}}, {ctx, LogitVector{-0.3, 0.4}}};
    const BatchEval b = batch_eval(ObjectiveKind::kLcoMse, batch);
    const LossEval e0 = evaluate(ObjectiveKind::kLcoMse, ctx, batch[0].logits);
    const LossEval e1 = evaluate(ObjectiveKind::kLcoMse, ctx, batch[1].logits);
    CHECK(b.value == doctest::Approx((e0.value + e1.value) / 2));
    CHECK(b.logit_gradients[1][1] == doctest::Approx(e1.logit_gradient[1] / 2));
    CHECK_THROWS_AS(batch_eval(ObjectiveKind::kLcoMse, {}), InvalidInputError);
  }
}
