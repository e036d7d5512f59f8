#include "lco/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <sstream>

#include "lco/convexity.hpp"
#include "lco/errors.hpp"
#include "lco/optimal_target.hpp"
#include "lco/policy.hpp"
#include "lco/random.hpp"
#include "lco/trainer.hpp"

namespace lco {

namespace {

constexpr std::size_t kVocabSizes[] = {2, 3, 5, 16};
constexpr double kFdStep = 1e-5;
constexpr double kGradientTolerance = 1e-6;
constexpr std::size_t kMaxFailureNotes = 5;

class Tally {
 public:
  explicit Tally(SuiteResult& r) : r_(r) {}

  template <class Describe>
  void check(bool ok, Describe describe) {
    if (ok) {
      ++r_.passed;
      return;
    }
    ++r_.failed;
    if (r_.failures.size() < kMaxFailureNotes) r_.failures.push_back(describe());
  }

 private:
  SuiteResult& r_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<double> normal_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * standard_normal(rng);
  return v;
}

LogitVector random_logits(Rng& rng, std::size_t n, double scale) { return LogitVector(normal_vector(rng, n, scale)); }

ProbVector random_distribution(Rng& rng, std::size_t n, double scale = 1.5) {
  return softmax(random_logits(rng, n, scale));
}

std::size_t random_vocab(Rng& rng) { return kVocabSizes[uniform_index(rng, std::size(kVocabSizes))]; }

ActionIndex draw_from(const ProbVector& p, Rng& rng) { return sample_action(p, 1.0, 1.0, rng); }

// max_i |fd_i - g_i| / max(||g||_inf, 1e-8) with central differences of f.
template <class F>
double fd_gradient_error(F f, const LogitVector& z, std::span<const double> g) {
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::vector<double> up = z.vec(), down = z.vec();
    up[i] += kFdStep;
    down[i] -= kFdStep;
    const double fd = (f(LogitVector(up)) - f(LogitVector(down))) / (2.0 * kFdStep);
    err = std::max(err, std::abs(fd - g[i]));
    scale = std::max(scale, std::abs(g[i]));
  }
  return err / std::max(scale, 1e-8);
}

// PPO context whose current logits sit inside the active region with margin.
std::pair<TimestepContext, LogitVector> active_ppo_point(Rng& rng, std::size_t v, double margin) {
  for (;;) {
    LogitVector z_old = random_logits(rng, v, 1.0);
    const ProbVector pi_old = softmax(z_old);
    const ActionIndex a = draw_from(pi_old, rng);
    const double adv = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.1, 2.0);
    std::vector<double> adv_values(v, 0.0);
    adv_values[a] = adv;
    TimestepContext ctx =
        TimestepContext::make(z_old, a, AdvantageVector(adv_values, std::vector<ActionIndex>{a}), 1.0, 0.2);
    std::vector<double> zv = z_old.vec();
    for (double& x : zv) x += 0.05 * standard_normal(rng);
    LogitVector z(zv);
    const double r = ppo_ratio(ctx, z);
    const bool inside = adv > 0 ? r < 1.0 + ctx.clip_epsilon - margin : r > 1.0 - ctx.clip_epsilon + margin;
    if (inside) return {std::move(ctx), std::move(z)};
  }
}

TimestepContext random_context(Rng& rng, std::size_t v) {
  LogitVector z_old = random_logits(rng, v, 1.0);
  const ActionIndex a = draw_from(softmax(z_old), rng);
  std::vector<double> adv_values(v, 0.0);
  adv_values[a] = standard_normal(rng);
  return TimestepContext::make(std::move(z_old), a, AdvantageVector(adv_values, std::vector<ActionIndex>{a}));
}

// ---------------------------------------------------------------------------

void suite_dist(SuiteResult& r) {
  Tally t(r);
  Rng rng(101);
  for (int c = 0; c < 500; ++c) {
    const std::size_t v = random_vocab(rng);
    const double scale = c % 50 == 0 ? 400.0 : uniform(rng, 0.1, 8.0);
    const LogitVector z = random_logits(rng, v, scale);
    const ProbVector p = softmax(z);
    double sum = 0.0;
    for (double x : p.values()) sum += x;
    t.check(std::abs(sum - 1.0) <= 1e-12, [&] { return "softmax sums to " + fmt(sum); });

    const double shift = uniform(rng, -50.0, 50.0);
    std::vector<double> shifted = z.vec();
    for (double& x : shifted) x += shift;
    const ProbVector q = softmax(LogitVector(shifted));
    double diff = 0.0;
    for (std::size_t i = 0; i < v; ++i) diff = std::max(diff, std::abs(p[i] - q[i]));
    t.check(diff <= 1e-12, [&] { return "softmax not shift invariant: " + fmt(diff); });

    const std::vector<double> lp = log_softmax(z);
    double lp_diff = 0.0;
    for (std::size_t i = 0; i < v; ++i) lp_diff = std::max(lp_diff, std::abs(std::exp(lp[i]) - p[i]));
    t.check(lp_diff <= 1e-12, [&] { return "exp(log_softmax) != softmax by " + fmt(lp_diff); });

    const double h = entropy(p);
    t.check(h >= -1e-12 && h <= std::log(static_cast<double>(v)) + 1e-12,
            [&] { return "entropy " + fmt(h) + " outside [0, log V]"; });

    const ProbVector other = random_distribution(rng, v);
    const double kl = kl_divergence(other, random_distribution(rng, v));
    t.check(kl >= -1e-12, [&] { return "negative KL " + fmt(kl); });
    t.check(std::abs(kl_divergence(other, other)) <= 1e-12, [] { return "KL(p||p) != 0"; });
    const double tv = total_variation(p, other);
    t.check(tv >= 0.0 && tv <= 1.0 + 1e-12 && std::abs(tv - total_variation(other, p)) <= 1e-15,
            [&] { return "TV out of range or asymmetric: " + fmt(tv); });

    const double top_p = uniform(rng, 0.05, 1.0);
    const double temp = uniform(rng, 0.2, 2.0);
    const ProbVector nuc = nucleus_distribution(p, temp, top_p);
    double nsum = 0.0, kept_min = 1.0, dropped_max = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      nsum += nuc[i];
      if (nuc[i] > 0.0) kept_min = std::min(kept_min, p[i]);
      else dropped_max = std::max(dropped_max, p[i]);
    }
    t.check(std::abs(nsum - 1.0) <= 1e-12 && dropped_max <= kept_min,
            [&] { return "nucleus support is not a top prefix or does not sum to one"; });
  }
}

void suite_gradient(SuiteResult& r, const ObjectiveTable& table) {
  Tally t(r);
  Rng rng(202);
  auto record = [&](const char* name, std::size_t v, double err) {
    t.check(err <= kGradientTolerance,
            [&] { return std::string(name) + " |V|=" + std::to_string(v) + " relative FD error " + fmt(err); });
  };
  for (std::size_t v : kVocabSizes) {
    for (int c = 0; c < 200; ++c) {
      {
        const LogitVector z = random_logits(rng, v, 2.0);
        const ActionIndex target = uniform_index(rng, v);
        const LossEval e = table.sft(z, target);
        record("SFT", v, fd_gradient_error([&](const LogitVector& x) { return table.sft(x, target).value; }, z,
                                           e.logit_gradient));
      }
      {
        auto [ctx, z] = active_ppo_point(rng, v, 0.01);
        const LossEval e = table.ppo(ctx, z);
        record("PPO", v,
               fd_gradient_error([&](const LogitVector& x) { return table.ppo(ctx, x).value; }, z, e.logit_gradient));
      }
      {
        const TimestepContext ctx = random_context(rng, v);
        const LogitVector z = random_logits(rng, v, 1.0);
        const LossEval e = table.reinforce(ctx, z);
        record("REINFORCE", v, fd_gradient_error([&](const LogitVector& x) { return table.reinforce(ctx, x).value; },
                                                 z, e.logit_gradient));
      }
      {
        const LogitVector z = random_logits(rng, v, 2.0);
        const LogitVector zs = random_logits(rng, v, 2.0);
        const LossEval e = table.mse(z, zs);
        record("LCO_MSE", v,
               fd_gradient_error([&](const LogitVector& x) { return table.mse(x, zs).value; }, z, e.logit_gradient));
        const LossEval l = table.lch(z, zs);
        record("LCO_LCH", v,
               fd_gradient_error([&](const LogitVector& x) { return table.lch(x, zs).value; }, z, l.logit_gradient));
      }
      {
        const LogitVector z = random_logits(rng, v, 2.0);
        const ProbVector ps = random_distribution(rng, v);
        const LossEval e = table.kld(z, ps);
        record("LCO_KLD", v,
               fd_gradient_error([&](const LogitVector& x) { return table.kld(x, ps).value; }, z, e.logit_gradient));
      }
    }
  }
  // Outside the clip band the surrogate is flat.
  for (int c = 0; c < 200; ++c) {
    const std::size_t v = random_vocab(rng);
    const TimestepContext ctx = random_context(rng, v);
    std::vector<double> zv = ctx.z_old.vec();
    const double adv = ctx.sampled_advantage();
    if (adv == 0.0) continue;
    zv[ctx.sampled_action] += adv > 0 ? 3.0 : -3.0;
    const LogitVector z(zv);
    if (ppo_active(ctx, z)) continue;
    const LossEval e = table.ppo(ctx, z);
    const double mx = *std::max_element(e.logit_gradient.begin(), e.logit_gradient.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
    t.check(mx == 0.0, [&] { return "clipped PPO gradient is not zero: " + fmt(mx); });
  }
}

void suite_hessian_psd(SuiteResult& r) {
  Tally t(r);
  Rng rng(303);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t v = random_vocab(rng);
    const LogitVector z = random_logits(rng, v, uniform(rng, 0.1, 5.0));
    const HessianReport sft = hessian_analytic(ObjectiveKind::kSft, SftPoint{z, uniform_index(rng, v)});
    t.check(sft.min_eigenvalue >= -1e-9, [&] { return "SFT Hessian min eigenvalue " + fmt(sft.min_eigenvalue); });
    const HessianReport kld =
        hessian_analytic(ObjectiveKind::kLcoKld, DistributionPoint{z, random_distribution(rng, v)});
    t.check(kld.min_eigenvalue >= -1e-9, [&] { return "KLD Hessian min eigenvalue " + fmt(kld.min_eigenvalue); });

    const LogitVector zs = random_logits(rng, v, 2.0);
    const HessianReport mse = hessian_analytic(ObjectiveKind::kLcoMse, RegressionPoint{z, zs});
    const double dev = max_abs_diff(mse.matrix, Matrix::diagonal(std::vector<double>(v, 2.0 / v)));
    t.check(dev <= 1e-12, [&] { return "MSE Hessian differs from (2/V) I by " + fmt(dev); });

    const HessianReport lch = hessian_analytic(ObjectiveKind::kLcoLch, RegressionPoint{z, zs});
    double radius = 0.0, off = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      radius = std::max(radius, std::abs(z[i] - zs[i]));
      for (std::size_t j = 0; j < v; ++j)
        if (i != j) off = std::max(off, std::abs(lch.matrix(i, j)));
    }
    const double floor = 1.0 / std::cosh(radius) / std::cosh(radius) / static_cast<double>(v);
    t.check(off == 0.0 && lch.min_eigenvalue > 0.0 && lch.max_eigenvalue <= 1.0 / v + 1e-15 &&
                lch.min_eigenvalue >= floor * (1.0 - 1e-12),
            [&] { return "LCH Hessian spectrum [" + fmt(lch.min_eigenvalue) + ", " + fmt(lch.max_eigenvalue) + "]"; });
  }
}

void suite_hessian_ppo(SuiteResult& r) {
  Tally t(r);
  Rng rng(404);
  for (int sign : {1, -1}) {
    int found = 0;
    while (found < 100) {
      const std::size_t v = random_vocab(rng);
      const LogitVector z = random_logits(rng, v, 1.5);
      const ProbVector pi = softmax(z);
      const ActionIndex k = uniform_index(rng, v);
      if (*std::min_element(pi.values().begin(), pi.values().end()) < 1e-9) continue;
      // Configurations where negative curvature exists.
      if (sign > 0 && pi[k] >= 0.5) continue;
      if (sign < 0 && v == 2 && pi[k] <= 0.5) continue;
      ++found;
      std::vector<double> adv(v, 0.0);
      adv[k] = sign;
      const TimestepContext ctx = TimestepContext::make(z, k, AdvantageVector(adv, std::vector<ActionIndex>{k}));
      const HessianReport h = hessian_analytic(ObjectiveKind::kPpo, PolicyGradientPoint{ctx, z});
      try {
        const std::vector<double> w = ppo_witness(pi, k, sign);
        const double q = quadratic_form(h.matrix, w);
        // On-policy the prefactor (A / pi_old(k)) pi(k) reduces to A.
        const double decomposed = sign * ppo_curvature_decomposition(pi, k, w);
        t.check(q < -kWitnessTolerance && std::abs(q - decomposed) <= 1e-10,
                [&] { return "witness curvature " + fmt(q) + " (decomposition " + fmt(decomposed) + ")"; });
      } catch (const WitnessSearchFailedError& e) {
        t.check(false, [&] { return std::string(e.what()); });
      }
    }
  }
  // Complementary region: positive advantage on a likely action keeps H PSD.
  for (int c = 0; c < 100; ++c) {
    const std::size_t v = random_vocab(rng);
    std::vector<double> zv = normal_vector(rng, v, 1.0);
    const ActionIndex k = uniform_index(rng, v);
    zv[k] += std::log(static_cast<double>(v)) + 1.0 + uniform(rng, 0.0, 3.0);
    const LogitVector z(zv);
    if (softmax(z)[k] < 0.5) continue;
    std::vector<double> adv(v, 0.0);
    adv[k] = 1.0;
    const TimestepContext ctx = TimestepContext::make(z, k, AdvantageVector(adv, std::vector<ActionIndex>{k}));
    const HessianReport h = hessian_analytic(ObjectiveKind::kPpo, PolicyGradientPoint{ctx, z});
    t.check(h.min_eigenvalue >= -1e-9, [&] { return "PPO Hessian with pi_k >= 0.5 has eigenvalue " +
                                                   fmt(h.min_eigenvalue); });
  }
}

void suite_hessian_agreement(SuiteResult& r) {
  Tally t(r);
  Rng rng(505);
  auto compare = [&](ObjectiveKind kind, const HessianPoint& p) {
    const HessianReport a = hessian_analytic(kind, p);
    const HessianReport n = hessian_numeric(kind, p);
    double scale = 1.0;
    for (double x : a.matrix.data()) scale = std::max(scale, std::abs(x));
    const double diff = max_abs_diff(a.matrix, n.matrix);
    t.check(diff <= 1e-5 * scale,
            [&] { return std::string(to_string(kind)) + " analytic vs numeric Hessian differ by " + fmt(diff); });
  };
  for (int c = 0; c < 100; ++c) {
    const std::size_t v = random_vocab(rng);
    const LogitVector z = random_logits(rng, v, 1.5);
    compare(ObjectiveKind::kSft, SftPoint{z, uniform_index(rng, v)});
    compare(ObjectiveKind::kLcoMse, RegressionPoint{z, random_logits(rng, v, 1.5)});
    compare(ObjectiveKind::kLcoLch, RegressionPoint{z, random_logits(rng, v, 1.5)});
    compare(ObjectiveKind::kLcoKld, DistributionPoint{z, random_distribution(rng, v)});
    const TimestepContext ctx = random_context(rng, v);
    compare(ObjectiveKind::kReinforce, PolicyGradientPoint{ctx, z});
    auto [pctx, pz] = active_ppo_point(rng, v, 0.02);
    compare(ObjectiveKind::kPpo, PolicyGradientPoint{pctx, pz});
  }
}

double grid_search_shift(const AdvantageVector& a) {
  auto cost = [&](double c) {
    double s = 0.0;
    for (double x : a.values()) s += (x + c) * (x + c);
    return s;
  };
  double lo = -*std::max_element(a.values().begin(), a.values().end());
  double hi = -*std::min_element(a.values().begin(), a.values().end());
  double best = lo;
  for (int round = 0; round < 6; ++round) {
    const int n = 200;
    double best_cost = cost(best);
    for (int i = 0; i <= n; ++i) {
      const double c = lo + (hi - lo) * i / n;
      if (const double f = cost(c); f < best_cost) {
        best_cost = f;
        best = c;
      }
    }
    const double width = (hi - lo) / n;
    lo = best - width;
    hi = best + width;
  }
  return best;
}

void suite_optimal_target(SuiteResult& r) {
  Tally t(r);
  Rng rng(606);
  auto random_advantages = [&](std::size_t v) {
    if (uniform01(rng) < 0.3) {
      const ActionIndex a = uniform_index(rng, v);
      std::vector<double> vals(v, 0.0);
      vals[a] = 2.0 * standard_normal(rng);
      return AdvantageVector(vals, std::vector<ActionIndex>{a});
    }
    return AdvantageVector(normal_vector(rng, v, 2.0));
  };
  for (int c = 0; c < 500; ++c) {
    const std::size_t v = random_vocab(rng);
    const LogitVector z_old = random_logits(rng, v, 2.0);
    const AdvantageVector a = random_advantages(v);
    const double beta = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
    const OptimalTarget target = optimal_target(z_old, a, beta);
    const ProbVector from_logits = softmax(target.z_star);
    double diff = 0.0;
    for (std::size_t i = 0; i < v; ++i) diff = std::max(diff, std::abs(from_logits[i] - target.pi_star[i]));
    t.check(diff <= 1e-10, [&] { return "softmax(z*) differs from pi* by " + fmt(diff); });
  }
  for (int c = 0; c < 200; ++c) {
    const std::size_t v = random_vocab(rng);
    const ProbVector pi_old = random_distribution(rng, v);
    const AdvantageVector a = random_advantages(v);
    const double beta = uniform(rng, 0.2, 3.0);
    const ProbVector pi_star = optimal_policy(pi_old, a, beta);
    const double best = kl_regularized_objective(pi_star, pi_old, a, beta);
    int beaten = 0;
    for (int p = 0; p < 1000; ++p) {
      const double eps = std::exp(uniform(rng, std::log(1e-3), 0.0));
      std::vector<double> w(v);
      double s = 0.0;
      for (std::size_t i = 0; i < v; ++i) {
        w[i] = pi_star[i] * std::exp(eps * standard_normal(rng));
        s += w[i];
      }
      for (double& x : w) x /= s;
      if (kl_regularized_objective(ProbVector(w), pi_old, a, beta) > best + 1e-12) ++beaten;
    }
    t.check(beaten == 0, [&] { return std::to_string(beaten) + " perturbations beat pi*"; });
  }
  for (int c = 0; c < 200; ++c) {
    const std::size_t v = random_vocab(rng);
    const AdvantageVector a(normal_vector(rng, v, uniform(rng, 0.1, 10.0)));
    const double shift = optimal_shift(a);
    const double oracle = grid_search_shift(a);
    t.check(std::abs(shift - oracle) <= 1e-6, [&] { return "shift " + fmt(shift) + " vs grid " + fmt(oracle); });
    const double after = optimal_shift(normalize_advantages(a));
    t.check(std::abs(after) <= 1e-12, [&] { return "shift after centering " + fmt(after); });
  }
}

PolicyModel random_model(Rng& rng, std::size_t v) {
  const std::size_t horizon = 1 + uniform_index(rng, 3);
  switch (uniform_index(rng, 3)) {
    case 0: {
      PolicyModel m = PolicyModel::tabular(v, horizon);
      m.set_parameters(normal_vector(rng, m.parameter_count(), 1.5));
      return m;
    }
    case 1: {
      PolicyModel m = PolicyModel::linear(v, horizon);
      m.set_parameters(normal_vector(rng, m.parameter_count(), 1.0));
      return m;
    }
    default:
      return PolicyModel::mlp1(v, horizon, 4 + uniform_index(rng, 13), rng(), uniform(rng, 0.1, 1.5));
  }
}

State random_state(Rng& rng, const PolicyModel& m) {
  State s;
  const std::size_t len = uniform_index(rng, m.states().horizon());
  for (std::size_t i = 0; i < len; ++i) s.prefix.push_back(uniform_index(rng, m.vocab()));
  return s;
}

void suite_bounds(SuiteResult& r) {
  Tally t(r);
  Rng rng(707);
  for (ObjectiveKind kind : {ObjectiveKind::kLcoMse, ObjectiveKind::kLcoLch, ObjectiveKind::kLcoKld}) {
    for (int c = 0; c < 500; ++c) {
      const std::size_t v = random_vocab(rng);
      const PolicyModel m = random_model(rng, v);
      const State s = random_state(rng, m);
      const LogitVector z = m.forward(s);
      const JacobianInfo info = m.jacobian(s);
      LossEval e;
      if (kind == ObjectiveKind::kLcoKld) {
        e = lco_kld_eval(z, random_distribution(rng, v, 2.0));
      } else {
        std::vector<double> zs = z.vec();
        const double spread = std::exp(uniform(rng, std::log(0.01), std::log(10.0)));
        for (double& x : zs) x += spread * standard_normal(rng);
        e = kind == ObjectiveKind::kLcoMse ? lco_mse_eval(z, LogitVector(zs)) : lco_lch_eval(z, LogitVector(zs));
      }
      const BoundCheck b = check_gradient_norm_bound(kind, info.jacobian, info.sigma_max, e);
      t.check(b.satisfied, [&] {
        return std::string(to_string(kind)) + " gradient norm " + fmt(b.actual_gradient_norm) + " > bound " +
               fmt(b.bound_value);
      });
      const double top = max_eigenvalue(gram_rows(info.jacobian));
      const double sq = info.sigma_max * info.sigma_max;
      t.check(std::abs(sq - top) <= 1e-8 * std::max(top, 1e-300),
              [&] { return "sigma_max^2 " + fmt(sq) + " vs largest eigenvalue " + fmt(top); });
    }
  }
}

void suite_directionality(SuiteResult& r) {
  Tally t(r);
  Rng rng(808);
  for (ObjectiveKind kind : {ObjectiveKind::kLcoMse, ObjectiveKind::kLcoLch, ObjectiveKind::kLcoKld}) {
    for (int c = 0; c < 500; ++c) {
      const std::size_t v = random_vocab(rng);
      const LogitVector z = random_logits(rng, v, 2.0);
      const LogitVector zs = random_logits(rng, v, 2.0);
      const double d = directionality(kind, z, zs);
      t.check(d >= -1e-12, [&] { return std::string(to_string(kind)) + " directionality " + fmt(d); });
    }
  }
}

void suite_convergence(SuiteResult& r) {
  Tally t(r);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(9000 + seed);
    for (ObjectiveKind kind : {ObjectiveKind::kLcoMse, ObjectiveKind::kLcoLch}) {
      for (ModelFamily family : {ModelFamily::kTabular, ModelFamily::kLinear}) {
        ConvergeConfig cfg;
        cfg.family = family;
        cfg.objective = kind;
        cfg.vocab = family == ModelFamily::kTabular ? 4 : 3;
        cfg.seed = seed;
        cfg.steps = 500;
        const double c = (kind == ObjectiveKind::kLcoMse ? 2.0 : 1.0) / static_cast<double>(cfg.vocab);
        double lambda = 1.0;
        if (family == ModelFamily::kLinear) {
          cfg.features = normal_vector(rng, 3, 1.0);
          lambda = dot(*cfg.features, *cfg.features);
        }
        // eta * c * lambda in [0.05, 0.5]
        cfg.learning_rate = uniform(rng, 0.05, 0.5) / (c * lambda);
        if (kind == ObjectiveKind::kLcoLch) cfg.advantage_scale = 0.25;
        const ConvergeResult res = converge_experiment(cfg);
        const std::string tag = std::string(to_string(family)) + "/" + std::string(to_string(kind)) +
                                " seed " + std::to_string(seed);
        t.check(res.monotone_breaks == 0, [&] { return tag + ": loss increased"; });
        if (kind == ObjectiveKind::kLcoMse) {
          t.check(res.violations == 0, [&] { return tag + ": " + std::to_string(res.violations) + " bound violations"; });
          continue;
        }
        // tanh slows the descent inside the neighborhood, so the contraction
        // factor per step is 1 - eta c lambda tanh(R)/R with R the current
        // sup-residual; log cosh(x) <= x^2 / 2 turns that into a loss bound.
        const auto first = std::find_if(res.rows.begin(), res.rows.end(), [](const ConvergeRow& row) {
          return row.residual_inf <= kLchNeighborhood;
        });
        if (first == res.rows.end()) continue;
        const double radius = first->residual_inf;
        const double gain = radius > 0.0 ? std::tanh(radius) / radius : 1.0;
        const double rate = std::abs(1.0 - cfg.learning_rate * c * lambda * gain);
        int broken = 0;
        for (auto it = first; it != res.rows.end(); ++it) {
          const double steps = static_cast<double>(it->k - first->k);
          const double bound = first->residual_sq / (2.0 * cfg.vocab) * std::pow(rate, 2.0 * steps);
          if (it->loss > bound * (1.0 + kConvergeRelativeSlack)) ++broken;
        }
        t.check(broken == 0, [&] { return tag + ": " + std::to_string(broken) + " neighborhood-rate violations"; });
      }
    }
  }
  const Matrix j = Matrix::identity(4);
  const double rho = spectral_radius(j, 0.1, 0.5);
  t.check(std::abs(rho - 0.95) <= 1e-15, [&] { return "spectral radius of the identity case " + fmt(rho); });
}

using SuiteFn = void (*)(SuiteResult&, const ObjectiveTable&);

const std::map<std::string, SuiteFn>& catalog() {
  static const std::map<std::string, SuiteFn> suites = {
      {"dist", [](SuiteResult& r, const ObjectiveTable&) { suite_dist(r); }},
      {"gradient", [](SuiteResult& r, const ObjectiveTable& t) { suite_gradient(r, t); }},
      {"hessian-psd", [](SuiteResult& r, const ObjectiveTable&) { suite_hessian_psd(r); }},
      {"hessian-ppo", [](SuiteResult& r, const ObjectiveTable&) { suite_hessian_ppo(r); }},
      {"hessian-agreement", [](SuiteResult& r, const ObjectiveTable&) { suite_hessian_agreement(r); }},
      {"optimal-target", [](SuiteResult& r, const ObjectiveTable&) { suite_optimal_target(r); }},
      {"bounds", [](SuiteResult& r, const ObjectiveTable&) { suite_bounds(r); }},
      {"directionality", [](SuiteResult& r, const ObjectiveTable&) { suite_directionality(r); }},
      {"convergence", [](SuiteResult& r, const ObjectiveTable&) { suite_convergence(r); }},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"dist",           "gradient", "hessian-psd",    "hessian-ppo",
                                                 "hessian-agreement", "optimal-target", "bounds",
                                                 "directionality", "convergence"};
  return names;
}

std::vector<std::string> select_suites(std::optional<std::string_view> filter) {
  std::vector<std::string> out;
  for (const std::string& name : suite_names()) {
    if (!filter || name == *filter ||
        (name.size() > filter->size() && name.compare(0, filter->size(), *filter) == 0 &&
         name[filter->size()] == '-')) {
      out.push_back(name);
    }
  }
  return out;
}

SuiteResult run_suite(const std::string& name, const ObjectiveTable& table) {
  const auto it = catalog().find(name);
  if (it == catalog().end()) throw InvalidInputError("unknown suite '" + name + "'");
  SuiteResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    it->second(r, table);
  } catch (const std::exception& e) {
    ++r.failed;
    r.failures.push_back(std::string("aborted: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, const ObjectiveTable& table,
                                    bool parallel) {
  std::vector<SuiteResult> out;
  if (!parallel) {
    for (const auto& n : names) out.push_back(run_suite(n, table));
    return out;
  }
  std::vector<std::future<SuiteResult>> jobs;
  for (const auto& n : names) jobs.push_back(std::async(std::launch::async, [&table, n] { return run_suite(n, table); }));
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

void print_report(std::ostream& out, const std::vector<SuiteResult>& results) {
  int failed_suites = 0;
  for (const SuiteResult& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-18s %7d passed %5d failed  (%.2f s)", r.ok() ? "PASS" : "FAIL",
                  r.name.c_str(), r.passed, r.failed, r.seconds);
    out << line << '\n';
    for (const std::string& f : r.failures) out << "       - " << f << '\n';
    if (!r.ok()) ++failed_suites;
  }
  if (failed_suites == 0) {
    out << "verify: all " << results.size() << " suites passed\n";
  } else {
    out << "verify: " << failed_suites << " of " << results.size() << " suites failed\n";
  }
}

}  // namespace lco
