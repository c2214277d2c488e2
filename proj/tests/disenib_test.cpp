#include "iblab/disenib.hpp"
#include "iblab/instances.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace iblab;

namespace {

Matrix hard_logits(std::size_t n, std::size_t m, const std::function<std::size_t(std::size_t)>& f) {
  Matrix l = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t x = 0; x < n; ++x) l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(f(x))) = 60.0;
  return l;
}

// T = label, S = position within the label class.
DisenIBParams construction(std::size_t n, std::size_t k) {
  const std::size_t per_class = (n + k - 1) / k;
  return {hard_logits(n, k, [k](std::size_t x) { return x % k; }),
          hard_logits(n, per_class, [k](std::size_t x) { return x / k; })};
}

OptimizerConfig quick_config(int restarts = 5, std::uint64_t seed = 0) {
  OptimizerConfig cfg = OptimizerConfig::disenib_defaults();
  cfg.restarts = restarts;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(EvalDisenIB, ConstructionOnIdentityLabels) {
  const JointXY data = make_deterministic(4, 4);
  const DisenIBValue v = eval_disenib(data, construction(4, 4));
  EXPECT_NEAR(v.objective, -2.772589, 1e-6);
  EXPECT_NEAR(v.objective, analytic_minimum(data), 1e-12);
}

TEST(EvalDisenIB, ConstantSAndIdentityT) {
  // With |S| = 1, I(X;S,Y) = I(X;Y) = H(Y) and I(S;T) = 0.
  const JointXY data = make_deterministic(8, 2);
  const DisenIBParams p{hard_logits(8, 2, [](std::size_t x) { return x % 2; }), Matrix::Zero(8, 1)};
  const DisenIBValue v = eval_disenib(data, p);
  EXPECT_NEAR(v.terms.i_xsy, std::log(2.0), 1e-12);
  EXPECT_NEAR(v.terms.i_st, 0.0, 1e-15);
  EXPECT_NEAR(v.objective, -2.0 * std::log(2.0), 1e-12);
}

TEST(EvalDisenIB, UniformEncodersGiveMinusEntropyOfY) {
  // Uniform T and S: only I(X;S,Y) = I(X;Y) = H(Y) survives.
  const JointXY data = make_deterministic(16, 4);
  const DisenIBParams p{Matrix::Zero(16, 4), Matrix::Zero(16, 4)};
  EXPECT_NEAR(eval_disenib(data, p).objective, -entropy_y(data), 1e-12);
}

TEST(EvalDisenIB, KernelAgreesWithProbCore) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CounterRng rng(seed, 3);
    const JointXY data = make_random_joint(2 + seed % 5, 2 + seed % 3, seed);
    const DisenIBParams p{oracle::random_matrix(data.card_x(), 1 + seed % 4, 2.0, rng),
                          oracle::random_matrix(data.card_x(), 1 + (seed / 4) % 4, 2.0, rng)};
    InformationTerms fast;
    const double obj = detail::disenib_kernel(detail::DataView(data), p.logits_t, p.logits_s, nullptr, nullptr, &fast);
    const DisenIBValue exact = eval_disenib(data, p);
    EXPECT_NEAR(obj, exact.objective, 1e-12);
    EXPECT_NEAR(fast.i_xt, exact.terms.i_xt, 1e-12);
    EXPECT_NEAR(fast.i_ty, exact.terms.i_ty, 1e-12);
    EXPECT_NEAR(fast.i_xsy, exact.terms.i_xsy, 1e-12);
    EXPECT_NEAR(fast.i_st, exact.terms.i_st, 1e-12);
  }
}

TEST(EvalDisenIB, TermsMatchEnumerationOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed, 4);
    const JointXY data = make_random_joint(3 + seed % 3, 2 + seed % 2, seed);
    const DisenIBParams p{oracle::random_matrix(data.card_x(), 3, 1.0, rng),
                          oracle::random_matrix(data.card_x(), 2, 1.0, rng)};
    const auto want = oracle::enumerate_terms(data.probs(),
                                              oracle::softmax_rows(p.logits_s), oracle::softmax_rows(p.logits_t));
    const DisenIBValue v = eval_disenib(data, p);
    EXPECT_NEAR(v.terms.i_xt, want.i_xt, 1e-12);
    EXPECT_NEAR(v.terms.i_ty, want.i_ty, 1e-12);
    EXPECT_NEAR(v.terms.i_xsy, want.i_xsy, 1e-12);
    EXPECT_NEAR(v.terms.i_st, want.i_st, 1e-12);
  }
}

TEST(EvalDisenIB, Errors) {
  const JointXY data = make_deterministic(4, 2);
  EXPECT_THROW(eval_disenib(data, {Matrix::Zero(3, 2), Matrix::Zero(4, 2)}), DimensionError);
  EXPECT_THROW(grad_disenib(data, {Matrix::Zero(4, 2), Matrix::Zero(5, 2)}), DimensionError);
}

TEST(GradDisenIB, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CounterRng rng(seed, 5);
    const JointXY data = seed % 2 ? make_random_joint(2 + seed % 6, 2 + seed % 3, seed) : make_noisy(6, 3, 0.1);
    DisenIBParams p{oracle::random_matrix(data.card_x(), 2 + seed % 3, 1.5, rng),
                    oracle::random_matrix(data.card_x(), 1 + seed % 4, 1.5, rng)};
    const DisenIBGradient g = grad_disenib(data, p);
    const Matrix fd_t = oracle::finite_difference_ld(
        [&](const Matrix& l) { return oracle::disenib_ld(data.probs(), l, p.logits_s); }, p.logits_t);
    const Matrix fd_s = oracle::finite_difference_ld(
        [&](const Matrix& l) { return oracle::disenib_ld(data.probs(), p.logits_t, l); }, p.logits_s);
    EXPECT_LE(oracle::relative_error(g.logits_t, fd_t), 1e-5) << "seed " << seed;
    EXPECT_LE(oracle::relative_error(g.logits_s, fd_s), 1e-5) << "seed " << seed;
  }
}

TEST(GradDisenIB, StationaryNearConstruction) {
  // Logits of 8 leave softmax mass ~e^-8 off the construction.
  const JointXY data = make_deterministic(16, 4);
  DisenIBParams p = construction(16, 4);
  p.logits_t *= 8.0 / 60.0;
  p.logits_s *= 8.0 / 60.0;
  const DisenIBGradient g = grad_disenib(data, p);
  auto centered_max = [](const Matrix& m) {
    Matrix c = m;
    for (Eigen::Index r = 0; r < c.rows(); ++r) c.row(r).array() -= c.row(r).mean();
    return c.cwiseAbs().maxCoeff();
  };
  EXPECT_LE(centered_max(g.logits_t), 1e-3);
  EXPECT_LE(centered_max(g.logits_s), 1e-3);
}

TEST(Consistency, ConstructionHasNoGap) {
  const JointXY data = make_deterministic(16, 4);
  const ConsistencyReport r = consistency_check(data, construction(16, 4));
  EXPECT_LE(r.gap, 1e-9);
  EXPECT_TRUE(r.consistent);
  EXPECT_NEAR(r.h_y, 1.386294, 1e-6);
  EXPECT_NEAR(r.capacity_shortfall, 0.0, 1e-9);
}

TEST(Consistency, IdentityTOverCompresses) {
  // T = X keeps ln 16 nats about X against a target of ln 4.
  const JointXY data = make_deterministic(16, 4);
  const DisenIBParams p{hard_logits(16, 16, [](std::size_t x) { return x; }), Matrix::Zero(16, 1)};
  const ConsistencyReport r = consistency_check(data, p);
  EXPECT_NEAR(r.gap, std::log(4.0), 1e-9);
  EXPECT_FALSE(r.consistent);
}

TEST(Consistency, UniformTMissesBothTerms) {
  const JointXY data = make_deterministic(16, 4);
  const ConsistencyReport r = consistency_check(data, {Matrix::Zero(16, 4), Matrix::Zero(16, 4)});
  EXPECT_NEAR(r.gap, 2.0 * entropy_y(data), 1e-12);
  EXPECT_FALSE(r.consistent);
}

TEST(Consistency, EpsilonMustBePositive) {
  const JointXY data = make_deterministic(4, 2);
  EXPECT_THROW(consistency_check(data, construction(4, 2), 0.0), ValidationError);
}

TEST(DisenIBProperty, ObjectiveBoundedByAnalyticMinimum) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CounterRng rng(seed, 6);
    const JointXY data = seed % 3 == 0 ? make_deterministic(2 + seed % 10, 1 + seed % 2)
                                       : make_random_joint(2 + seed % 6, 2 + seed % 3, seed);
    const DisenIBParams p{oracle::random_matrix(data.card_x(), 1 + seed % 5, 0.5 + 4.0 * rng.uniform(), rng),
                          oracle::random_matrix(data.card_x(), 1 + (seed / 5) % 5, 0.5 + 4.0 * rng.uniform(), rng)};
    EXPECT_GE(eval_disenib(data, p).objective, analytic_minimum(data) - 1e-12) << "seed " << seed;
  }
}

TEST(OptimizeDisenIB, SixteenByFourIsConsistent) {
  const JointXY data = make_deterministic(16, 4);
  const DisenIBResult r = optimize_disenib(data, default_card_t(data), default_card_s(data), quick_config());
  EXPECT_TRUE(r.report.consistent) << "gap " << r.report.gap;
  EXPECT_LT(r.report.gap, kDefaultEpsilon);
  EXPECT_LT(r.report.i_st, 0.05);
  EXPECT_EQ(r.restarts_used, 5);
}

TEST(OptimizeDisenIB, SingletonSWhenLabelsIdentifyX) {
  const JointXY data = make_deterministic(4, 4);
  EXPECT_EQ(default_card_s(data), 1u);
  const DisenIBResult r = optimize_disenib(data, 4, 1, quick_config());
  EXPECT_TRUE(r.report.consistent);
  EXPECT_NEAR(r.report.objective, analytic_minimum(data), 0.02);
}

TEST(OptimizeDisenIB, UndersizedSReportsShortfall) {
  const JointXY data = make_deterministic(8, 2);
  const DisenIBResult r = optimize_disenib(data, 2, 1, quick_config());
  EXPECT_NEAR(r.report.capacity_shortfall, std::log(4.0), 1e-6);
  EXPECT_NEAR(r.report.i_ty, std::log(2.0), 0.02);
}

TEST(OptimizeDisenIB, NearMinimumImpliesConsistency) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const JointXY data = make_deterministic(6 + 2 * (seed % 3), 2 + seed % 2);
    const DisenIBResult r = optimize_disenib(data, default_card_t(data), default_card_s(data), quick_config(2, seed));
    if (r.report.objective - analytic_minimum(data) < 0.02) {
      EXPECT_LT(r.report.gap, 0.1) << "seed " << seed;
      EXPECT_LT(r.report.i_st, 0.05) << "seed " << seed;
    }
  }
}

TEST(OptimizeDisenIB, NoisyLabelsKeepAvailablePrediction) {
  const JointXY data = make_noisy(8, 2, 0.2);
  const DisenIBResult r = optimize_disenib(data, 2, 4, quick_config());
  EXPECT_NEAR(r.report.i_ty, mutual_information_xy(data), 0.02);
  EXPECT_GT(r.report.gap_vs_i_xy, 0.0);
}

TEST(OptimizeDisenIB, RejectsTooFewTSlots) {
  const JointXY data = make_deterministic(8, 4);
  EXPECT_THROW(optimize_disenib(data, 3, 2), ValidationError);
  EXPECT_THROW(optimize_disenib(data, 4, 0), ValidationError);
}

TEST(OptimizeDisenIB, SameSeedSameResult) {
  const JointXY data = make_deterministic(8, 2);
  OptimizerConfig threaded = quick_config(3, 17);
  threaded.threads = 2;
  const DisenIBResult a = optimize_disenib(data, 2, 4, quick_config(3, 17));
  const DisenIBResult b = optimize_disenib(data, 2, 4, threaded);
  EXPECT_EQ(a.params.logits_t, b.params.logits_t);
  EXPECT_EQ(a.params.logits_s, b.params.logits_s);
  EXPECT_EQ(a.best_restart_seed, b.best_restart_seed);
}
