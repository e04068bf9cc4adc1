#include "lorentz/renorm.hpp"

#include <gtest/gtest.h>

using namespace lorentz;
using namespace lorentz::renorm;

TEST(Recurrence, TrivialCases) {
  Mat half(1, 1);
  half << 0.5;
  Vec one(1);
  one << 1.0;
  std::vector<Vec> zero(20, Vec::Zero(1));
  auto s = solve_linear_recurrence(half, one, zero);
  for (int l = 0; l <= 20; ++l) EXPECT_DOUBLE_EQ(s.iterative[l](0), std::pow(2.0, -l));

  Mat id = Mat::Identity(1, 1);
  std::vector<Vec> ones(15, one);
  Vec x0(1);
  x0 << 3.0;
  auto t = solve_linear_recurrence(id, x0, ones);
  for (int l = 0; l <= 15; ++l) EXPECT_DOUBLE_EQ(t.closed_form[l](0), 3.0 + l);
}

TEST(Recurrence, RandomTwoByTwo) {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat A(2, 2);
    for (int i = 0; i < 4; ++i) A(i / 2, i % 2) = rng.uniform(-0.7, 0.7);
    Vec x0(2);
    x0 << rng.normal(), rng.normal();
    std::vector<Vec> R(30, Vec(2));
    for (auto& r : R) r << rng.normal(), rng.normal();
    EXPECT_LE(solve_linear_recurrence(A, x0, R).max_difference, 1e-12);
  }
  EXPECT_THROW(solve_linear_recurrence(Mat::Identity(2, 2), Vec::Zero(3), {}), Error);
}

TEST(Majorant, ExactCasesAndErrors) {
  for (Branch b : {Branch::plus, Branch::minus}) {
    EXPECT_DOUBLE_EQ(coefficient_upper_bound(0.25, 1.5, 10, 2.0, 1.0, 0, b).exact, 2.0);
    for (int l : {1, 5, 20})
      EXPECT_NEAR(coefficient_upper_bound(0.25, 1.5, 10, 2.0, 0.0, l, b).exact,
                  2.0 * std::exp(-decay_rate(0.25, b) * 1.5 * l), 1e-15);
  }
  // closed form equals the explicit sum
  const double nu = 0.3, sigma = 1.2, T = 7, C = 2;
  const double A = std::exp(-decay_rate(nu, Branch::plus) * sigma);
  for (int l = 1; l < 12; ++l) {
    double sum = std::pow(A, l);
    for (int j = 0; j < l; ++j) sum += C / T * std::exp(-j * sigma) * std::pow(A, l - j - 1);
    EXPECT_NEAR(coefficient_upper_bound(nu, sigma, T, 1.0, C, l, Branch::plus).exact, sum, 1e-14);
  }
  EXPECT_THROW(coefficient_upper_bound(0.5, 1.5, 10, 1, 1, 3, Branch::plus), Error);
  EXPECT_THROW(coefficient_upper_bound(0.25, 0.5, 10, 1, 1, 3, Branch::plus), Error);
}

TEST(Majorant, DominatesCascades) {
  auto r = majorant_domination(0.25, 1.5, 10, 1.0, 1.0, 40, 10000, 3);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.worst_ratio, 1.0 + 1e-12);
  EXPECT_GT(r.worst_ratio, 0.9);  // at-bound cascades saturate it
}

TEST(Cascade, ConventionsAndStrategies) {
  CascadeParams p;
  p.strategy = Strategy::zero;
  auto c = simulate_cascade(p);
  ASSERT_EQ(c.contraction.size(), 41u);
  for (auto& s : c.contraction) {
    EXPECT_NEAR(s.c_plus, std::exp(-0.75 * 1.5 * s.l), 1e-14 * std::exp(-0.75 * 1.5 * s.l) + 1e-300);
    EXPECT_NEAR(s.c_minus / std::exp(-0.25 * 1.5 * s.l), 1.0, 1e-12);
  }
  EXPECT_NEAR(c.expansion.back().c_plus / std::exp(0.75 * 1.5 * 40), 1.0, 1e-12);

  p.strategy = Strategy::alternating;
  c = simulate_cascade(p);
  for (auto& s : c.contraction) {
    EXPECT_LE(std::abs(s.c_plus), coefficient_upper_bound(0.25, 1.5, 10, 1, 1, s.l, Branch::plus).exact * (1 + 1e-12));
    EXPECT_LE(std::abs(s.c_minus), coefficient_upper_bound(0.25, 1.5, 10, 1, 1, s.l, Branch::minus).exact * (1 + 1e-12));
  }
  EXPECT_EQ(parse_strategy("at-bound"), Strategy::at_bound);
  EXPECT_THROW(parse_strategy("nope"), Error);
  p.nu = 0.6;
  EXPECT_THROW(simulate_cascade(p), Error);
}

TEST(Cascade, LowerBoundPersistence) {
  // aggregated threshold: T c0 > 2 C_agg implies the trajectory stays above half the decay curve
  for (double nu : {0.1, 0.25, 0.4})
    for (double sigma : {1.0, 1.5, 2.0}) {
      const double C = 1.0, c0 = 1.0;
      const double agg = lower_bound_persistence(nu, sigma, 1.0, c0, C, 40).threshold_constant;
      auto r = lower_bound_persistence(nu, sigma, 2.0 * agg * 1.01 / c0, c0, C, 40);
      EXPECT_TRUE(r.above_threshold);
      EXPECT_TRUE(r.persists) << nu << " " << sigma << " " << r.min_ratio;
    }
  // per-step constant alone is not enough against opposing remainders
  auto raw = lower_bound_persistence(0.25, 1.5, 2.02, 1.0, 1.0, 40, false);
  EXPECT_TRUE(raw.above_threshold);
  EXPECT_FALSE(raw.persists);
}

TEST(Exponents, RecoveryAndStability) {
  CascadeParams p;
  p.strategy = Strategy::at_bound;
  p.T = 100;
  auto d = continuous_time_exponents(p);
  EXPECT_NEAR(d.fitted_plus, 0.75, 0.05);
  EXPECT_NEAR(d.fitted_minus, 0.25, 0.05);
  EXPECT_NEAR(d.expansion_fitted_plus, -0.75, 0.05);

  p.strategy = Strategy::zero;
  d = continuous_time_exponents(p);
  EXPECT_NEAR(d.fitted_plus, 0.75, 1e-12);
  EXPECT_NEAR(d.fitted_minus, 0.25, 1e-12);

  p.strategy = Strategy::at_bound;
  for (double nu : {0.1, 0.01, 0.001}) {
    p.nu = nu;
    d = continuous_time_exponents(p);
    EXPECT_NEAR(d.fitted_plus, 0.5 + nu, 0.05);
    EXPECT_NEAR(d.fitted_minus, 0.5 - nu, 0.05);
  }
  p.nu = 0.25;
  double lo = 1e9, hi = -1e9;
  for (double sigma : {1.0, 1.5, 2.0}) {
    p.sigma = sigma;
    p.steps = static_cast<int>(std::ceil(60 / sigma));
    d = continuous_time_exponents(p);
    lo = std::min(lo, d.fitted_plus);
    hi = std::max(hi, d.fitted_plus);
  }
  EXPECT_LE(hi - lo, 0.02);
  p.sigma = 1.5;
  p.steps = 40;
  const double coarse = continuous_time_exponents(p).fitted_plus;
  p.steps = 80;
  EXPECT_NEAR(continuous_time_exponents(p).fitted_plus, coarse, 0.02);
  p.steps = 3;
  EXPECT_THROW(continuous_time_exponents(p), Error);
}

TEST(Shape, EnsembleReports) {
  auto point = averaged_distribution_shape(std::vector<double>(100, -2.5), 1.0);
  EXPECT_DOUBLE_EQ(point.sup_ratio, 1.0);
  EXPECT_DOUBLE_EQ(point.mass_above_half, 1.0);
  EXPECT_TRUE(point.bounded && point.mass_ok);

  CascadeParams p;
  p.T = 100;
  auto ens = cascade_ensemble(p, 0.5, 1.0, 4000, 11);
  auto s = averaged_distribution_shape(ens, 2.0);
  EXPECT_TRUE(s.bounded);
  EXPECT_TRUE(s.mass_ok);
  EXPECT_GE(s.mass_above_half, s.paley_zygmund);

  std::vector<double> sparse(1000, 0.0);
  sparse[0] = 1.0;
  auto neg = averaged_distribution_shape(sparse, 2.0);
  EXPECT_FALSE(neg.mass_ok);
  EXPECT_FALSE(neg.bounded);

  EXPECT_THROW(averaged_distribution_shape(std::vector<double>(5, 0.0), 2.0), Error);
  EXPECT_THROW(averaged_distribution_shape({}, 2.0), Error);
}
