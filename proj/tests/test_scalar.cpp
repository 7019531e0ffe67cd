#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sl2flow/errors.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/scalar.hpp"
#include "sl2flow/stats.hpp"

using namespace sl2flow;

TEST(Gbm, ExactAndMoments) {
  EXPECT_DOUBLE_EQ(gbm_exact(0.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(gbm_exact(2.0, -1.0), 1.0);
  EXPECT_DOUBLE_EQ(gbm_moment(1.0, 1.0), std::exp(1.0));
  EXPECT_DOUBLE_EQ(gbm_moment(2.0, 0.5), std::exp(1.5));
  EXPECT_DOUBLE_EQ(gbm_moment(-1.0, 3.0), 1.0);
}

TEST(Gbm, MomentQuadrature) {
  for (double p : {1.0, 2.0, 0.5}) {
    const auto q = gbm_moment_quadrature(p, 1.0);
    EXPECT_NEAR(q.value, gbm_moment(p, 1.0), 1e-9 * gbm_moment(p, 1.0));
  }
}

TEST(MassConcentration, QuadratureIsOneHalf) {
  for (double tau : {1.0, 4.0}) {
    const auto q = mass_concentration_quadrature(tau);
    EXPECT_NEAR(q.value, 0.5, 1e-12);
    EXPECT_LE(q.error_bound, 1e-10);
  }
}

TEST(ScalarR, StaysAboveOneWithExpectedMoments) {
  const double dt = 1e-3;
  const std::size_t n = 100000;
  const auto finals = map_parallel(n, 1, [&](std::size_t i) {
    const auto p = simulate_R_scalar(1.0, dt, derive_seed(31, i));
    double lo = 2.0;
    for (double r : p.values) lo = std::min(lo, r);
    return std::array<double, 2>{p.values.back(), lo};
  });
  std::vector<double> r(n), r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_GE(finals[i][1], 1.0);
    r[i] = finals[i][0];
    r2[i] = r[i] * r[i];
  }
  const auto m1 = mc_mean("R", r);
  const auto m2 = mc_mean("R2", r2);
  const double e = std::exp(1.0);
  EXPECT_LE(std::abs(m1.mean - e), 3.0 * m1.std_error + 0.005 * e);
  const double ref2 = (2.0 * std::exp(3.0) + 1.0) / 3.0;
  EXPECT_LE(std::abs(m2.mean - ref2), 3.0 * m2.std_error + 0.01 * ref2);
}

TEST(ScalarR, StratonovichFormAgrees) {
  const std::size_t n = 20000;
  const auto r = map_parallel(n, 1, [&](std::size_t i) {
    return simulate_R_stratonovich(0.5, 1e-3, derive_seed(32, i)).values.back();
  });
  const auto m = mc_mean("R", r);
  EXPECT_LE(std::abs(m.mean - std::exp(0.5)), 3.0 * m.std_error + 0.005);
}

TEST(Bessel, SecondMomentAndPositivity) {
  const std::size_t n = 100000;
  const double dt = 1e-2;
  const auto paths = map_parallel(n, 1, [&](std::size_t i) {
    const auto p = simulate_bessel2d(1.0, dt, derive_seed(41, i));
    double lo = 1.0;
    for (std::size_t k = 1; k < p.values.size(); ++k) lo = std::min(lo, p.values[k]);
    return std::array<double, 3>{p.values[1], p.values.back(), lo};
  });
  std::vector<double> first(n), x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_GT(paths[i][2], 0.0);
    first[i] = paths[i][0];
    x2[i] = paths[i][1] * paths[i][1];
  }
  const auto m = mc_mean("X2", x2);
  EXPECT_LE(std::abs(m.mean - 2.0), 3.0 * m.std_error);
  const auto ks = ks_one_sample(first, [dt](double x) {
    return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x * x / (2.0 * dt));
  });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(SOfR, ExamplesAndDomain) {
  EXPECT_DOUBLE_EQ(S_of_R(1.0), 1.0);
  EXPECT_NEAR(S_of_R(1.25), 2.0, 1e-15);
  EXPECT_NEAR(R_of_S(2.0), 1.25, 1e-15);
  for (double R : {1.0, 1.5, 10.0, 1e6}) {
    EXPECT_LE(S_of_R(R), 2.0 * R);
    EXPECT_NEAR(R_of_S(S_of_R(R)), R, 1e-12 * R);
  }
  EXPECT_DOUBLE_EQ(S_of_R(1.0 - 1e-13), 1.0);
  EXPECT_THROW(S_of_R(0.5), ConfigError);
  EXPECT_THROW(R_of_S(0.5), ConfigError);
  EXPECT_THROW(R_of_S(-1.0), ConfigError);
}

TEST(ComparisonTriple, SharedDriverAndOrdering) {
  const double dt = 1e-3;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = simulate_comparison_triple(2.0, dt, seed);
    ASSERT_EQ(t.s.values.size(), t.s.tau_grid.size());
    ASSERT_EQ(t.s_tilde.values.size(), t.s.values.size());
    ASSERT_EQ(t.x.values.size(), t.s.values.size());
    EXPECT_EQ(t.s.driver_increments, t.x.driver_increments);
    EXPECT_EQ(t.s.driver_increments, t.s_tilde.driver_increments);
    double w = 0.0;
    for (std::size_t k = 0; k < t.s.values.size(); ++k) {
      if (k > 0) w += t.s.driver_increments[k - 1];
      const double S = t.s.values[k];
      EXPECT_NEAR(S, gbm_exact(t.s.tau_grid[k], w), 1e-12 * std::max(1.0, S));
      // S~ is stored exponentiated; allow the log round trip.
      const double log_tilde = std::log(t.s_tilde.values[k]);
      const double ulp = 1e-14 * std::max(1.0, std::abs(log_tilde));
      EXPECT_GE(log_tilde + ulp, t.x.values[k]);
      EXPECT_GE(log_tilde + ulp, std::log(S) - dt / 2.0);
    }
  }
}

TEST(MassConcentration, MonteCarloSourcesAgree) {
  const auto m = r_mass_concentration_mc(1.0, 1e-2, 20000, 5, RSource::kMatrix);
  const auto s = r_mass_concentration_mc(1.0, 1e-2, 20000, 5, RSource::kScalar);
  EXPECT_EQ(m.n_paths, 20000u);
  EXPECT_GT(m.estimate, 0.0);
  EXPECT_LT(m.estimate, 1.0);
  EXPECT_GT(m.std_error, 0.0);
  EXPECT_LE(std::abs(m.estimate - s.estimate),
            3.0 * std::hypot(m.std_error, s.std_error) + 0.02);
}
