#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "sl2flow/corrector.hpp"
#include "sl2flow/errors.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/stats.hpp"

using namespace sl2flow;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(ScaleFunctions, Examples) {
  EXPECT_DOUBLE_EQ(lambda_of(0.0, 0.5), 1.0);
  EXPECT_NEAR(tau_of(std::exp(8.0) - 1.0, 0.5), 0.34657359027997264, 1e-15);
  EXPECT_NEAR(lambda_of(std::exp(1.0) - 1.0, 2.0), std::sqrt(3.0), 1e-15);
  EXPECT_THROW(lambda_of(-0.5, 0.5), ConfigError);
  const ScaleMap map{0.5};
  for (double L : {2.0, 10.0}) {
    EXPECT_NEAR(std::exp(map.tau_of_L(L)), map.lambda(L * L - 1.0), 1e-14);
    EXPECT_NEAR(map.lnL_of_tau(map.tau_of_L(L)), std::log(L), 1e-12);
  }
}

TEST(ScaleFunctions, TildeSchedule) {
  const auto a = tilde_lambda_schedule(0.0, 0.5);
  EXPECT_DOUBLE_EQ(a.L, 1.0);
  EXPECT_DOUBLE_EQ(a.lambda_tilde, 1.0);
  const auto b = tilde_lambda_schedule(3.0, 0.5);
  EXPECT_DOUBLE_EQ(b.L, 2.0);
  EXPECT_DOUBLE_EQ(b.lambda_tilde, lambda_of(3.0, 0.5));
}

TEST(ShellGrid, GeometricWithShortLastShell) {
  const auto g = shell_grid(std::exp(1.5), 4);
  ASSERT_EQ(g.size(), 7u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_NEAR(std::log(g[1]), 0.25, 1e-15);
  EXPECT_NEAR(g.back(), std::exp(1.5), 1e-14);
}

TEST(AdvanceCorrector, EmptyShellLeavesStateUnchanged) {
  // Side 4 pi has |k| in {0.5, 0.707, 1}; the shell [1/1.1, 1) is empty.
  const auto f = sample_field(0.5, 0.0, 4 * kPi, 8, 1);
  auto s = initial_corrector_state(f, true);
  s = advance_corrector(std::move(s), f, 1.1);
  EXPECT_EQ(s.empty_shells, 1);
  EXPECT_EQ(s.F, Mat2::identity());
  EXPECT_TRUE(s.shell_gradients.empty());
  EXPECT_EQ(s.phi_tilde[0].mean_square(), 0.0);
  EXPECT_DOUBLE_EQ(s.L, 1.1);
}

TEST(AdvanceCorrector, RejectsBadSteps) {
  const auto f = sample_field(0.5, 0.0, 16 * kPi, 32, 1);
  auto s = initial_corrector_state(f, false);
  EXPECT_THROW(advance_corrector(s, f, 1.0), ConfigError);
  EXPECT_THROW(advance_corrector(s, f, 100.0), ConfigError);
  const auto zero = sample_field(0.0, 0.0, 16 * kPi, 32, 1);
  EXPECT_THROW(advance_corrector(initial_corrector_state(zero, false), zero, 2.0), ConfigError);
  EXPECT_THROW(proxy_gradient_at_zero(s), ConfigError);
}

TEST(AdvanceCorrector, FirstShellGivesProxyEqualToPhi) {
  const auto f = sample_field(0.5, 0.0, 32 * kPi, 64, 2);
  auto s = initial_corrector_state(f, true);
  EXPECT_EQ(proxy_gradient_at_zero(s), Mat2::identity());
  s = advance_corrector(std::move(s), f, 1.5);
  for (int c = 0; c < 2; ++c) {
    const auto a = s.phi[c].to_real();
    const auto b = s.phi_tilde[c].to_real();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
  }
  ASSERT_EQ(s.shell_gradients.size(), 1u);
  // F = id + grad dphi(0) after one shell.
  const Mat2 g = s.shell_gradients[0];
  EXPECT_EQ(s.F, Mat2::identity() + g);
  EXPECT_NEAR(g.trace(), 0.0, 1e-15);
}

TEST(AdvanceCorrector, PhiKeepsZeroMean) {
  const auto f = sample_field(0.5, 0.0, 32 * kPi, 64, 3);
  const auto s = run_corrector(f, std::exp(2.0), 8, true);
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(s.phi[c].mean(), 0.0, 1e-10);
}

TEST(RunCorrector, NormGrowthMartingaleAndProxyTrace) {
  const double eps = 0.5, L = std::exp(1.0);
  const std::size_t n = 400;
  struct Out {
    double f2, fa, fb, tr;
  };
  const auto out = map_parallel(n, 1, [&](std::size_t r) {
    const auto f = sample_field(eps, L, 32 * kPi, 64, derive_seed(55, r));
    const auto s = run_corrector(f, L, 16, true);
    return Out{s.F.norm2(), s.F.a, s.F.b, proxy_gradient_at_zero(s).trace()};
  });
  RunningStats f2, fa, fb, tr;
  for (const auto& o : out) {
    f2.push(o.f2);
    fa.push(o.fa);
    fb.push(o.fb);
    tr.push(o.tr);
  }
  const double ref = 2.0 * lambda_of(L * L - 1.0, eps);
  EXPECT_LE(std::abs(f2.mean() - ref), std::max(0.05 * ref, 3.0 * f2.std_error()));
  EXPECT_LE(std::abs(fa.mean() - 1.0), 3.0 * fa.std_error());
  EXPECT_LE(std::abs(fb.mean()), 3.0 * fb.std_error());
  EXPECT_LE(std::abs(tr.mean() - 2.0), 3.0 * tr.std_error() + 1e-12);
}

TEST(RunCorrector, ShellGradientLawPerUnitTau) {
  // Over one e-fold from L = 1 (lambda~ = 1) the shell gradient has the
  // covariance (eps^2/2) diag(1/4, 1/4, 1/2); allow 3% for the lattice.
  const double eps = 0.5, L = std::exp(1.0);
  RunningStats s1, s3;
  for (std::size_t r = 0; r < 2000; ++r) {
    const auto f = sample_field(eps, L, 32 * kPi, 64, derive_seed(66, r));
    const auto s = run_corrector(f, L, 1, false);
    ASSERT_EQ(s.shell_gradients.size(), 1u);
    const auto v = AlgebraVector::from_matrix(s.shell_gradients[0]);
    s1.push(v.a1 * v.a1);
    s3.push(v.a3 * v.a3);
  }
  const double scale = eps * eps / 2.0;
  EXPECT_LE(std::abs(s1.mean() - 0.25 * scale), 3.0 * s1.std_error() + 0.03 * 0.25 * scale);
  EXPECT_LE(std::abs(s3.mean() - 0.5 * scale), 3.0 * s3.std_error() + 0.03 * 0.5 * scale);
}
