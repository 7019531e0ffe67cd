#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sl2flow/errors.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/sl2.hpp"
#include "sl2flow/stats.hpp"

using namespace sl2flow;

namespace {

const CovarianceSpec kCanonical = CovarianceSpec::canonical();

void expect_mat_near(const Mat2& x, const Mat2& y, double tol) {
  EXPECT_NEAR(x.a, y.a, tol);
  EXPECT_NEAR(x.b, y.b, tol);
  EXPECT_NEAR(x.c, y.c, tol);
  EXPECT_NEAR(x.d, y.d, tol);
}

// R moments of dR = R dtau + sqrt(R^2-1) dw from R = 1.
double exact_R_moment(int p, double tau) {
  switch (p) {
    case 1: return std::exp(tau);
    case 2: return (2.0 * std::exp(3.0 * tau) + 1.0) / 3.0;
    case 3: return 0.4 * std::exp(6.0 * tau) + 0.6 * std::exp(tau);
    default:
      return 8.0 / 35.0 * std::exp(10.0 * tau) + 4.0 / 7.0 * std::exp(3.0 * tau) + 0.2;
  }
}

}  // namespace

TEST(Basis, TraceFreeAndCommutators) {
  const auto [e1, e2, e3] = algebra_basis();
  for (const auto& e : {e1, e2, e3}) EXPECT_EQ(e.trace(), 0.0);
  EXPECT_EQ(e1 * e1, Mat2::identity());
  EXPECT_EQ(e2 * e2, Mat2::identity());
  EXPECT_EQ(e3 * e3, -1.0 * Mat2::identity());
  EXPECT_EQ(e1 * e2 - e2 * e1, -2.0 * e3);
  EXPECT_EQ(e3.transpose(), -1.0 * e3);
  const AlgebraVector v{0.3, -1.25, 2.0};
  EXPECT_EQ(AlgebraVector::from_matrix(v.matrix()), v);
  EXPECT_EQ(v.matrix(), 0.3 * e1 + (-1.25) * e2 + 2.0 * e3);
}

TEST(Basis, DeterminantIsCompensated) {
  const Mat2 m{1e8 + 1.0, 1e8, 1e8, 1e8 - 1.0};
  EXPECT_EQ(m.det(), -1.0);
}

TEST(Covariance, ValidationAndWeights) {
  EXPECT_DOUBLE_EQ(kCanonical.total_weight(), 1.0);
  EXPECT_THROW(CovarianceSpec::from_kappas(-0.1, 0.5), ConfigError);
  EXPECT_THROW(CovarianceSpec::from_atoms({{1.0, Mat2::identity()}}), ConfigError);
}

TEST(SampleIncrement, VariancesMatchCovariance) {
  auto rng = seed_stream(11, 0);
  NormalSampler normal;
  RunningStats s1, s2, s3, s12;
  const double dt = 0.01;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto v = sample_increment(dt, kCanonical, rng, normal);
    s1.push(v.a1 * v.a1);
    s2.push(v.a2 * v.a2);
    s3.push(v.a3 * v.a3);
    s12.push(v.a1 * v.a2);
  }
  EXPECT_LE(std::abs(s1.mean() - 0.25 * dt), 3.0 * s1.std_error());
  EXPECT_LE(std::abs(s2.mean() - 0.25 * dt), 3.0 * s2.std_error());
  EXPECT_LE(std::abs(s3.mean() - 0.5 * dt), 3.0 * s3.std_error());
  EXPECT_LE(std::abs(s12.mean()), 3.0 * s12.std_error());
}

TEST(SampleIncrement, RejectsBadArguments) {
  auto rng = seed_stream(1, 0);
  NormalSampler normal;
  EXPECT_THROW(sample_increment(0.0, kCanonical, rng, normal), ConfigError);
  EXPECT_THROW(sample_increment(-1e-3, kCanonical, rng, normal), ConfigError);
  CovarianceSpec bad;
  bad.kappa_sym = -1.0;
  EXPECT_THROW(sample_increment(1e-3, bad, rng, normal), ConfigError);
}

TEST(StepIto, DiagonalStep) {
  const double h = 0.1;
  const auto F = step_ito(Sl2Matrix::identity(), {h, 0.0, 0.0});
  const double s = std::sqrt(1.0 - h * h);
  expect_mat_near(F.matrix(), {(1.0 + h) / s, 0.0, 0.0, (1.0 - h) / s}, 1e-15);
  EXPECT_NEAR(F.det(), 1.0, 1e-15);
}

TEST(StepIto, RotationStepIsScaledRotation) {
  const double h = 0.2;
  const auto F = step_ito(Sl2Matrix::identity(), {0.0, 0.0, h});
  const double s = std::sqrt(1.0 + h * h);
  expect_mat_near(F.matrix(), {1.0 / s, -h / s, h / s, 1.0 / s}, 1e-15);
}

TEST(StepIto, NonPositiveDeterminantThrows) {
  EXPECT_THROW(step_ito(Sl2Matrix::identity(), {1.0, 0.0, 0.0}, 0.5), NumericalError);
  EXPECT_THROW(step_ito(Sl2Matrix::identity(), {2.0, 0.0, 0.0}), NumericalError);
  EXPECT_THROW(Sl2Matrix::from_matrix({2.0, 0.0, 0.0, 1.0}), ConfigError);
}

TEST(SimulateF, EmptyIntervalGivesIdentity) {
  const auto p = simulate_F(0.7, 0.7, 1e-3, kCanonical, 5);
  ASSERT_EQ(p.states.size(), 1u);
  EXPECT_EQ(p.states[0].matrix(), Mat2::identity());
  EXPECT_EQ(two_point_F(1.0, 0.5, 1e-3, kCanonical, 5).matrix(), Mat2::identity());
}

TEST(SimulateF, DeterminantAndRStayInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = simulate_F(0.0, 3.0, 1e-2, kCanonical, seed);
    for (const auto& F : p.states) {
      const double R = frobenius_R(F);
      EXPECT_LE(std::abs(F.det() - 1.0), 1e-12 * std::max(1.0, R));
      EXPECT_GE(R, 1.0 - 1e-12);
    }
  }
}

TEST(SimulateF, CompositionOverSharedNoise) {
  const double dt = 1e-2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto full = two_point_F(0.0, 2.0, dt, kCanonical, seed).matrix();
    const auto first = two_point_F(0.0, 0.8, dt, kCanonical, seed).matrix();
    const auto second = two_point_F(0.8, 2.0, dt, kCanonical, seed).matrix();
    const auto product = first * second;
    expect_mat_near(full, product, 1e-10 * std::sqrt(full.norm2()));
  }
}

TEST(SimulateF, PartialCellsAreSplitConsistently) {
  // A path that starts mid-cell must see the remainder of that cell only.
  const auto p = simulate_F(0.0123, 0.05, 1e-2, kCanonical, 3);
  ASSERT_EQ(p.tau_grid.size(), 5u);
  EXPECT_DOUBLE_EQ(p.tau_grid[1], 0.02);
  EXPECT_DOUBLE_EQ(p.tau_grid.back(), 0.05);
}

TEST(TraceIdentity, VanishesForSymmetric) {
  EXPECT_NEAR(check_trace_identity({2.0, 0.5, 0.5, 3.0}), 0.0, 1e-12);
  EXPECT_NEAR(check_trace_identity({1.0, 0.0, 0.0, 1.0}), 0.0, 1e-12);
  const Mat2 F{1.3, -0.4, 2.2, 0.1};
  EXPECT_NEAR(check_trace_identity(F.transpose() * F), 0.0, 1e-12);
  EXPECT_THROW(check_trace_identity({1.0, 2.0, 0.0, 1.0}), ConfigError);
}

TEST(FrobeniusR, Diagonal) {
  const auto F = Sl2Matrix::from_matrix({2.0, 0.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(frobenius_R(F), 17.0 / 8.0);
  EXPECT_DOUBLE_EQ(frobenius_R(Sl2Matrix::identity()), 1.0);
}

TEST(SchemeGrowth, MatchesHighPrecisionOracle) {
  // 80-digit quadrature of E|I + dB|^2 / (2 det(I + dB)).
  EXPECT_NEAR(scheme_norm_growth(1e-3, kCanonical), 1.0010005012511323140, 4e-16);
  EXPECT_NEAR(scheme_norm_growth(5e-4, kCanonical), 1.0005001251563205410, 4e-16);
  EXPECT_GT(scheme_norm_growth(1e-3, kCanonical), std::exp(1e-3));
}

namespace {

struct BatchMoments {
  std::vector<RunningStats> r1, r2, r3, r4, fa, fb;
};

// R moments and mean F at the observation steps, over n paths from 0.
BatchMoments run_batch(std::size_t n, double dt, const std::vector<int>& steps,
                       std::uint64_t seed) {
  const int last = steps.back();
  auto one = [&](std::size_t i) {
    std::vector<std::array<double, 3>> out;
    int k = 0;
    integrate_F(0.0, last * dt, dt, kCanonical, derive_seed(seed, i),
                [&](double, const Sl2Matrix& F) {
                  for (int s : steps)
                    if (s == k) out.push_back({frobenius_R(F), F.matrix().a, F.matrix().b});
                  ++k;
                });
    return out;
  };
  const auto all = map_parallel(n, 1, one);
  BatchMoments m;
  const auto ns = steps.size();
  m.r1.resize(ns), m.r2.resize(ns), m.r3.resize(ns), m.r4.resize(ns);
  m.fa.resize(ns), m.fb.resize(ns);
  for (const auto& path : all)
    for (std::size_t j = 0; j < ns; ++j) {
      const double R = path[j][0];
      m.r1[j].push(R);
      m.r2[j].push(R * R);
      m.r3[j].push(R * R * R);
      m.r4[j].push(R * R * R * R);
      m.fa[j].push(path[j][1]);
      m.fb[j].push(path[j][2]);
    }
  return m;
}

double se(const RunningStats& s) { return s.std_error(); }

}  // namespace

TEST(MatrixMoments, MeanRMatchesExactSchemeAndContinuum) {
  const double dt = 1e-2;
  const auto m = run_batch(20000, dt, {50, 100}, 77);
  const double k = scheme_norm_growth(dt, kCanonical);
  EXPECT_LE(std::abs(m.r1[0].mean() - std::pow(k, 50)), 3.0 * se(m.r1[0]));
  EXPECT_LE(std::abs(m.r1[1].mean() - std::pow(k, 100)), 3.0 * se(m.r1[1]));
  // Scheme bias is O(dt) and far below the continuum value's tolerance.
  EXPECT_LE(std::abs(m.r1[1].mean() - std::exp(1.0)), 3.0 * se(m.r1[1]) + 0.01);
}

TEST(MatrixMoments, HigherRMomentsAndMartingaleMean) {
  const double dt = 1e-3;
  const std::vector<int> steps{100, 250, 500};
  const auto m = run_batch(20000, dt, steps, 91);
  // E R^4 at tau = 0.1, E R^3 at 0.25, E R^2 at 0.5; allow O(dt) bias.
  EXPECT_LE(std::abs(m.r4[0].mean() - exact_R_moment(4, 0.1)),
            3.0 * se(m.r4[0]) + 0.01 * exact_R_moment(4, 0.1));
  EXPECT_LE(std::abs(m.r3[1].mean() - exact_R_moment(3, 0.25)),
            3.0 * se(m.r3[1]) + 0.01 * exact_R_moment(3, 0.25));
  EXPECT_LE(std::abs(m.r2[2].mean() - exact_R_moment(2, 0.5)),
            3.0 * se(m.r2[2]) + 0.01 * exact_R_moment(2, 0.5));
  // E F = id for the canonical covariance.
  for (std::size_t j = 0; j < steps.size(); ++j) {
    EXPECT_LE(std::abs(m.fa[j].mean() - 1.0), 3.0 * se(m.fa[j]));
    EXPECT_LE(std::abs(m.fb[j].mean()), 3.0 * se(m.fb[j]));
  }
}

TEST(TwoPointFlow, StationaryIncrementLaw) {
  const double dt = 1e-2;
  const std::size_t n = 20000;
  const auto r = map_parallel(n, 1, [&](std::size_t i) {
    return frobenius_R(two_point_F(0.5, 1.5, dt, kCanonical, derive_seed(123, i)));
  });
  const auto rep = mc_mean("R", r);
  const double k = scheme_norm_growth(dt, kCanonical);
  EXPECT_LE(std::abs(rep.mean - std::pow(k, 100)), 3.0 * rep.std_error);
}
