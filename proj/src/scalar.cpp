#include "sl2flow/scalar.hpp"

#include <cmath>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "sl2flow/errors.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/sl2.hpp"

namespace sl2flow {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Grid {
  std::size_t steps;
  double h;
};

Grid make_grid(double tau_end, double dt) {
  if (!(tau_end > 0.0)) throw ConfigError("tau_end must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::ceil(tau_end / dt - 1e-9)));
  return {steps, tau_end / static_cast<double>(steps)};
}

ScalarPath start_path(const Grid& g, double value, std::uint64_t seed) {
  ScalarPath p;
  p.seed = seed;
  p.tau_grid.reserve(g.steps + 1);
  p.values.reserve(g.steps + 1);
  p.driver_increments.reserve(g.steps);
  p.tau_grid.push_back(0.0);
  p.values.push_back(value);
  return p;
}

void push(ScalarPath& p, std::size_t step, double h, double value, double dw) {
  p.tau_grid.push_back(static_cast<double>(step + 1) * h);
  p.values.push_back(value);
  p.driver_increments.push_back(dw);
}

double r_sigma(double R) { return std::sqrt(std::max(R * R - 1.0, 0.0)); }

// Root of v - (h/2) coth v = a on v > 0. g(v) = v - (h/2) coth v is increasing
// and concave, and the Bessel root v0 = (a + sqrt(a^2 + 2h))/2 satisfies
// g(v0) <= a, so Newton from v0 increases monotonically to the root.
double implicit_log_s_tilde_step(double a, double h) {
  double v = 0.5 * (a + std::sqrt(a * a + 2.0 * h));
  for (int it = 0; it < 60; ++it) {
    const double th = std::tanh(v);
    const double coth = 1.0 / th;
    const double g = v - 0.5 * h * coth - a;
    const double sh = std::sinh(v);
    const double dg = 1.0 + 0.5 * h / (sh * sh);
    const double next = v - g / dg;
    if (!(next > v) || next - v <= 1e-15 * next) {
      v = std::max(v, next);
      break;
    }
    v = next;
  }
  return v;
}

double bessel_implicit_step(double a, double h) {
  return 0.5 * (a + std::sqrt(a * a + 2.0 * h));
}

}  // namespace

double gbm_exact(double tau, double w) {
  if (!(tau >= 0.0)) throw ConfigError("gbm_exact: tau must be >= 0");
  return std::exp(0.5 * tau + w);
}

double gbm_moment(double p, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("gbm_moment: tau must be >= 0");
  return std::exp(0.5 * p * (p + 1.0) * tau);
}

ScalarPath simulate_R_scalar(double tau_end, double dt, std::uint64_t seed) {
  const Grid g = make_grid(tau_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double sh = std::sqrt(g.h);
  ScalarPath p = start_path(g, 1.0, seed);
  double R = 1.0;
  for (std::size_t i = 0; i < g.steps; ++i) {
    const double dw = sh * normal(rng);
    R = std::max(1.0, R + R * g.h + r_sigma(R) * dw);
    push(p, i, g.h, R, dw);
  }
  return p;
}

ScalarPath simulate_R_stratonovich(double tau_end, double dt, std::uint64_t seed) {
  const Grid g = make_grid(tau_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double sh = std::sqrt(g.h);
  ScalarPath p = start_path(g, 1.0, seed);
  double R = 1.0;
  for (std::size_t i = 0; i < g.steps; ++i) {
    const double dw = sh * normal(rng);
    const double pred = std::max(1.0, R + 0.5 * R * g.h + r_sigma(R) * dw);
    const double mid = 0.5 * (R + pred);
    R = std::max(1.0, R + 0.5 * mid * g.h + r_sigma(mid) * dw);
    push(p, i, g.h, R, dw);
  }
  return p;
}

ScalarPath simulate_bessel2d(double tau_end, double dt, std::uint64_t seed) {
  const Grid g = make_grid(tau_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double sh = std::sqrt(g.h);
  ScalarPath p = start_path(g, 0.0, seed);
  // Norm of a planar random walk; the first step's first coordinate doubles
  // as the driver increment, later ones are radial projections.
  double w1 = sh * normal(rng);
  double w2 = sh * normal(rng);
  double X = std::hypot(w1, w2);
  push(p, 0, g.h, X, w1);
  for (std::size_t i = 1; i < g.steps; ++i) {
    const double d1 = sh * normal(rng);
    const double d2 = sh * normal(rng);
    const double dw = (w1 * d1 + w2 * d2) / X;
    w1 += d1;
    w2 += d2;
    X = std::hypot(w1, w2);
    push(p, i, g.h, X, dw);
  }
  return p;
}

double S_of_R(double R) {
  if (!(R >= 1.0 - 1e-12)) throw ConfigError("S_of_R: R must be >= 1");
  R = std::max(R, 1.0);
  return std::exp(std::acosh(R));
}

double R_of_S(double S) {
  if (!(S >= 1.0 - 1e-12)) throw ConfigError("R_of_S: S must be >= 1");
  S = std::max(S, 1.0);
  return 0.5 * (S + 1.0 / S);
}

ComparisonTriple simulate_comparison_triple(double tau_end, double dt,
                                            std::uint64_t seed) {
  const Grid g = make_grid(tau_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double sh = std::sqrt(g.h);
  ComparisonTriple t{start_path(g, 1.0, seed), start_path(g, 1.0, seed),
                     start_path(g, 0.0, seed)};

  const double g1 = normal(rng);
  const double g2 = normal(rng);
  double X = sh * std::hypot(g1, g2);
  double dw = sh * g1;
  double log_st = X;
  double log_s = 0.5 * g.h + dw;
  push(t.s_tilde, 0, g.h, std::exp(log_st), dw);
  push(t.s, 0, g.h, std::exp(log_s), dw);
  push(t.x, 0, g.h, X, dw);
  for (std::size_t i = 1; i < g.steps; ++i) {
    dw = sh * normal(rng);
    X = bessel_implicit_step(X + dw, g.h);
    log_st = implicit_log_s_tilde_step(log_st + dw, g.h);
    log_s += 0.5 * g.h + dw;
    push(t.s_tilde, i, g.h, std::exp(log_st), dw);
    push(t.s, i, g.h, std::exp(log_s), dw);
    push(t.x, i, g.h, X, dw);
  }
  return t;
}

QuadratureResult mass_concentration_quadrature(double tau) {
  if (!(tau > 0.0)) throw ConfigError("mass_concentration_quadrature: tau must be > 0");
  // E S = e^tau and S >= e^{3 tau/2} <=> w >= tau, so the ratio is
  //   int_tau^inf exp(-tau/2 + w - w^2/(2 tau)) dw / sqrt(2 pi tau).
  const double norm = 1.0 / std::sqrt(2.0 * kPi * tau);
  auto f = [&](double w) {
    return std::exp(-0.5 * tau + w - w * w / (2.0 * tau)) * norm;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  // exp_sinh integrates over [0, inf); shift to start at tau.
  const double value = integrator.integrate(
      [&](double v) { return f(tau + v); }, 1e-15, &error, &l1);
  if (error > 1e-10)
    throw NumericalError("mass concentration quadrature did not converge, error " +
                             std::to_string(error),
                         tau);
  return {value, error};
}

QuadratureResult gbm_moment_quadrature(double p, double tau) {
  if (!(tau > 0.0)) throw ConfigError("gbm_moment_quadrature: tau must be > 0");
  const double norm = 1.0 / std::sqrt(2.0 * kPi * tau);
  // Centre the integrand near its peak w = p tau for a well-conditioned sum.
  const double centre = p * tau;
  auto f = [&](double v) {
    const double w = centre + v;
    return std::exp(p * (0.5 * tau + w) - w * w / (2.0 * tau)) * norm;
  };
  boost::math::quadrature::sinh_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, 1e-15, &error, &l1);
  return {value, error};
}

MassConcentrationEstimate r_mass_concentration_mc(double tau, double dt,
                                                  std::size_t n_paths,
                                                  std::uint64_t seed,
                                                  RSource source, int workers) {
  if (!(tau > 0.0)) throw ConfigError("r_mass_concentration_mc: tau must be > 0");
  if (n_paths < 2) throw ConfigError("r_mass_concentration_mc: need >= 2 paths");
  const double mean_R = std::exp(tau);
  const double threshold = 0.5 * std::pow(mean_R, 1.5);
  const auto cov = CovarianceSpec::canonical();
  auto terminal = [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    if (source == RSource::kScalar) return simulate_R_scalar(tau, dt, s).values.back();
    return frobenius_R(integrate_F(0.0, tau, dt, cov, s, [](double, const Sl2Matrix&) {}));
  };
  const auto R = map_parallel(n_paths, workers, terminal);
  double sum = 0.0, sum2 = 0.0;
  for (double r : R) {
    const double v = r >= threshold ? r / mean_R : 0.0;
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(n_paths);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), n_paths};
}

}  // namespace sl2flow
