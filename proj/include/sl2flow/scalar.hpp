#pragma once

// One-dimensional companions of the SL(2) diffusion:
//   R  = |F|^2/2,       dR = R dtau + sqrt(R^2 - 1) dw,         R(0) = 1
//   S  (geometric BM),  d ln S = dtau/2 + dw,                    S(0) = 1
//   S~ = S(R),          d ln S~ = (S~^2+1)/(2(S~^2-1)) dtau + dw
//   X  (2D Bessel),     dX = dtau/(2X) + dw,                     X(0) = 0
// and the map S(R) = exp(arccosh R), R(S) = (S + 1/S)/2.

#include <cstdint>
#include <vector>

namespace sl2flow {

struct ScalarPath {
  std::vector<double> tau_grid;
  std::vector<double> values;
  /// Shared Brownian increments; size tau_grid.size() - 1.
  std::vector<double> driver_increments;
  std::uint64_t seed = 0;
};

/// Three paths driven by one increment sequence. `s_tilde` holds S~, `s`
/// holds S and `x` holds X.
struct ComparisonTriple {
  ScalarPath s_tilde;
  ScalarPath s;
  ScalarPath x;
};

/// e^{tau/2 + w}.
double gbm_exact(double tau, double w);

/// E S_tau^p = e^{p(p+1) tau / 2}.
double gbm_moment(double p, double tau);

/// Euler-Maruyama for dR = R dtau + sqrt(R^2-1) dw from R = 1, clamped to
/// R >= 1 after every step.
ScalarPath simulate_R_scalar(double tau_end, double dt, std::uint64_t seed);

/// Stratonovich form dR = R/2 dtau + sqrt(R^2-1) o dw integrated with the
/// midpoint (Heun) rule, same clamp.
ScalarPath simulate_R_stratonovich(double tau_end, double dt, std::uint64_t seed);

/// 2D Bessel process, sampled exactly on the grid as the norm of a planar
/// Gaussian random walk with variance dt per component and step. The driver
/// increments are the radial projections of the walk's steps (the first one
/// is its first coordinate), each exactly N(0, dt) given the past.
ScalarPath simulate_bessel2d(double tau_end, double dt, std::uint64_t seed);

/// exp(arccosh R); throws ConfigError for R < 1 - 1e-12, clamps [1-1e-12, 1).
double S_of_R(double R);
/// cosh(ln S) = (S + 1/S)/2; same domain handling.
double R_of_S(double S);

/// Integrates ln S~, ln S and X with one increment stream. X and ln S~ start
/// from the exactly sampled first Bessel step and then take drift-implicit
/// steps, X' = (a + sqrt(a^2 + 2h)) / 2 with a = X + dw, and the analogous
/// Newton-solved step for ln S~; ln S is integrated exactly. The discrete
/// scheme keeps ln S~ >= X and ln S~ >= ln S - dt/2 on every path.
ComparisonTriple simulate_comparison_triple(double tau_end, double dt,
                                            std::uint64_t seed);

struct QuadratureResult {
  double value = 0.0;
  double error_bound = 0.0;
};

/// E[S I(S >= (E S)^{3/2})] / E S by quadrature of the lognormal density.
/// Throws NumericalError if the reported error bound exceeds 1e-10.
QuadratureResult mass_concentration_quadrature(double tau);

/// E S_tau^p by quadrature over the Gaussian w_tau.
QuadratureResult gbm_moment_quadrature(double p, double tau);

enum class RSource { kMatrix, kScalar };

struct MassConcentrationEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Monte Carlo estimate of E[R I(R >= (E R)^{3/2} / 2)] / E R, with
/// E R = e^tau. Paths are indexed 0..n_paths-1 with seeds
/// derive_seed(seed, i); matrix paths use the canonical covariance.
MassConcentrationEstimate r_mass_concentration_mc(double tau, double dt,
                                                  std::size_t n_paths,
                                                  std::uint64_t seed,
                                                  RSource source, int workers = 1);

}  // namespace sl2flow
