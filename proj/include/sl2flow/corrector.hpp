#pragma once

// Scale functions and the scale-by-scale proxy corrector.
//
//   lambda(s) = sqrt(1 + (eps^2/2) ln(1+s)),  tau(s) = ln lambda(s).
//
// Shells of the drift are added from small to large scales. With
// db = b_{L'} - b_L and lambda~ = lambda(L^2 - 1) at the left endpoint,
//   dphi = lambda~^{-1} (-Laplacian)^{-1} db,
//   phi~ += (1 + phi~^i d_i) dphi,
//   F    += F grad dphi(0).

#include <array>
#include <vector>

#include "sl2flow/field.hpp"
#include "sl2flow/sl2.hpp"
#include "sl2flow/spectral_grid.hpp"

namespace sl2flow {

/// Throws ConfigError for s < 0.
double lambda_of(double s, double epsilon);
double tau_of(double s, double epsilon);

struct ScaleMap {
  double epsilon = 0.0;

  double lambda(double s) const { return lambda_of(s, epsilon); }
  double tau(double s) const { return tau_of(s, epsilon); }
  /// tau(L^2 - 1) = ln sqrt(1 + eps^2 ln L).
  double tau_of_L(double L) const;
  /// Inverse of tau_of_L in ln L: (e^{2 tau} - 1) / eps^2. Requires eps > 0.
  double lnL_of_tau(double tau) const;
};

struct TildeLambda {
  double L = 1.0;
  double lambda_tilde = 1.0;
};

/// L = sqrt(T + 1), lambda~ = lambda(T).
TildeLambda tilde_lambda_schedule(double T, double epsilon);

struct CorrectorState {
  double L = 1.0;
  /// When false only F is advanced (the fields are not needed for F).
  bool track_fields = false;
  /// Two components of the integrated dphi.
  std::array<SpectralGrid, 2> phi;
  std::array<SpectralGrid, 2> phi_tilde;
  /// Recursion state, not renormalized.
  Mat2 F = Mat2::identity();
  /// grad dphi(0) of every non-empty shell so far.
  std::vector<Mat2> shell_gradients;
  /// Number of shells that contained no modes.
  int empty_shells = 0;
};

/// State at L = 1 with zero fields on the n x n grid (0: field.grid_n).
CorrectorState initial_corrector_state(const SpectralField& field, bool track_fields,
                                       int n = 0);

/// Adds the shell 1/L_next <= |k| < 1/L. A shell without modes leaves the
/// fields and F unchanged and increments empty_shells. Throws ConfigError
/// for L_next <= L, eps <= 0, or a shell below the field's resolved band.
CorrectorState advance_corrector(CorrectorState state, const SpectralField& field,
                                 double L_next);

/// id + grad phi~(0), with (grad v)_ij = d_i v_j. Requires track_fields.
Mat2 proxy_gradient_at_zero(const CorrectorState& state);

/// Geometric L grid 1 = L_0 < ... = L_max with `shells_per_efold` shells per
/// unit of ln L (the last shell may be shorter).
std::vector<double> shell_grid(double L_max, int shells_per_efold);

/// Runs advance_corrector over shell_grid(L_max, shells_per_efold).
CorrectorState run_corrector(const SpectralField& field, double L_max,
                             int shells_per_efold, bool track_fields);

}  // namespace sl2flow
