#pragma once

// Divergence-free Gaussian drift on the torus [0, side)^2.
//
// Wave vectors are k = kappa (m1, m2) with kappa = 2 pi / side. Each retained
// mode of the half plane (m2 > 0, or m2 = 0 and m1 > 0) carries
//   t(k) = eps sqrt(w) eta / |m|,  eta = (g1 + i g2)/sqrt(2),  w = 2 pi / side^2,
//   b^(k) = t(k) (-m2, m1),
// so E b^ (x) conj(b^) = eps^2 w (id - k(x)k/|k|^2), E|b(x)|^2 = eps^2/2 in the
// continuum limit, and k . b^(k) = 0 holds exactly in floating point.

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sl2flow/sl2.hpp"
#include "sl2flow/spectral_grid.hpp"

namespace sl2flow {

struct FieldMode {
  int m1 = 0;
  int m2 = 0;
  /// |k| = kappa sqrt(m1^2 + m2^2).
  double wavenumber = 0.0;
  std::complex<double> b1;
  std::complex<double> b2;
};

struct SpectralField {
  double torus_side = 0.0;
  int grid_n = 0;
  double epsilon = 0.0;
  /// 1/L; 0 means no large-scale cutoff.
  double inner_cutoff = 0.0;
  double outer_cutoff = 1.0;
  std::uint64_t seed = 0;
  /// Half-plane representatives, sorted by increasing |k| (ties by index).
  std::vector<FieldMode> modes;

  double spacing() const;
  double cell_weight() const;
};

/// Stream index of mode (m1, m2); independent of grid size and cutoffs, so
/// fields with the same seed share the amplitudes of common modes.
std::uint64_t mode_stream_index(int m1, int m2);

/// Samples the modes with inner_cutoff <= |k| <= 1, inner_cutoff = 1/L
/// (L <= 0 or infinite: no inner cutoff). Throws ConfigError if the grid
/// Nyquist index n/2 does not exceed side/(2 pi), or if epsilon < 0.
SpectralField sample_field(double epsilon, double L, double torus_side, int grid_n,
                           std::uint64_t seed, int workers = 1);

/// max_k |k . b^(k)|.
double divergence_residual(const SpectralField& field);

/// Spectral grids of the two velocity components at resolution n (0: the
/// field's own grid_n). n must exceed 2 side/(2 pi).
std::array<SpectralGrid, 2> field_spectrum(const SpectralField& field, int n = 0);

struct RealField {
  int n = 0;
  double side = 0.0;
  /// Row-major grid values, x_ij = (i, j) side / n.
  std::vector<double> b1;
  std::vector<double> b2;
};

/// Inverse transform onto the n x n grid (0: field.grid_n).
RealField realize_field(const SpectralField& field, int n = 0);

/// psi with b = (-d2 psi, d1 psi); the k = 0 mode is 0.
SpectralGrid stream_function(const SpectralField& field, int n = 0);

/// grad (-Laplacian)^{-1} b at x = 0 from the modes with k_lo <= |k| < k_hi,
/// as trace-free algebra coefficients (the trace vanishes mode by mode).
AlgebraVector band_gradient(const SpectralField& field, double k_lo, double k_hi);

struct CoupledBPath {
  std::vector<double> lnL_grid;
  std::vector<AlgebraVector> values;
  std::uint64_t source_seed = 0;
};

/// B_L = (sqrt 2 / eps) grad (-Laplacian)^{-1} b_L (0) over the band
/// 1/L <= |k| < 1. The unit circle itself is excluded so that B_1 = 0.
/// Throws ConfigError for eps <= 0, a grid not starting at 0 or not
/// increasing, or L beyond the band the field resolves.
CoupledBPath coupled_B_path(const SpectralField& field, std::span<const double> lnL_grid);

struct CircleTensor {
  /// Average over the unit circle of
  ///   sum_i (e_i (x) k) (x) (e_i (x) k) - (k (x) k) (x) (k (x) k)
  /// as a covariance in the coefficients of (I, E1, E2, E3).
  std::array<std::array<double, 4>, 4> main{};
  /// Average of k (x) k.
  Mat2 kk_average;
  /// Per-unit-lnL covariance of B in (E1, E2, E3): twice the trace-free block.
  std::array<std::array<double, 3>, 3> per_unit_lnL{};
  /// Signed quadrature atoms of the per-unit-lnL measure in the form above.
  std::vector<WeightedMatrix> signed_measure;
  /// Equivalent nonnegative trace-free atoms (k_perp (x) k per node).
  std::vector<WeightedMatrix> measure;
};

/// Trapezoid rule with `nodes` points on the circle (exact for the
/// trigonometric polynomials involved once nodes >= 8).
CircleTensor circle_tensor(int nodes = 64);

struct PostulateResiduals {
  /// |sum w E^2|_F.
  double square = 0.0;
  /// |sum w E E^T - id|_F.
  double gram = 0.0;
};

PostulateResiduals check_postulates(std::span<const WeightedMatrix> measure);
PostulateResiduals check_postulates(const CovarianceSpec& cov);

/// Text dump: '#' header lines with side, n, eps, cutoffs and seed, then one
/// line per mode: m1 m2 re(b1) im(b1) re(b2) im(b2).
void write_field_dump(std::ostream& os, const SpectralField& field);
SpectralField read_field_dump(std::istream& is);

}  // namespace sl2flow
