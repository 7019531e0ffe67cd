#pragma once

#include <complex>
#include <span>
#include <vector>

namespace sl2flow {

/// Half-complex Fourier coefficients of a real periodic field on the torus
/// [0, side)^2 sampled on an n x n grid:
///   f(x) = sum_k c(k) exp(i k.x),  k = (2 pi / side) (m1, m2).
/// Row index i <-> m1 (i or i - n), column j <-> m2 in [0, n/2].
class SpectralGrid {
 public:
  SpectralGrid() = default;
  SpectralGrid(int n, double side);

  int n() const { return n_; }
  int columns() const { return n_ / 2 + 1; }
  double side() const { return side_; }
  /// Mode spacing 2 pi / side.
  double spacing() const;

  std::complex<double>& at(int i, int j) { return c_[idx(i, j)]; }
  const std::complex<double>& at(int i, int j) const { return c_[idx(i, j)]; }
  /// Signed wave index of row i.
  int wave_index(int i) const { return i <= n_ / 2 ? i : i - n_; }
  /// Row of signed wave index m (m taken mod n).
  int row_of(int m) const { return ((m % n_) + n_) % n_; }

  std::span<std::complex<double>> data() { return c_; }
  std::span<const std::complex<double>> data() const { return c_; }

  /// Grid values f(x_ij), x_ij = (i, j) * side / n, row-major.
  std::vector<double> to_real() const;
  /// Inverse of to_real (normalized forward transform).
  static SpectralGrid from_real(std::span<const double> values, int n, double side);

  /// Spectral partial derivative along axis 0 or 1; Nyquist modes dropped.
  SpectralGrid derivative(int axis) const;
  /// Applies (-Laplacian)^{-1}; the k = 0 mode is set to 0.
  SpectralGrid inverse_neg_laplacian() const;
  /// Zeroes modes with |m1| > n/3 or |m2| > n/3 (2/3 rule).
  void dealias();
  /// Multiplies mode k by exp(-|k|^2 t).
  void apply_heat(double t);

  /// f(0) = sum over all (Hermitian-completed) modes.
  double value_at_origin() const;
  /// f(x) by direct summation over modes (exact trigonometric interpolation).
  double value_at(double x1, double x2) const;
  /// Grid mean of f^2, by Parseval.
  double mean_square() const;
  /// k = 0 coefficient (the spatial mean).
  double mean() const { return c_.empty() ? 0.0 : c_[0].real(); }

  SpectralGrid& operator+=(const SpectralGrid& o);
  SpectralGrid& operator-=(const SpectralGrid& o);
  SpectralGrid& operator*=(double s);
  friend SpectralGrid operator+(SpectralGrid a, const SpectralGrid& b) { return a += b; }
  friend SpectralGrid operator-(SpectralGrid a, const SpectralGrid& b) { return a -= b; }
  friend SpectralGrid operator*(double s, SpectralGrid a) { return a *= s; }

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(columns()) +
           static_cast<std::size_t>(j);
  }
  int n_ = 0;
  double side_ = 0.0;
  std::vector<std::complex<double>> c_;
};

/// Pointwise product of two real fields, computed on the grid and
/// dealiased.
SpectralGrid multiply_dealiased(const SpectralGrid& a, const SpectralGrid& b);

}  // namespace sl2flow
