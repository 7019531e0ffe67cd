#pragma once

// The canonical diffusion dF = F dB on SL(2).
//
// Matrices act on cotangent vectors; the algebra sl(2) of trace-free 2x2
// matrices carries the basis
//   E1 = [[1,0],[0,-1]],  E2 = [[0,1],[1,0]],  E3 = [[0,-1],[1,0]],
// in which the canonical Brownian covariance is diagonal:
//   E B(1) (x) B(1) = 1/4 (E1(x)E1 + E2(x)E2) + 1/2 E3(x)E3.

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "sl2flow/rng.hpp"

namespace sl2flow {

/// Plain 2x2 real matrix, row-major [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double trace() const { return a + d; }
  /// ad - bc evaluated with a compensated product (error ~1 ulp of the
  /// result rather than of |ad|).
  double det() const;
  /// Squared Frobenius norm.
  constexpr double norm2() const { return a * a + b * b + c * c + d * d; }
  constexpr Mat2 transpose() const { return {a, c, b, d}; }

  friend constexpr Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend constexpr Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend constexpr Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& x) {
    return {s * x.a, s * x.b, s * x.c, s * x.d};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

  /// Applies the matrix to a column vector (x, y).
  constexpr std::array<double, 2> apply(double x, double y) const {
    return {a * x + b * y, c * x + d * y};
  }
};

/// Coefficients of a trace-free matrix in the basis (E1, E2, E3).
struct AlgebraVector {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;

  /// a1 E1 + a2 E2 + a3 E3 = [[a1, a2 - a3], [a2 + a3, -a1]]; trace-free by
  /// construction.
  constexpr Mat2 matrix() const { return {a1, a2 - a3, a2 + a3, -a1}; }

  /// Coordinates of the trace-free part of m.
  static constexpr AlgebraVector from_matrix(const Mat2& m) {
    return {0.5 * (m.a - m.d), 0.5 * (m.b + m.c), 0.5 * (m.c - m.b)};
  }

  friend constexpr AlgebraVector operator+(const AlgebraVector& x,
                                           const AlgebraVector& y) {
    return {x.a1 + y.a1, x.a2 + y.a2, x.a3 + y.a3};
  }
  friend constexpr AlgebraVector operator-(const AlgebraVector& x,
                                           const AlgebraVector& y) {
    return {x.a1 - y.a1, x.a2 - y.a2, x.a3 - y.a3};
  }
  friend constexpr AlgebraVector operator*(double s, const AlgebraVector& x) {
    return {s * x.a1, s * x.a2, s * x.a3};
  }
  friend constexpr bool operator==(const AlgebraVector&,
                                   const AlgebraVector&) = default;
};

/// Returns {E1, E2, E3}.
std::array<Mat2, 3> algebra_basis();

/// Element of SL(2). Every constructor path leaves |det - 1| at rounding
/// level.
class Sl2Matrix {
 public:
  Sl2Matrix() = default;  // identity

  /// Accepts m if |det m - 1| <= tol and rescales it to unit determinant.
  /// Throws ConfigError otherwise.
  static Sl2Matrix from_matrix(const Mat2& m, double tol = 1e-9);

  static Sl2Matrix identity() { return {}; }

  const Mat2& matrix() const { return m_; }
  double det() const { return m_.det(); }

 private:
  explicit Sl2Matrix(const Mat2& m) : m_(m) {}
  friend Sl2Matrix renormalize(const Mat2& m, double at);
  Mat2 m_ = Mat2::identity();
};

/// Divides m by sqrt(det m). Throws NumericalError (reporting `at`) when
/// det m <= 0.
Sl2Matrix renormalize(const Mat2& m, double at = 0.0);

struct WeightedMatrix {
  double weight;
  Mat2 matrix;
};

/// Covariance of the algebra-valued Brownian motion, C = int mu(dE) E (x) E.
///
/// With no explicit atoms the measure is
///   mu = kappa_sym (delta_E1 + delta_E2) + kappa_skew delta_E3.
struct CovarianceSpec {
  double kappa_sym = 0.25;
  double kappa_skew = 0.5;
  /// General measure; overrides the kappas for sampling when non-empty.
  std::vector<WeightedMatrix> atoms;

  static CovarianceSpec canonical() { return {}; }
  static CovarianceSpec from_kappas(double kappa_sym, double kappa_skew);
  static CovarianceSpec from_atoms(std::vector<WeightedMatrix> atoms);

  /// Throws ConfigError on negative kappas/weights or non-trace-free atoms.
  void validate() const;
  /// The measure mu as a list of atoms.
  std::vector<WeightedMatrix> measure() const;
  /// Total variance int mu(dE) (= 2 kappa_sym + kappa_skew for the diagonal
  /// form).
  double total_weight() const;
};

/// Gaussian increment over d_tau with covariance d_tau * C, in basis
/// coefficients. Throws ConfigError for d_tau <= 0.
AlgebraVector sample_increment(double d_tau, const CovarianceSpec& cov,
                               Xoshiro256& rng, NormalSampler& normal);

/// Noise schedule of one seed on the absolute cell grid. Cell j's standard
/// normals are a pure function of (seed, j): they come from the stream
/// seed_stream(seed, j / kBlock), so flows that overlap in tau reuse
/// identical noise. Blocks are generated lazily and cached.
class CellNoise {
 public:
  static constexpr std::int64_t kBlock = 64;

  CellNoise(std::uint64_t seed, const CovarianceSpec& cov);

  /// Increment of cell `cell` scaled to length h (h <= dt for partial cells).
  AlgebraVector increment(std::int64_t cell, double h);

 private:
  void fill(std::int64_t block);

  std::uint64_t seed_;
  CovarianceSpec cov_;
  std::size_t per_cell_;
  std::int64_t block_ = -1;
  std::vector<double> normals_;
};

/// One-off CellNoise(seed, cov).increment(cell, h).
AlgebraVector cell_increment(std::uint64_t seed, std::int64_t cell, double h,
                             const CovarianceSpec& cov);

/// One Euler-Maruyama step of dF = F dB followed by projection onto SL(2):
/// renormalize(F + F dB).
Sl2Matrix step_ito(const Sl2Matrix& F, const AlgebraVector& dB, double at = 0.0);

/// R = |F|^2 / 2 >= 1.
inline double frobenius_R(const Sl2Matrix& F) { return 0.5 * F.matrix().norm2(); }

/// (tr G E1)^2 + (tr G E2)^2 - ((tr G)^2 - 4 det G); vanishes for symmetric
/// G. Throws ConfigError if G is not symmetric.
double check_trace_identity(const Mat2& G);

struct MatrixPath {
  std::vector<double> tau_grid;
  std::vector<Sl2Matrix> states;
  std::uint64_t seed = 0;
};

/// Integrates dF = F dB from F = id at tau_start to tau_end on the absolute
/// cell grid {j dt}, calling observe(tau, F) at tau_start and after every
/// step. Returns the terminal state.
template <class Observer>
Sl2Matrix integrate_F(double tau_start, double tau_end, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed,
                      Observer&& observe);

/// Full path on the cell grid. tau_end <= tau_start yields the single-state
/// path [id].
MatrixPath simulate_F(double tau_start, double tau_end, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed);

/// Two-point flow F_{tau_star, tau}: id for tau <= tau_star, otherwise the
/// terminal state of simulate_F(tau_star, tau). Flows with the same seed share
/// noise on overlapping cells.
Sl2Matrix two_point_F(double tau_star, double tau, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed);

/// Exact one-step growth factor k(h) = E|F'|^2 / |F|^2 of the renormalized
/// Euler scheme, computed by Gauss-Legendre quadrature over the Gaussian
/// increment. The discrete scheme has E|F_n|^2 = 2 k(h)^n exactly.
double scheme_norm_growth(double h, const CovarianceSpec& cov);

// ---------------------------------------------------------------------------

namespace detail {
void check_path_args(double tau_start, double tau_end, double dt);
}

template <class Observer>
Sl2Matrix integrate_F(double tau_start, double tau_end, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed,
                      Observer&& observe) {
  detail::check_path_args(tau_start, tau_end, dt);
  Sl2Matrix F;
  observe(tau_start, F);
  if (tau_end <= tau_start) return F;
  CellNoise noise(seed, cov);
  const double skip = 1e-9 * dt;
  auto cell = static_cast<std::int64_t>(tau_start / dt);
  double tau = tau_start;
  while (tau < tau_end) {
    const double cell_end = std::min(tau_end, static_cast<double>(cell + 1) * dt);
    const double h = cell_end - tau;
    if (h > skip) {
      F = step_ito(F, noise.increment(cell, h), cell_end);
      tau = cell_end;
      observe(tau, F);
    } else if (cell_end >= tau_end) {
      break;
    }
    ++cell;
  }
  return F;
}

}  // namespace sl2flow
