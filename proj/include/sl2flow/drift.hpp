#pragma once

// The physical side on the torus:
//   particles   dX = b(X) dt + sqrt(2) dW,
//   corrector   d_t phi = b . grad phi + Laplacian phi + b,  phi(0) = 0,
// with u(x, t) = x + phi(x, t) the thermally averaged position.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sl2flow/field.hpp"
#include "sl2flow/spectral_grid.hpp"

namespace sl2flow {

using Point = std::array<double, 2>;

/// Periodic bicubic (Keys, a = -1/2) interpolation of a realized field.
class BicubicField {
 public:
  explicit BicubicField(RealField field);

  Point operator()(const Point& x) const;
  /// max over grid points of |b|.
  double max_speed() const { return max_speed_; }
  /// Grid spacing side / n.
  double spacing() const { return field_.side / field_.n; }
  const RealField& field() const { return field_; }

 private:
  RealField field_;
  double max_speed_ = 0.0;
};

struct ParticlePath {
  std::vector<double> t_grid;
  /// Unwrapped positions.
  std::vector<Point> positions;
  std::uint64_t seed = 0;
};

/// Euler-Maruyama path from x0 over [0, t_end]. Throws NumericalError when
/// dt |b|_max exceeds the grid spacing.
ParticlePath simulate_particle(const BicubicField& b, const Point& x0, double t_end,
                               double dt, std::uint64_t seed);

/// Terminal position of simulate_particle without storing the path.
Point particle_endpoint(const BicubicField& b, const Point& x0, double t_end, double dt,
                        std::uint64_t seed);

struct PdeState {
  double t = 0.0;
  std::array<SpectralGrid, 2> phi;
};

struct PdeOptions {
  double dt = 0.05;
  /// Increasing output times in (0, T]; empty selects default_output_times(T).
  std::vector<double> output_times;
  /// Grid size (0: field.grid_n).
  int grid_n = 0;
  bool diffusion = true;
  bool forcing = true;
  /// Initial phi (default 0).
  std::array<SpectralGrid, 2> initial;
};

/// t = 0 followed by 64 logarithmically spaced times in [T/100, T].
std::vector<double> default_output_times(double T);

/// Integrating-factor RK4 in Fourier space: diffusion is exact, transport is
/// evaluated on the grid with 2/3 dealiasing. Returns the states at t = 0 and
/// at every output time. Throws NumericalError on a CFL violation or a
/// non-finite state (reporting the last stable time).
std::vector<PdeState> solve_phi_pde(const SpectralField& field, double T,
                                    const PdeOptions& options = {});

/// (1/T) int_0^T |x + phi(x,t) - phi(0,t)|^2 / |x|^2 dt by the trapezoid rule
/// over the series times (T = last time).
double increment_statistic(std::span<const PdeState> series, const Point& x);

/// Same average of |u(x,t) - u(0,t) - F^T x|^2 / |x|^2, where F is the
/// two-point flow from tau(|x|^2) to tau(T) driven by the coupled B of the
/// same field, stepped shell by shell in ln L with `shells_per_efold`.
double flow_residual(const SpectralField& field, std::span<const PdeState> series,
                         const Point& x, int shells_per_efold = 32);

/// The flow F of flow_residual.
Mat2 coupled_two_point_flow(const SpectralField& field, double s_start, double s_end,
                            int shells_per_efold = 32);

struct IntermittencyReport {
  double moment = 0.0;
  double std_error = 0.0;
  /// max{1, lambda(T)/lambda(|x|^2)}^{1 + 3(p-1)/2}.
  double reference = 1.0;
  double ratio = 0.0;
};

/// p-th moment of per-realization increment statistics.
IntermittencyReport intermittency_moment(std::span<const double> statistics, double p,
                                         double x_norm, double T, double epsilon);

}  // namespace sl2flow
