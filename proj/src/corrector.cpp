#include "sl2flow/corrector.hpp"

#include <algorithm>
#include <cmath>

#include "sl2flow/errors.hpp"

namespace sl2flow {

double lambda_of(double s, double epsilon) {
  if (!(s >= 0.0)) throw ConfigError("lambda_of: s must be >= 0");
  return std::sqrt(1.0 + 0.5 * epsilon * epsilon * std::log1p(s));
}

double tau_of(double s, double epsilon) {
  if (!(s >= 0.0)) throw ConfigError("tau_of: s must be >= 0");
  return 0.5 * std::log1p(0.5 * epsilon * epsilon * std::log1p(s));
}

double ScaleMap::tau_of_L(double L) const {
  if (!(L >= 1.0)) throw ConfigError("tau_of_L: L must be >= 1");
  return 0.5 * std::log1p(epsilon * epsilon * std::log(L));
}

double ScaleMap::lnL_of_tau(double tau) const {
  if (!(epsilon > 0.0)) throw ConfigError("lnL_of_tau: epsilon must be > 0");
  if (!(tau >= 0.0)) throw ConfigError("lnL_of_tau: tau must be >= 0");
  return std::expm1(2.0 * tau) / (epsilon * epsilon);
}

TildeLambda tilde_lambda_schedule(double T, double epsilon) {
  if (!(T >= 0.0)) throw ConfigError("tilde_lambda_schedule: T must be >= 0");
  return {std::sqrt(T + 1.0), lambda_of(T, epsilon)};
}

CorrectorState initial_corrector_state(const SpectralField& field, bool track_fields,
                                       int n) {
  CorrectorState s;
  s.track_fields = track_fields;
  if (track_fields) {
    if (n == 0) n = field.grid_n;
    for (auto* g : {&s.phi, &s.phi_tilde})
      *g = {SpectralGrid(n, field.torus_side), SpectralGrid(n, field.torus_side)};
  }
  return s;
}

namespace {

std::array<SpectralGrid, 2> shell_spectrum(const SpectralField& field, double k_lo,
                                           double k_hi, int n) {
  std::array<SpectralGrid, 2> g{SpectralGrid(n, field.torus_side),
                                SpectralGrid(n, field.torus_side)};
  for (const auto& md : field.modes) {
    if (md.wavenumber < k_lo || md.wavenumber >= k_hi) continue;
    const int row = g[0].row_of(md.m1);
    g[0].at(row, md.m2) = md.b1;
    g[1].at(row, md.m2) = md.b2;
    if (md.m2 == 0) {
      const int mirror = g[0].row_of(-md.m1);
      g[0].at(mirror, 0) = std::conj(md.b1);
      g[1].at(mirror, 0) = std::conj(md.b2);
    }
  }
  return g;
}

}  // namespace

CorrectorState advance_corrector(CorrectorState state, const SpectralField& field,
                                 double L_next) {
  if (!(L_next > state.L)) throw ConfigError("advance_corrector: L_next must exceed L");
  if (!(field.epsilon > 0.0)) throw ConfigError("advance_corrector: epsilon must be > 0");
  const double k_lo = 1.0 / L_next;
  const double k_hi = std::min(field.outer_cutoff, 1.0 / state.L);
  if (k_lo < std::max(field.inner_cutoff, field.spacing()) * (1.0 - 1e-12))
    throw ConfigError("advance_corrector: shell below the band resolved by the field");

  const double inv_lambda = 1.0 / lambda_of(state.L * state.L - 1.0, field.epsilon);
  const double L_prev = state.L;
  state.L = L_next;

  const auto first = std::lower_bound(
      field.modes.begin(), field.modes.end(), k_lo,
      [](const FieldMode& md, double k) { return md.wavenumber < k; });
  if (first == field.modes.end() || first->wavenumber >= k_hi) {
    ++state.empty_shells;
    return state;
  }

  const Mat2 grad = inv_lambda * band_gradient(field, k_lo, k_hi).matrix();
  state.F = state.F + state.F * grad;
  state.shell_gradients.push_back(grad);

  if (state.track_fields) {
    const int n = state.phi[0].n();
    auto db = shell_spectrum(field, k_lo, k_hi, n);
    std::array<SpectralGrid, 2> dphi{inv_lambda * db[0].inverse_neg_laplacian(),
                                     inv_lambda * db[1].inverse_neg_laplacian()};
    // Two-scale term phi~^i d_i dphi_j, skipped while phi~ = 0.
    std::array<SpectralGrid, 2> two_scale{SpectralGrid(n, field.torus_side),
                                          SpectralGrid(n, field.torus_side)};
    if (L_prev > 1.0) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          two_scale[j] += multiply_dealiased(state.phi_tilde[i], dphi[j].derivative(i));
    }
    for (int j = 0; j < 2; ++j) {
      state.phi[j] += dphi[j];
      state.phi_tilde[j] += dphi[j];
      state.phi_tilde[j] += two_scale[j];
    }
  }
  return state;
}

Mat2 proxy_gradient_at_zero(const CorrectorState& state) {
  if (!state.track_fields)
    throw ConfigError("proxy_gradient_at_zero: state does not track fields");
  Mat2 g = Mat2::identity();
  g.a += state.phi_tilde[0].derivative(0).value_at_origin();
  g.b += state.phi_tilde[1].derivative(0).value_at_origin();
  g.c += state.phi_tilde[0].derivative(1).value_at_origin();
  g.d += state.phi_tilde[1].derivative(1).value_at_origin();
  return g;
}

std::vector<double> shell_grid(double L_max, int shells_per_efold) {
  if (!(L_max >= 1.0)) throw ConfigError("shell_grid: L_max must be >= 1");
  if (shells_per_efold < 1) throw ConfigError("shell_grid: need >= 1 shell per e-fold");
  const double ln_max = std::log(L_max);
  std::vector<double> L{1.0};
  const double h = 1.0 / shells_per_efold;
  for (int i = 1;; ++i) {
    const double x = i * h;
    if (x >= ln_max - 1e-12 * std::max(1.0, ln_max)) break;
    L.push_back(std::exp(x));
  }
  if (L_max > 1.0) L.push_back(L_max);
  return L;
}

CorrectorState run_corrector(const SpectralField& field, double L_max,
                             int shells_per_efold, bool track_fields) {
  auto state = initial_corrector_state(field, track_fields);
  const auto grid = shell_grid(L_max, shells_per_efold);
  for (std::size_t i = 1; i < grid.size(); ++i)
    state = advance_corrector(std::move(state), field, grid[i]);
  return state;
}

}  // namespace sl2flow
