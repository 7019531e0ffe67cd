#include "sl2flow/drift.hpp"

#include <algorithm>
#include <cmath>

#include "sl2flow/corrector.hpp"
#include "sl2flow/errors.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/stats.hpp"

namespace sl2flow {

namespace {

// Keys cubic convolution kernel with a = -1/2, for |s| < 2.
double keys(double s) {
  s = std::abs(s);
  if (s <= 1.0) return (1.5 * s - 2.5) * s * s + 1.0;
  return ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0;
}

}  // namespace

BicubicField::BicubicField(RealField field) : field_(std::move(field)) {
  for (std::size_t k = 0; k < field_.b1.size(); ++k)
    max_speed_ = std::max(max_speed_, std::hypot(field_.b1[k], field_.b2[k]));
}

Point BicubicField::operator()(const Point& x) const {
  const int n = field_.n;
  const double inv_h = n / field_.side;
  const double u = x[0] * inv_h;
  const double v = x[1] * inv_h;
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double su = u - fu;
  const double sv = v - fv;
  const auto wrap = [n](double f) {
    const auto i = static_cast<long long>(f) % n;
    return static_cast<int>(i < 0 ? i + n : i);
  };
  const int i0 = wrap(fu);
  const int j0 = wrap(fv);
  const double wu[4] = {keys(su + 1.0), keys(su), keys(1.0 - su), keys(2.0 - su)};
  const double wv[4] = {keys(sv + 1.0), keys(sv), keys(1.0 - sv), keys(2.0 - sv)};
  int cols[4];
  for (int q = 0; q < 4; ++q) cols[q] = (j0 + q - 1 + n) % n;
  double b1 = 0.0, b2 = 0.0;
  for (int p = 0; p < 4; ++p) {
    const std::size_t row = static_cast<std::size_t>((i0 + p - 1 + n) % n) * n;
    double r1 = 0.0, r2 = 0.0;
    for (int q = 0; q < 4; ++q) {
      r1 += wv[q] * field_.b1[row + cols[q]];
      r2 += wv[q] * field_.b2[row + cols[q]];
    }
    b1 += wu[p] * r1;
    b2 += wu[p] * r2;
  }
  return {b1, b2};
}

namespace {

struct StepPlan {
  std::size_t steps;
  double h;
};

StepPlan particle_plan(const BicubicField& b, double t_end, double dt) {
  if (!(t_end > 0.0)) throw ConfigError("particle: t_end must be > 0");
  if (!(dt > 0.0)) throw ConfigError("particle: dt must be > 0");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t_end / dt - 1e-9)));
  const double h = t_end / static_cast<double>(steps);
  if (h * b.max_speed() > b.spacing())
    throw NumericalError("particle: advective CFL violated (dt |b|_max > grid spacing)", 0.0);
  return {steps, h};
}

}  // namespace

ParticlePath simulate_particle(const BicubicField& b, const Point& x0, double t_end,
                               double dt, std::uint64_t seed) {
  const auto plan = particle_plan(b, t_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double noise = std::sqrt(2.0 * plan.h);
  ParticlePath p;
  p.seed = seed;
  p.t_grid.reserve(plan.steps + 1);
  p.positions.reserve(plan.steps + 1);
  p.t_grid.push_back(0.0);
  p.positions.push_back(x0);
  Point x = x0;
  for (std::size_t i = 0; i < plan.steps; ++i) {
    const Point v = b(x);
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    x = {x[0] + v[0] * plan.h + noise * g1, x[1] + v[1] * plan.h + noise * g2};
    p.t_grid.push_back(static_cast<double>(i + 1) * plan.h);
    p.positions.push_back(x);
  }
  return p;
}

Point particle_endpoint(const BicubicField& b, const Point& x0, double t_end, double dt,
                        std::uint64_t seed) {
  const auto plan = particle_plan(b, t_end, dt);
  auto rng = seed_stream(seed, 0);
  NormalSampler normal;
  const double noise = std::sqrt(2.0 * plan.h);
  Point x = x0;
  for (std::size_t i = 0; i < plan.steps; ++i) {
    const Point v = b(x);
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    x = {x[0] + v[0] * plan.h + noise * g1, x[1] + v[1] * plan.h + noise * g2};
  }
  return x;
}

std::vector<double> default_output_times(double T) {
  if (!(T > 0.0)) throw ConfigError("output times: T must be > 0");
  std::vector<double> t{0.0};
  const double a = std::log(T / 100.0);
  const double b = std::log(T);
  for (int i = 0; i < 64; ++i) t.push_back(std::exp(a + (b - a) * i / 63.0));
  t.back() = T;
  return t;
}

namespace {

using Pair = std::array<SpectralGrid, 2>;

void scale_modes(SpectralGrid& g, const std::vector<double>& factor) {
  auto d = g.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= factor[k];
}

std::vector<double> heat_factor(const SpectralGrid& g, double t) {
  std::vector<double> f(g.data().size());
  const double k2 = g.spacing() * g.spacing();
  for (int i = 0; i < g.n(); ++i) {
    const double m1 = g.wave_index(i);
    for (int j = 0; j < g.columns(); ++j)
      f[static_cast<std::size_t>(i) * g.columns() + j] =
          std::exp(-k2 * (m1 * m1 + static_cast<double>(j) * j) * t);
  }
  return f;
}

class PdeRhs {
 public:
  PdeRhs(const SpectralField& field, int n, bool forcing)
      : bhat_(field_spectrum(field, n)), forcing_(forcing) {
    b_[0] = bhat_[0].to_real();
    b_[1] = bhat_[1].to_real();
    for (std::size_t k = 0; k < b_[0].size(); ++k)
      max_speed_ = std::max(max_speed_, std::hypot(b_[0][k], b_[1][k]));
  }

  double max_speed() const { return max_speed_; }

  Pair operator()(const Pair& phi) const {
    Pair out;
    for (int j = 0; j < 2; ++j) {
      const auto d1 = phi[j].derivative(0).to_real();
      const auto d2 = phi[j].derivative(1).to_real();
      std::vector<double> adv(d1.size());
      for (std::size_t k = 0; k < adv.size(); ++k)
        adv[k] = b_[0][k] * d1[k] + b_[1][k] * d2[k];
      out[j] = SpectralGrid::from_real(adv, phi[j].n(), phi[j].side());
      out[j].dealias();
      if (forcing_) out[j] += bhat_[j];
    }
    return out;
  }

 private:
  Pair bhat_;
  std::array<std::vector<double>, 2> b_;
  bool forcing_;
  double max_speed_ = 0.0;
};

bool finite(const Pair& p) {
  for (const auto& g : p)
    for (const auto& c : g.data())
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

}  // namespace

std::vector<PdeState> solve_phi_pde(const SpectralField& field, double T,
                                    const PdeOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("pde: dt must be > 0");
  const int n = options.grid_n == 0 ? field.grid_n : options.grid_n;
  auto times = options.output_times.empty() ? default_output_times(T) : options.output_times;
  if (times.empty() || times.front() != 0.0) times.insert(times.begin(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("pde: output times must increase");
  if (times.back() > T * (1.0 + 1e-12)) throw ConfigError("pde: output time beyond T");

  const PdeRhs rhs(field, n, options.forcing);
  if (options.dt * rhs.max_speed() > field.torus_side / n)
    throw NumericalError("pde: advective CFL violated (dt |b|_max > grid spacing)", 0.0);

  Pair phi;
  if (options.initial[0].n() != 0) {
    phi = options.initial;
    if (phi[0].n() != n || phi[1].n() != n) throw ConfigError("pde: initial grid mismatch");
  } else {
    phi = {SpectralGrid(n, field.torus_side), SpectralGrid(n, field.torus_side)};
  }

  std::vector<PdeState> out{{0.0, phi}};
  std::vector<double> e_full, e_half;
  double cached_h = -1.0;
  double t = 0.0;
  for (std::size_t oi = 1; oi < times.size(); ++oi) {
    const double target = times[oi];
    while (t < target) {
      double h = std::min(options.dt, target - t);
      if (target - (t + h) < 1e-9 * options.dt) h = target - t;
      if (h != cached_h) {
        const double d = options.diffusion ? 1.0 : 0.0;
        e_full = heat_factor(phi[0], d * h);
        e_half = heat_factor(phi[0], d * 0.5 * h);
        cached_h = h;
      }
      const Pair k1 = rhs(phi);
      Pair a;
      for (int j = 0; j < 2; ++j) {
        a[j] = phi[j] + (0.5 * h) * k1[j];
        scale_modes(a[j], e_half);
      }
      const Pair k2 = rhs(a);
      Pair b;
      for (int j = 0; j < 2; ++j) {
        b[j] = phi[j];
        scale_modes(b[j], e_half);
        b[j] += (0.5 * h) * k2[j];
      }
      const Pair k3 = rhs(b);
      Pair c;
      for (int j = 0; j < 2; ++j) {
        SpectralGrid k3h = k3[j];
        scale_modes(k3h, e_half);
        c[j] = phi[j];
        scale_modes(c[j], e_full);
        c[j] += h * k3h;
      }
      const Pair k4 = rhs(c);
      for (int j = 0; j < 2; ++j) {
        SpectralGrid k1e = k1[j];
        scale_modes(k1e, e_full);
        SpectralGrid mid = k2[j] + k3[j];
        scale_modes(mid, e_half);
        scale_modes(phi[j], e_full);
        phi[j] += (h / 6.0) * (k1e + 2.0 * mid + k4[j]);
      }
      if (!finite(phi)) throw NumericalError("pde: non-finite state; last stable time", t);
      t = (target - (t + h) < 1e-9 * options.dt) ? target : t + h;
    }
    out.push_back({target, phi});
  }
  return out;
}

namespace {

// Integrand |x + phi(x,t) - phi(0,t) - y|^2 / |x|^2 averaged in time.
double time_average(std::span<const PdeState> series, const Point& x, const Point& y) {
  if (series.size() < 2 || series.front().t != 0.0)
    throw ConfigError("time average: series must start at t = 0 with >= 2 states");
  const double x2 = x[0] * x[0] + x[1] * x[1];
  if (!(x2 > 0.0)) throw ConfigError("time average: x must be nonzero");
  std::vector<double> f;
  f.reserve(series.size());
  for (const auto& s : series) {
    const double d1 = x[0] + s.phi[0].value_at(x[0], x[1]) - s.phi[0].value_at_origin() - y[0];
    const double d2 = x[1] + s.phi[1].value_at(x[0], x[1]) - s.phi[1].value_at_origin() - y[1];
    f.push_back((d1 * d1 + d2 * d2) / x2);
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i)
    integral += 0.5 * (series[i].t - series[i - 1].t) * (f[i] + f[i - 1]);
  return integral / series.back().t;
}

}  // namespace

double increment_statistic(std::span<const PdeState> series, const Point& x) {
  return time_average(series, x, {0.0, 0.0});
}

Mat2 coupled_two_point_flow(const SpectralField& field, double s_start, double s_end,
                            int shells_per_efold) {
  if (!(s_start >= 0.0) || !(s_end >= 0.0)) throw ConfigError("two-point flow: s must be >= 0");
  if (shells_per_efold < 1) throw ConfigError("two-point flow: need >= 1 shell per e-fold");
  Sl2Matrix F;
  if (s_end <= s_start || field.epsilon == 0.0) return F.matrix();
  const double a = 0.5 * std::log1p(s_start);
  const double b = 0.5 * std::log1p(s_end);
  const double k_min = std::max(field.inner_cutoff, field.spacing());
  if (std::exp(-b) < k_min * (1.0 - 1e-12))
    throw ConfigError("two-point flow: L beyond the band resolved by the field");
  const auto shells = static_cast<int>(std::ceil((b - a) * shells_per_efold - 1e-9));
  const double h = (b - a) / std::max(shells, 1);
  for (int i = 0; i < shells; ++i) {
    const double lnL = a + i * h;
    const double lnL_next = i + 1 == shells ? b : a + (i + 1) * h;
    const double L = std::exp(lnL);
    // dB in the tau clock: (eps / (sqrt 2 lambda)) dB_L = grad dphi(0).
    const double inv_lambda = 1.0 / lambda_of(L * L - 1.0, field.epsilon);
    const AlgebraVector dB =
        inv_lambda * band_gradient(field, std::exp(-lnL_next), std::exp(-lnL));
    F = step_ito(F, dB, lnL_next);
  }
  return F.matrix();
}

double flow_residual(const SpectralField& field, std::span<const PdeState> series,
                         const Point& x, int shells_per_efold) {
  if (series.empty()) throw ConfigError("flow_residual: empty series");
  const double T = series.back().t;
  const double x2 = x[0] * x[0] + x[1] * x[1];
  const Mat2 F = coupled_two_point_flow(field, x2, T, shells_per_efold);
  const Point Fx = F.transpose().apply(x[0], x[1]);
  return time_average(series, x, Fx);
}

IntermittencyReport intermittency_moment(std::span<const double> statistics, double p,
                                         double x_norm, double T, double epsilon) {
  if (statistics.size() < 2) throw ConfigError("intermittency_moment: need >= 2 samples");
  if (!(p >= 1.0)) throw ConfigError("intermittency_moment: p must be >= 1");
  RunningStats rs;
  for (double s : statistics) rs.push(std::pow(s, p));
  IntermittencyReport r;
  r.moment = rs.mean();
  r.std_error = rs.std_error();
  const double growth =
      std::max(1.0, lambda_of(T, epsilon) / lambda_of(x_norm * x_norm, epsilon));
  r.reference = std::pow(growth, 1.0 + 1.5 * (p - 1.0));
  r.ratio = r.moment / r.reference;
  return r;
}

}  // namespace sl2flow
