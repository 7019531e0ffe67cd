#include "sl2flow/sl2.hpp"

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "sl2flow/errors.hpp"

namespace sl2flow {

double Mat2::det() const {
  // Kahan's algorithm for ad - bc.
  const double w = b * c;
  const double e = std::fma(-b, c, w);
  const double f = std::fma(a, d, -w);
  return f + e;
}

std::array<Mat2, 3> algebra_basis() {
  return {Mat2{1.0, 0.0, 0.0, -1.0}, Mat2{0.0, 1.0, 1.0, 0.0},
          Mat2{0.0, -1.0, 1.0, 0.0}};
}

Sl2Matrix renormalize(const Mat2& m, double at) {
  const double det = m.det();
  if (!(det > 0.0))
    throw NumericalError("non-positive determinant " + std::to_string(det) +
                             " in SL(2) step; dt too coarse",
                         at);
  return Sl2Matrix((1.0 / std::sqrt(det)) * m);
}

Sl2Matrix Sl2Matrix::from_matrix(const Mat2& m, double tol) {
  if (!(std::abs(m.det() - 1.0) <= tol))
    throw ConfigError("matrix is not in SL(2): det = " + std::to_string(m.det()));
  return renormalize(m);
}

CovarianceSpec CovarianceSpec::from_kappas(double kappa_sym, double kappa_skew) {
  CovarianceSpec c;
  c.kappa_sym = kappa_sym;
  c.kappa_skew = kappa_skew;
  c.validate();
  return c;
}

CovarianceSpec CovarianceSpec::from_atoms(std::vector<WeightedMatrix> atoms) {
  CovarianceSpec c;
  c.atoms = std::move(atoms);
  double sym = 0.0, skew = 0.0;
  for (const auto& [w, m] : c.atoms) {
    const auto v = AlgebraVector::from_matrix(m);
    sym += 0.5 * w * (v.a1 * v.a1 + v.a2 * v.a2);
    skew += w * v.a3 * v.a3;
  }
  c.kappa_sym = sym;
  c.kappa_skew = skew;
  c.validate();
  return c;
}

void CovarianceSpec::validate() const {
  if (!(kappa_sym >= 0.0) || !(kappa_skew >= 0.0))
    throw ConfigError("covariance: kappa_sym and kappa_skew must be >= 0");
  for (const auto& [w, m] : atoms) {
    if (!(w >= 0.0)) throw ConfigError("covariance: negative atom weight");
    const double scale = std::max(1.0, std::sqrt(m.norm2()));
    if (std::abs(m.trace()) > 1e-12 * scale)
      throw ConfigError("covariance: atom is not trace-free");
  }
}

std::vector<WeightedMatrix> CovarianceSpec::measure() const {
  if (!atoms.empty()) return atoms;
  const auto E = algebra_basis();
  return {{kappa_sym, E[0]}, {kappa_sym, E[1]}, {kappa_skew, E[2]}};
}

double CovarianceSpec::total_weight() const {
  double t = 0.0;
  for (const auto& atom : measure()) t += atom.weight;
  return t;
}

namespace {

AlgebraVector draw(double h, const CovarianceSpec& cov, Xoshiro256& rng,
                   NormalSampler& normal) {
  if (cov.atoms.empty()) {
    const double ss = std::sqrt(cov.kappa_sym * h);
    const double sk = std::sqrt(cov.kappa_skew * h);
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    const double g3 = normal(rng);
    return {ss * g1, ss * g2, sk * g3};
  }
  Mat2 m{};
  for (const auto& [w, e] : cov.atoms) m = m + (std::sqrt(w * h) * normal(rng)) * e;
  return AlgebraVector::from_matrix(m);
}

}  // namespace

AlgebraVector sample_increment(double d_tau, const CovarianceSpec& cov,
                               Xoshiro256& rng, NormalSampler& normal) {
  if (!(d_tau > 0.0)) throw ConfigError("sample_increment: d_tau must be > 0");
  cov.validate();
  return draw(d_tau, cov, rng, normal);
}

CellNoise::CellNoise(std::uint64_t seed, const CovarianceSpec& cov)
    : seed_(seed), cov_(cov), per_cell_(cov.atoms.empty() ? 3 : cov.atoms.size()) {
  cov_.validate();
  normals_.resize(per_cell_ * static_cast<std::size_t>(kBlock));
}

void CellNoise::fill(std::int64_t block) {
  auto rng = seed_stream(seed_, static_cast<std::uint64_t>(block));
  NormalSampler normal;
  for (auto& g : normals_) g = normal(rng);
  block_ = block;
}

AlgebraVector CellNoise::increment(std::int64_t cell, double h) {
  if (cell < 0) throw ConfigError("CellNoise: negative cell index");
  const std::int64_t block = cell / kBlock;
  if (block != block_) fill(block);
  const double* g = normals_.data() + per_cell_ * static_cast<std::size_t>(cell % kBlock);
  if (cov_.atoms.empty()) {
    const double ss = std::sqrt(cov_.kappa_sym * h);
    const double sk = std::sqrt(cov_.kappa_skew * h);
    return {ss * g[0], ss * g[1], sk * g[2]};
  }
  Mat2 m{};
  for (std::size_t i = 0; i < cov_.atoms.size(); ++i)
    m = m + (std::sqrt(cov_.atoms[i].weight * h) * g[i]) * cov_.atoms[i].matrix;
  return AlgebraVector::from_matrix(m);
}

AlgebraVector cell_increment(std::uint64_t seed, std::int64_t cell, double h,
                             const CovarianceSpec& cov) {
  return CellNoise(seed, cov).increment(cell, h);
}

Sl2Matrix step_ito(const Sl2Matrix& F, const AlgebraVector& dB, double at) {
  const Mat2& f = F.matrix();
  return renormalize(f + f * dB.matrix(), at);
}

double check_trace_identity(const Mat2& G) {
  if (std::abs(G.b - G.c) > 1e-12 * std::max(1.0, std::abs(G.b)))
    throw ConfigError("check_trace_identity: G must be symmetric");
  const auto E = algebra_basis();
  const double t1 = (G * E[0]).trace();
  const double t2 = (G * E[1]).trace();
  const double tr = G.trace();
  return t1 * t1 + t2 * t2 - (tr * tr - 4.0 * G.det());
}

namespace detail {
void check_path_args(double tau_start, double tau_end, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(tau_start >= 0.0)) throw ConfigError("tau_start must be >= 0");
  if (!std::isfinite(tau_end)) throw ConfigError("tau_end must be finite");
}
}  // namespace detail

MatrixPath simulate_F(double tau_start, double tau_end, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed) {
  cov.validate();
  MatrixPath path;
  path.seed = seed;
  integrate_F(tau_start, tau_end, dt, cov, seed,
              [&](double tau, const Sl2Matrix& F) {
                path.tau_grid.push_back(tau);
                path.states.push_back(F);
              });
  return path;
}

Sl2Matrix two_point_F(double tau_star, double tau, double dt,
                      const CovarianceSpec& cov, std::uint64_t seed) {
  if (!(tau_star >= 0.0) || !(tau >= 0.0))
    throw ConfigError("two_point_F: times must be >= 0");
  if (tau <= tau_star) return Sl2Matrix::identity();
  cov.validate();
  return integrate_F(tau_star, tau, dt, cov, seed, [](double, const Sl2Matrix&) {});
}

double scheme_norm_growth(double h, const CovarianceSpec& cov) {
  if (!cov.atoms.empty())
    throw ConfigError("scheme_norm_growth: needs the diagonal (kappa) form");
  if (!(h > 0.0)) throw ConfigError("scheme_norm_growth: h must be > 0");
  // With A = a1 E1 + a2 E2 + a3 E3 the renormalized step gives
  //   |F(I+A)|^2 / det(I+A),  E[. | F] = |F|^2 E[(1 + rho2 + a3^2) / (1 - rho2 + a3^2)]
  // where rho2 = a1^2 + a2^2 ~ Exp(mean 2 kappa_sym h), a3 ~ N(0, kappa_skew h).
  using boost::math::quadrature::gauss;
  constexpr int panels = 16;
  const double mean_rho2 = 2.0 * cov.kappa_sym * h;
  const double sd3 = std::sqrt(cov.kappa_skew * h);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::acos(-1.0));

  auto ratio = [](double rho2, double a3sq) {
    const double den = 1.0 - rho2 + a3sq;
    return den > 0.0 ? (1.0 + rho2 + a3sq) / den : 0.0;
  };
  auto over_a3 = [&](double rho2) {
    if (sd3 == 0.0) return ratio(rho2, 0.0);
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double lo = -12.0 + 24.0 * p / panels;
      const double hi = lo + 24.0 / panels;
      s += gauss<double, 30>::integrate(
          [&](double g) {
            const double a3 = sd3 * g;
            return ratio(rho2, a3 * a3) * std::exp(-0.5 * g * g) * inv_sqrt_2pi;
          },
          lo, hi);
    }
    return s;
  };
  if (mean_rho2 == 0.0) return over_a3(0.0);
  double k = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = 48.0 * p / panels;
    const double hi = lo + 48.0 / panels;
    k += gauss<double, 30>::integrate(
        [&](double v) { return over_a3(mean_rho2 * v) * std::exp(-v); }, lo, hi);
  }
  return k;
}

}  // namespace sl2flow
