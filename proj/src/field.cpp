#include "sl2flow/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sl2flow/errors.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"

namespace sl2flow {

namespace {

constexpr double kPi = 3.14159265358979323846;

int max_index(double side) {
  return static_cast<int>(std::floor(side / (2.0 * kPi) * (1.0 + 1e-14)));
}

void check_grid(double side, int n) {
  if (!(side > 0.0)) throw ConfigError("torus side must be > 0");
  if (n < 4 || n % 2 != 0) throw ConfigError("grid size must be even and >= 4");
  if (n / 2 <= max_index(side))
    throw ConfigError("grid Nyquist wavenumber does not exceed the cutoff |k| = 1");
}

// Rounds x to `bits` significant bits, so products with integers of
// 52 - bits bits are exact.
double truncate_mantissa(double x, int bits) {
  if (x == 0.0) return 0.0;
  int e = 0;
  const double f = std::frexp(x, &e);
  return std::ldexp(std::nearbyint(std::ldexp(f, bits)), e - bits);
}

}  // namespace

double SpectralField::spacing() const { return 2.0 * kPi / torus_side; }
double SpectralField::cell_weight() const {
  return 2.0 * kPi / (torus_side * torus_side);
}

std::uint64_t mode_stream_index(int m1, int m2) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m2)) << 32) |
         static_cast<std::uint32_t>(m1 + (1 << 30));
}

SpectralField sample_field(double epsilon, double L, double torus_side, int grid_n,
                           std::uint64_t seed, int workers) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  check_grid(torus_side, grid_n);
  SpectralField f;
  f.torus_side = torus_side;
  f.grid_n = grid_n;
  f.epsilon = epsilon;
  f.inner_cutoff = (L > 0.0 && std::isfinite(L)) ? 1.0 / L : 0.0;
  f.seed = seed;
  if (f.inner_cutoff > f.outer_cutoff) throw ConfigError("L must be >= 1");

  const double kappa = f.spacing();
  const int M = max_index(torus_side);
  for (int m2 = 0; m2 <= M; ++m2)
    for (int m1 = -M; m1 <= M; ++m1) {
      if (m2 == 0 && m1 <= 0) continue;
      const double k = kappa * std::sqrt(static_cast<double>(m1 * m1 + m2 * m2));
      if (k > f.outer_cutoff || k < f.inner_cutoff) continue;
      f.modes.push_back({m1, m2, k, {}, {}});
    }
  std::stable_sort(f.modes.begin(), f.modes.end(),
                   [](const FieldMode& a, const FieldMode& b) {
                     return a.wavenumber < b.wavenumber;
                   });

  const int bits = 52 - std::bit_width(static_cast<unsigned>(std::max(M, 1)));
  const double amp = epsilon * std::sqrt(f.cell_weight() / 2.0);
  auto amplitude = [&](std::size_t i) {
    const FieldMode& md = f.modes[i];
    auto rng = seed_stream(seed, mode_stream_index(md.m1, md.m2));
    NormalSampler normal;
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    const double s = amp / std::sqrt(static_cast<double>(md.m1 * md.m1 + md.m2 * md.m2));
    return std::complex<double>(truncate_mantissa(s * g1, bits),
                                truncate_mantissa(s * g2, bits));
  };
  const auto t = map_parallel(f.modes.size(), workers, amplitude);
  for (std::size_t i = 0; i < f.modes.size(); ++i) {
    auto& md = f.modes[i];
    md.b1 = static_cast<double>(-md.m2) * t[i];
    md.b2 = static_cast<double>(md.m1) * t[i];
  }
  return f;
}

double divergence_residual(const SpectralField& field) {
  double r = 0.0;
  const double kappa = field.spacing();
  for (const auto& md : field.modes) {
    const auto d = static_cast<double>(md.m1) * md.b1 + static_cast<double>(md.m2) * md.b2;
    r = std::max(r, kappa * std::abs(d));
  }
  return r;
}

std::array<SpectralGrid, 2> field_spectrum(const SpectralField& field, int n) {
  if (n == 0) n = field.grid_n;
  check_grid(field.torus_side, n);
  std::array<SpectralGrid, 2> g{SpectralGrid(n, field.torus_side),
                                SpectralGrid(n, field.torus_side)};
  for (const auto& md : field.modes) {
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

RealField realize_field(const SpectralField& field, int n) {
  const auto g = field_spectrum(field, n);
  return {g[0].n(), field.torus_side, g[0].to_real(), g[1].to_real()};
}

SpectralGrid stream_function(const SpectralField& field, int n) {
  if (n == 0) n = field.grid_n;
  check_grid(field.torus_side, n);
  SpectralGrid psi(n, field.torus_side);
  const double kappa = field.spacing();
  for (const auto& md : field.modes) {
    // b2^ = m1 t, b1^ = -m2 t; psi^ = t / (i kappa).
    const std::complex<double> t =
        md.m1 != 0 ? md.b2 / static_cast<double>(md.m1) : -md.b1 / static_cast<double>(md.m2);
    const std::complex<double> p = std::complex<double>(0.0, -1.0 / kappa) * t;
    psi.at(psi.row_of(md.m1), md.m2) = p;
    if (md.m2 == 0) psi.at(psi.row_of(-md.m1), 0) = std::conj(p);
  }
  return psi;
}

AlgebraVector band_gradient(const SpectralField& field, double k_lo, double k_hi) {
  const double kappa = field.spacing();
  auto first = std::lower_bound(
      field.modes.begin(), field.modes.end(), k_lo,
      [](const FieldMode& md, double k) { return md.wavenumber < k; });
  AlgebraVector sum;
  for (auto it = first; it != field.modes.end() && it->wavenumber < k_hi; ++it) {
    // Mode pair k, -k contributes 2 Re(i k_i b^_j) / |k|^2 to d_i v_j.
    const double m1 = it->m1, m2 = it->m2;
    const double q = m1 * m1 + m2 * m2;
    const double s = 2.0 / (kappa * q);
    const double g11 = -s * m1 * it->b1.imag();
    const double g12 = -s * m1 * it->b2.imag();
    const double g21 = -s * m2 * it->b1.imag();
    const double g22 = -s * m2 * it->b2.imag();
    sum = sum + AlgebraVector::from_matrix({g11, g12, g21, g22});
  }
  return sum;
}

CoupledBPath coupled_B_path(const SpectralField& field, std::span<const double> lnL_grid) {
  if (!(field.epsilon > 0.0)) throw ConfigError("coupled_B_path: epsilon must be > 0");
  if (lnL_grid.empty() || lnL_grid.front() != 0.0)
    throw ConfigError("coupled_B_path: lnL grid must start at 0");
  for (std::size_t i = 1; i < lnL_grid.size(); ++i)
    if (!(lnL_grid[i] > lnL_grid[i - 1]))
      throw ConfigError("coupled_B_path: lnL grid must be increasing");
  const double k_min = std::max(field.inner_cutoff, field.spacing());
  if (std::exp(-lnL_grid.back()) < k_min * (1.0 - 1e-12))
    throw ConfigError("coupled_B_path: L beyond the band resolved by the field");

  CoupledBPath path;
  path.lnL_grid.assign(lnL_grid.begin(), lnL_grid.end());
  path.source_seed = field.seed;
  const double scale = std::sqrt(2.0) / field.epsilon;
  AlgebraVector acc;
  double k_hi = field.outer_cutoff;
  for (double lnL : lnL_grid) {
    const double k_lo = std::exp(-lnL);
    if (k_lo < k_hi) acc = acc + band_gradient(field, k_lo, k_hi);
    k_hi = std::min(k_hi, k_lo);
    path.values.push_back(scale * acc);
  }
  return path;
}

CircleTensor circle_tensor(int nodes) {
  if (nodes < 8) throw ConfigError("circle_tensor: need >= 8 nodes");
  CircleTensor ct;
  const double w = 1.0 / nodes;
  auto coeffs = [](const Mat2& m) {
    return std::array<double, 4>{0.5 * (m.a + m.d), 0.5 * (m.a - m.d), 0.5 * (m.b + m.c),
                                 0.5 * (m.c - m.b)};
  };
  auto outer = [](const std::array<double, 2>& r, const std::array<double, 2>& s) {
    return Mat2{r[0] * s[0], r[0] * s[1], r[1] * s[0], r[1] * s[1]};
  };
  auto add = [&](const Mat2& m, double weight) {
    const auto c = coeffs(m);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) ct.main[a][b] += weight * c[a] * c[b];
  };
  for (int j = 0; j < nodes; ++j) {
    const double th = 2.0 * kPi * j / nodes;
    const std::array<double, 2> k{std::cos(th), std::sin(th)};
    const std::array<double, 2> kp{-k[1], k[0]};
    const Mat2 kk = outer(k, k);
    for (int i = 0; i < 2; ++i) {
      std::array<double, 2> e{0.0, 0.0};
      e[i] = 1.0;
      const Mat2 ek = outer(e, k);
      add(ek, w);
      ct.signed_measure.push_back({2.0 * w, ek});
    }
    add(kk, -w);
    ct.signed_measure.push_back({-2.0 * w, kk});
    ct.kk_average = ct.kk_average + w * kk;
    ct.measure.push_back({2.0 * w, outer(kp, k)});
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) ct.per_unit_lnL[a][b] = 2.0 * ct.main[a + 1][b + 1];
  return ct;
}

PostulateResiduals check_postulates(std::span<const WeightedMatrix> measure) {
  Mat2 sq, gram;
  for (const auto& [w, E] : measure) {
    sq = sq + w * (E * E);
    gram = gram + w * (E * E.transpose());
  }
  gram = gram - Mat2::identity();
  return {std::sqrt(sq.norm2()), std::sqrt(gram.norm2())};
}

PostulateResiduals check_postulates(const CovarianceSpec& cov) {
  const auto m = cov.measure();
  return check_postulates(std::span<const WeightedMatrix>(m));
}

void write_field_dump(std::ostream& os, const SpectralField& field) {
  os << std::setprecision(17);
  os << "# sl2flow spectral field\n";
  os << "# torus_side " << field.torus_side << "\n";
  os << "# grid_n " << field.grid_n << "\n";
  os << "# epsilon " << field.epsilon << "\n";
  os << "# inner_cutoff " << field.inner_cutoff << "\n";
  os << "# outer_cutoff " << field.outer_cutoff << "\n";
  os << "# seed " << field.seed << "\n";
  os << "# modes " << field.modes.size() << "\n";
  os << "# columns m1 m2 re_b1 im_b1 re_b2 im_b2\n";
  for (const auto& md : field.modes)
    os << md.m1 << ' ' << md.m2 << ' ' << md.b1.real() << ' ' << md.b1.imag() << ' '
       << md.b2.real() << ' ' << md.b2.imag() << '\n';
}

SpectralField read_field_dump(std::istream& is) {
  SpectralField f;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "torus_side") ls >> f.torus_side;
      else if (key == "grid_n") ls >> f.grid_n;
      else if (key == "epsilon") ls >> f.epsilon;
      else if (key == "inner_cutoff") ls >> f.inner_cutoff;
      else if (key == "outer_cutoff") ls >> f.outer_cutoff;
      else if (key == "seed") ls >> f.seed;
      else if (key == "modes") ls >> expected;
      continue;
    }
    FieldMode md;
    double r1, i1, r2, i2;
    if (!(ls >> md.m1 >> md.m2 >> r1 >> i1 >> r2 >> i2))
      throw ConfigError("field dump: malformed record: " + line);
    md.b1 = {r1, i1};
    md.b2 = {r2, i2};
    f.modes.push_back(md);
  }
  if (f.modes.size() != expected) throw ConfigError("field dump: mode count mismatch");
  check_grid(f.torus_side, f.grid_n);
  const double kappa = f.spacing();
  for (auto& md : f.modes)
    md.wavenumber = kappa * std::sqrt(static_cast<double>(md.m1 * md.m1 + md.m2 * md.m2));
  return f;
}

}  // namespace sl2flow
