#include "sl2flow/spectral_grid.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <fftw3.h>

#include "sl2flow/errors.hpp"

namespace sl2flow {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct Plans {
  fftw_plan c2r = nullptr;
  fftw_plan r2c = nullptr;
};

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are made once per size with FFTW_UNALIGNED so any buffer works.
const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const auto cols = static_cast<std::size_t>(n / 2 + 1);
  std::vector<std::complex<double>> c(static_cast<std::size_t>(n) * cols);
  std::vector<double> r(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  Plans p;
  p.c2r = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(c.data()),
                               r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.r2c = fftw_plan_dft_r2c_2d(n, n, r.data(),
                               reinterpret_cast<fftw_complex*>(c.data()),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, p).first->second;
}

}  // namespace

SpectralGrid::SpectralGrid(int n, double side) : n_(n), side_(side) {
  if (n < 4 || n % 2 != 0) throw ConfigError("grid size must be even and >= 4");
  if (!(side > 0.0)) throw ConfigError("torus side must be > 0");
  c_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(columns()), {});
}

double SpectralGrid::spacing() const { return kTwoPi / side_; }

std::vector<double> SpectralGrid::to_real() const {
  std::vector<double> out(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_));
  auto in = c_;  // c2r overwrites its input
  fftw_execute_dft_c2r(plans_for(n_).c2r, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  return out;
}

SpectralGrid SpectralGrid::from_real(std::span<const double> values, int n,
                                     double side) {
  SpectralGrid g(n, side);
  if (values.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
    throw ConfigError("from_real: size mismatch");
  std::vector<double> in(values.begin(), values.end());
  fftw_execute_dft_r2c(plans_for(n).r2c, in.data(),
                       reinterpret_cast<fftw_complex*>(g.c_.data()));
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (auto& c : g.c_) c *= scale;
  return g;
}

SpectralGrid SpectralGrid::derivative(int axis) const {
  SpectralGrid d = *this;
  const double kappa = spacing();
  const int half = n_ / 2;
  for (int i = 0; i < n_; ++i) {
    const int m1 = wave_index(i);
    for (int j = 0; j < columns(); ++j) {
      const int m = axis == 0 ? m1 : j;
      auto& c = d.at(i, j);
      if (m1 == half || j == half) {
        c = 0.0;
        continue;
      }
      c *= std::complex<double>(0.0, kappa * m);
    }
  }
  return d;
}

SpectralGrid SpectralGrid::inverse_neg_laplacian() const {
  SpectralGrid d = *this;
  const double k2unit = spacing() * spacing();
  for (int i = 0; i < n_; ++i) {
    const double m1 = wave_index(i);
    for (int j = 0; j < columns(); ++j) {
      const double q = m1 * m1 + static_cast<double>(j) * j;
      d.at(i, j) = q == 0.0 ? 0.0 : d.at(i, j) / (k2unit * q);
    }
  }
  return d;
}

void SpectralGrid::dealias() {
  const int cut = n_ / 3;
  for (int i = 0; i < n_; ++i) {
    const int m1 = std::abs(wave_index(i));
    for (int j = 0; j < columns(); ++j)
      if (m1 > cut || j > cut) at(i, j) = 0.0;
  }
}

void SpectralGrid::apply_heat(double t) {
  const double k2unit = spacing() * spacing();
  for (int i = 0; i < n_; ++i) {
    const double m1 = wave_index(i);
    for (int j = 0; j < columns(); ++j)
      at(i, j) *= std::exp(-k2unit * (m1 * m1 + static_cast<double>(j) * j) * t);
  }
}

double SpectralGrid::value_at_origin() const {
  double s = 0.0;
  const int half = n_ / 2;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < columns(); ++j) {
      const double w = (j == 0 || j == half) ? 1.0 : 2.0;
      s += w * at(i, j).real();
    }
  return s;
}

double SpectralGrid::value_at(double x1, double x2) const {
  const double kappa = spacing();
  const int half = n_ / 2;
  std::vector<std::complex<double>> col(static_cast<std::size_t>(columns()));
  for (int j = 0; j < columns(); ++j) col[j] = std::polar(1.0, kappa * j * x2);
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    const std::complex<double> row = std::polar(1.0, kappa * wave_index(i) * x1);
    std::complex<double> acc = 0.0;
    for (int j = 0; j < columns(); ++j) {
      const double w = (j == 0 || j == half) ? 1.0 : 2.0;
      acc += w * at(i, j) * col[j];
    }
    s += (row * acc).real();
  }
  return s;
}

double SpectralGrid::mean_square() const {
  double s = 0.0;
  const int half = n_ / 2;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < columns(); ++j) {
      const double w = (j == 0 || j == half) ? 1.0 : 2.0;
      s += w * std::norm(at(i, j));
    }
  return s;
}

SpectralGrid& SpectralGrid::operator+=(const SpectralGrid& o) {
  if (o.n_ != n_) throw ConfigError("SpectralGrid: size mismatch");
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

SpectralGrid& SpectralGrid::operator-=(const SpectralGrid& o) {
  if (o.n_ != n_) throw ConfigError("SpectralGrid: size mismatch");
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

SpectralGrid& SpectralGrid::operator*=(double s) {
  for (auto& c : c_) c *= s;
  return *this;
}

SpectralGrid multiply_dealiased(const SpectralGrid& a, const SpectralGrid& b) {
  if (a.n() != b.n()) throw ConfigError("multiply_dealiased: size mismatch");
  auto ra = a.to_real();
  const auto rb = b.to_real();
  for (std::size_t k = 0; k < ra.size(); ++k) ra[k] *= rb[k];
  auto p = SpectralGrid::from_real(ra, a.n(), a.side());
  p.dealias();
  return p;
}

}  // namespace sl2flow
