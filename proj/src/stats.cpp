#include "sl2flow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sl2flow {

void RunningStats::push(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double RunningStats::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const noexcept {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

void MomentReport::compare_to(double reference, std::string source,
                              double z_max) {
  analytic_reference = reference;
  reference_source = std::move(source);
  if (std_error > 0.0) {
    z_score = (mean - reference) / std_error;
    pass = std::abs(*z_score) <= z_max;
  } else {
    z_score = mean == reference ? 0.0 : std::copysign(INFINITY, mean - reference);
    pass = mean == reference;
  }
}

MomentReport mc_mean(std::string name,
                     const std::function<double(std::size_t)>& observable,
                     std::size_t n) {
  if (n < 2) throw std::invalid_argument("mc_mean: need at least two samples");
  RunningStats acc;
  for (std::size_t i = 0; i < n; ++i) acc.push(observable(i));
  MomentReport r;
  r.name = std::move(name);
  r.n_samples = n;
  r.mean = acc.mean();
  r.std_error = acc.std_error();
  return r;
}

MomentReport mc_mean(std::string name, std::span<const double> samples) {
  return mc_mean(
      std::move(name), [&](std::size_t i) { return samples[i]; },
      samples.size());
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // Small lambda: the alternating series converges slowly; use the theta
  // function dual form 1 - sqrt(2 pi)/lambda sum exp(-(2j-1)^2 pi^2/(8 lambda^2)).
  if (lambda < 1.0) {
    const double pi = std::acos(-1.0);
    double s = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double k = 2.0 * j - 1.0;
      s += std::exp(-k * k * pi * pi / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_p(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return {d, stephens_p(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return {d, stephens_p(d, n)};
}

CorrelationResult correlation_z(std::span<const double> x,
                                std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("correlation_z: need matched samples, n >= 3");
  RunningStats sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.push(x[i]);
    sy.push(y[i]);
  }
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sxy += (x[i] - sx.mean()) * (y[i] - sy.mean());
  const double n = static_cast<double>(x.size());
  const double denom = std::sqrt(sx.variance() * sy.variance()) * (n - 1.0);
  const double r = denom > 0.0 ? sxy / denom : 0.0;
  return {r, r * std::sqrt(n)};
}

CovarianceEstimate sample_covariance(std::span<const double> x,
                                     std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("sample_covariance: need matched samples");
  RunningStats sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.push(x[i]);
    sy.push(y[i]);
  }
  RunningStats prod;
  for (std::size_t i = 0; i < x.size(); ++i)
    prod.push((x[i] - sx.mean()) * (y[i] - sy.mean()));
  const double n = static_cast<double>(x.size());
  return {prod.mean() * n / (n - 1.0), prod.std_error()};
}

CovarianceEstimate product_moment(std::span<const double> x,
                                  std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("product_moment: need matched samples");
  RunningStats prod;
  for (std::size_t i = 0; i < x.size(); ++i) prod.push(x[i] * y[i]);
  return {prod.mean(), prod.std_error()};
}

}  // namespace sl2flow
