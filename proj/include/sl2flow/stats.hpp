#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sl2flow {

/// Single-pass mean/variance accumulator (Welford update, Chan merge).
class RunningStats {
 public:
  void push(double x) noexcept;
  /// Merges another accumulator. Order of merges is part of the result, so
  /// callers that need bit-reproducibility must merge in a fixed order.
  void merge(const RunningStats& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// One estimate with its error bar and, optionally, the reference it is
/// checked against.
struct MomentReport {
  std::string name;
  std::size_t n_samples = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::optional<double> analytic_reference;
  std::optional<double> z_score;
  bool pass = true;
  std::string reference_source;

  /// Fills z_score and pass = |z| <= z_max. A zero standard error passes only
  /// on exact agreement.
  void compare_to(double reference, std::string source, double z_max = 3.0);
};

/// Streaming mean of n draws of `observable(i)`, i = 0..n-1, in index order.
/// Throws std::invalid_argument when n < 2.
MomentReport mc_mean(std::string name,
                     const std::function<double(std::size_t)>& observable,
                     std::size_t n);

/// Same, over precomputed samples (accumulated in index order).
MomentReport mc_mean(std::string name, std::span<const double> samples);

/// Survival function of the limiting Kolmogorov distribution,
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with the Stephens
/// small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample KS test against a continuous CDF.
KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf);

/// Sample Pearson correlation and the z-score of the null hypothesis of zero
/// correlation (Fisher approximation z = r * sqrt(n)).
struct CorrelationResult {
  double r = 0.0;
  double z = 0.0;
};
CorrelationResult correlation_z(std::span<const double> x,
                                std::span<const double> y);

/// Sample covariance of x and y together with its standard error, estimated
/// from the products (x_i - mean x)(y_i - mean y).
struct CovarianceEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
CovarianceEstimate sample_covariance(std::span<const double> x,
                                     std::span<const double> y);

/// Second moment E[x y] (centered model: no mean subtraction) with SE.
CovarianceEstimate product_moment(std::span<const double> x,
                                  std::span<const double> y);

}  // namespace sl2flow
