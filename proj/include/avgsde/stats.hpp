#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace avgsde::stats {

// Sorted finite sample; the carrier for empirical-law comparisons.
class EmpiricalSample {
 public:
  explicit EmpiricalSample(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// Exact two-sample Kolmogorov-Smirnov statistic by a merge scan.
double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);

// One-sample KS against N(mean, variance), both one-sided gaps at each
// sample point.
double ks_against_gaussian(const EmpiricalSample& a, double mean, double variance);

// 1-d optimal-coupling L1 distance. Equal sizes reduce to the mean absolute
// difference of sorted samples; unequal sizes integrate |Qa - Qb| over the
// merged quantile breakpoints (no resampling involved).
double wasserstein1(const EmpiricalSample& a, const EmpiricalSample& b);

struct Covariance2x2 {
  double q11 = 0.0, q12 = 0.0, q22 = 0.0;
  double se11 = 0.0, se12 = 0.0, se22 = 0.0;  // jackknife standard errors
};

// Unbiased sample covariance of paired observations, n >= 2.
Covariance2x2 sample_cov(std::span<const double> first, std::span<const double> second);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;        // per used point, log-space
  std::vector<std::size_t> used;        // indices into the input arrays
  std::vector<std::size_t> excluded;    // dropped: error below its noise floor
};

// Least-squares line through (log eps, log error). When standard errors are
// supplied, points with error < 2 * stderr are excluded (and reported);
// fewer than 3 usable points is an error.
RateFit fit_rate(std::span<const double> eps_values, std::span<const double> errors,
                 std::span<const double> std_errors = {});

// Exact second moment of the fluctuation endpoint in the simplified case
// sigma(m) = offset + amp*sin(m) with the OU fast process started at the
// deterministic m0:
//   E[Z_eps(T)^2] = amp^2 * int_0^T (1 - e^{-2 v(s/eps)} cos(2 mu(s/eps)))/2 ds,
//   mu(t) = e^{-t} m0,  v(t) = 1 - e^{-2t}
// (Ito isometry plus E[sin^2 N(mu,v)] = (1 - e^{-2v} cos 2mu)/2), computed
// by adaptive quadrature to 1e-10.
double gaussian_sine_moment_oracle(double eps, double T, double m0, double amp,
                                   double offset);

// Stationary plug-in value amp^2 T (1 - e^{-2})/2, the eps -> 0 limit.
double gaussian_sine_moment_limit(double T, double amp);

double normal_cdf(double z);
double normal_quantile(double p);

// Asymptotic KS critical values at level alpha.
double ks_critical_one_sample(double alpha, std::size_t n);
double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m);

}  // namespace avgsde::stats
