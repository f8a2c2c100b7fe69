#include "avgsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "avgsde/errors.hpp"
#include "avgsde/quadrature.hpp"

namespace avgsde::stats {

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("EmpiricalSample: empty sample");
  for (double v : values_)
    if (!std::isfinite(v)) throw NumericError("EmpiricalSample: non-finite entry");
  std::sort(values_.begin(), values_.end());
}

double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
  const auto& xs = a.values();
  const auto& ys = b.values();
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double t = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= t) ++i;
    while (j < ys.size() && ys[j] <= t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_against_gaussian(const EmpiricalSample& a, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("ks_against_gaussian: variance <= 0");
  const auto& xs = a.values();
  const double n = static_cast<double>(xs.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double phi = normal_cdf((xs[i] - mean) / sd);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - phi,
                             phi - static_cast<double>(i) / n));
  }
  return d;
}

double wasserstein1(const EmpiricalSample& a, const EmpiricalSample& b) {
  const auto& xs = a.values();
  const auto& ys = b.values();
  if (xs.size() == ys.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += std::fabs(xs[i] - ys[i]);
    return acc / static_cast<double>(xs.size());
  }
  // integral of |Qa(u) - Qb(u)| over the merged quantile breakpoints
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double ui = (static_cast<double>(i) + 1.0) / nx;
    const double uj = (static_cast<double>(j) + 1.0) / ny;
    const double next = std::min(ui, uj);
    acc += (next - u) * std::fabs(xs[i] - ys[j]);
    u = next;
    if (ui <= next) ++i;
    if (uj <= next) ++j;
  }
  return acc;
}

Covariance2x2 sample_cov(std::span<const double> first, std::span<const double> second) {
  const std::size_t n = first.size();
  if (n != second.size()) throw std::invalid_argument("sample_cov: size mismatch");
  if (n < 2) throw std::invalid_argument("sample_cov: need at least 2 pairs");
  const double dn = static_cast<double>(n);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += first[i];
    my += second[i];
  }
  mx /= dn;
  my /= dn;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = first[i] - mx;
    const double dy = second[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }

  Covariance2x2 cov;
  cov.q11 = sxx / (dn - 1.0);
  cov.q12 = sxy / (dn - 1.0);
  cov.q22 = syy / (dn - 1.0);

  if (n == 2) return cov;  // leave-one-out undefined; SEs stay 0

  // Leave-one-out estimates in closed form: removing point i changes the
  // centered cross sum to S - d_i e_i - d_i e_i/(n-1).
  auto jackknife_se = [&](double s, auto cross) {
    double mean_loo = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean_loo += (s - cross(i) * dn / (dn - 1.0)) / (dn - 2.0);
    mean_loo /= dn;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double loo = (s - cross(i) * dn / (dn - 1.0)) / (dn - 2.0);
      var += (loo - mean_loo) * (loo - mean_loo);
    }
    return std::sqrt((dn - 1.0) / dn * var);
  };
  cov.se11 = jackknife_se(sxx, [&](std::size_t i) {
    const double d = first[i] - mx;
    return d * d;
  });
  cov.se22 = jackknife_se(syy, [&](std::size_t i) {
    const double d = second[i] - my;
    return d * d;
  });
  cov.se12 = jackknife_se(sxy, [&](std::size_t i) {
    return (first[i] - mx) * (second[i] - my);
  });
  return cov;
}

RateFit fit_rate(std::span<const double> eps_values, std::span<const double> errors,
                 std::span<const double> std_errors) {
  if (eps_values.size() != errors.size())
    throw std::invalid_argument("fit_rate: size mismatch");
  if (!std_errors.empty() && std_errors.size() != errors.size())
    throw std::invalid_argument("fit_rate: stderr size mismatch");

  RateFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !(eps_values[i] > 0.0))
      throw std::invalid_argument("fit_rate: eps and errors must be positive");
    if (!std_errors.empty() && errors[i] < 2.0 * std_errors[i]) {
      fit.excluded.push_back(i);
      continue;
    }
    fit.used.push_back(i);
    lx.push_back(std::log(eps_values[i]));
    ly.push_back(std::log(errors[i]));
  }
  if (fit.used.size() < 3)
    throw NumericError("fit_rate: fewer than 3 usable points after noise-floor exclusion");

  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double ss_res = 0.0, ss_tot = 0.0;
  fit.residuals.resize(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    fit.residuals[i] = r;
    ss_res += r * r;
    ss_tot += (ly[i] - my) * (ly[i] - my);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double gaussian_sine_moment_oracle(double eps, double T, double m0, double amp,
                                   double /*offset*/) {
  if (T == 0.0) return 0.0;
  if (T < 0.0) throw std::invalid_argument("oracle: negative horizon");
  const auto integrand = [eps, m0](double s) {
    const double u = s / eps;
    const double mean = std::exp(-u) * m0;
    const double var = 1.0 - std::exp(-2.0 * u);
    return 0.5 * (1.0 - std::exp(-2.0 * var) * std::cos(2.0 * mean));
  };
  // The integrand relaxes on the scale eps; split the initial layer off so
  // adaptive refinement is not asked to find it.
  const double layer = std::min(T, 10.0 * eps);
  double value = quad::adaptive_simpson(integrand, 0.0, layer, 0.5e-10);
  if (layer < T) value += quad::adaptive_simpson(integrand, layer, T, 0.5e-10);
  return amp * amp * value;
}

double gaussian_sine_moment_limit(double T, double amp) {
  return amp * amp * T * 0.5 * (1.0 - std::exp(-2.0));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Acklam's rational approximation refined by one Halley step; good to
// full double precision over (0,1).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double ks_critical_one_sample(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double ks_critical_two_sample(double alpha, std::size_t n, std::size_t m) {
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace avgsde::stats
