#include <cmath>
#include <vector>

#include "doctest.h"

#include "avgsde/errors.hpp"
#include "avgsde/rng.hpp"
#include "avgsde/stats.hpp"

using namespace avgsde;
using stats::EmpiricalSample;

namespace {

std::vector<double> gaussian_draws(std::uint64_t seed, long n, double sd = 1.0) {
  RngStream rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = sd * rng.gaussian();
  return out;
}

}  // namespace

TEST_CASE("two-sample KS") {
  const EmpiricalSample a({0.4, 0.1, 0.7});
  CHECK(stats::ks_two_sample(a, a) == 0.0);
  CHECK(stats::ks_two_sample(EmpiricalSample({0.0}), EmpiricalSample({1.0})) == 1.0);

  const long n = 100000;
  const EmpiricalSample x(gaussian_draws(11, n));
  const EmpiricalSample y(gaussian_draws(22, n));
  const double d = stats::ks_two_sample(x, y);
  CHECK(d <= 0.0087);  // 1.95*sqrt(2/n), the 0.001-level critical value
  CHECK(d == stats::ks_two_sample(y, x));

  // invariance under a common strictly increasing transform
  auto ex = x.values();
  auto ey = y.values();
  for (double& v : ex) v = std::exp(v);
  for (double& v : ey) v = std::exp(v);
  CHECK(stats::ks_two_sample(EmpiricalSample(std::move(ex)), EmpiricalSample(std::move(ey))) ==
        d);
}

TEST_CASE("one-sample KS against a gaussian") {
  const long n = 1000;
  std::vector<double> quantiles(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    quantiles[static_cast<std::size_t>(i)] =
        stats::normal_quantile((static_cast<double>(i) + 0.5) / n);
  const double d = stats::ks_against_gaussian(EmpiricalSample(std::move(quantiles)), 0.0, 1.0);
  CHECK(std::fabs(d - 0.5 / n) <= 1e-12);

  const double shifted =
      stats::ks_against_gaussian(EmpiricalSample(gaussian_draws(5, 1000)), 5.0, 1.0);
  CHECK(shifted >= 0.98);

  CHECK(stats::ks_against_gaussian(EmpiricalSample({0.0}), 0.0, 1.0) == 0.5);
  CHECK_THROWS(stats::ks_against_gaussian(EmpiricalSample({0.0}), 0.0, 0.0));
}

TEST_CASE("wasserstein distance") {
  const auto base = gaussian_draws(7, 5000);
  auto shifted = base;
  for (double& v : shifted) v += 0.75;
  CHECK(stats::wasserstein1(EmpiricalSample(base), EmpiricalSample(shifted)) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(stats::wasserstein1(EmpiricalSample(base), EmpiricalSample(base)) == 0.0);

  // N(0,1) vs N(0,4): W1 = E|xi| (2-1) = sqrt(2/pi)
  const double w = stats::wasserstein1(EmpiricalSample(gaussian_draws(100, 100000)),
                                       EmpiricalSample(gaussian_draws(200, 100000, 2.0)));
  CHECK(std::fabs(w - std::sqrt(2.0 / 3.14159265358979323846)) <= 0.01);

  // unequal sizes integrate the quantile gap exactly
  CHECK(stats::wasserstein1(EmpiricalSample({0.0, 1.0}), EmpiricalSample({0.5})) ==
        doctest::Approx(0.5).epsilon(1e-15));

  auto perturbed = base;
  perturbed[17] += 1e-9;
  CHECK(stats::wasserstein1(EmpiricalSample(base), EmpiricalSample(perturbed)) > 0.0);
  CHECK_THROWS(EmpiricalSample(std::vector<double>{}));
}

TEST_CASE("sample covariance with jackknife errors") {
  const std::vector<double> a{1.0, -1.0}, b{0.0, 0.0};
  const auto two = stats::sample_cov(a, b);
  CHECK(two.q11 == 2.0);
  CHECK(two.q12 == 0.0);
  CHECK(two.q22 == 0.0);

  std::vector<double> t(1000);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * static_cast<double>(i);
  const auto corr = stats::sample_cov(t, t);
  CHECK(corr.q12 == doctest::Approx(corr.q11).epsilon(1e-14));
  CHECK(corr.q22 == doctest::Approx(corr.q11).epsilon(1e-14));

  const long n = 20000;
  const auto x = gaussian_draws(31, n);
  const auto y = gaussian_draws(32, n);
  const auto cov = stats::sample_cov(x, y);
  CHECK(std::fabs(cov.q11 - 1.0) <= 3.0 * cov.se11);
  CHECK(std::fabs(cov.q22 - 1.0) <= 3.0 * cov.se22);
  CHECK(std::fabs(cov.q12) <= 3.0 * cov.se12);
  // jackknife SE of the variance of n gaussians is ~ sqrt(2/n)
  CHECK(cov.se11 == doctest::Approx(std::sqrt(2.0 / n)).epsilon(0.15));
  CHECK_THROWS(stats::sample_cov(std::vector<double>{1.0}, std::vector<double>{2.0}));
}

TEST_CASE("rate fitting") {
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<double> errs;
  for (double e : eps) errs.push_back(3.7 * e);
  auto fit = stats::fit_rate(eps, errs);
  CHECK(std::fabs(fit.slope - 1.0) <= 1e-12);
  CHECK(std::fabs(fit.r_squared - 1.0) <= 1e-12);
  CHECK(std::fabs(std::exp(fit.intercept) - 3.7) <= 1e-12);

  for (std::size_t i = 0; i < errs.size(); ++i) errs[i] = 0.5 * eps[i] * eps[i];
  fit = stats::fit_rate(eps, errs);
  CHECK(std::fabs(fit.slope - 2.0) <= 1e-12);

  // noise-floor exclusion
  const std::vector<double> noisy_err{0.1, 0.05, 0.025, 0.001};
  const std::vector<double> stderrs{0.001, 0.001, 0.001, 0.01};
  fit = stats::fit_rate(eps, noisy_err, stderrs);
  CHECK(fit.excluded == std::vector<std::size_t>{3});
  CHECK(fit.used.size() == 3);

  CHECK_THROWS_AS(stats::fit_rate(std::vector<double>{0.1, 0.05}, std::vector<double>{1, 1}),
                  NumericError);
}

TEST_CASE("gaussian sine moment oracle") {
  CHECK(stats::gaussian_sine_moment_oracle(0.1, 0.0, 3.0, 1.0, 2.0) == 0.0);
  const double limit = stats::gaussian_sine_moment_limit(1.0, 1.0);
  CHECK(limit == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-15));

  // eps -> 0 approach at rate O(eps) with a stable constant (m0 = 0)
  const double e1 = std::fabs(stats::gaussian_sine_moment_oracle(0.01, 1.0, 0.0, 1.0, 2.0) -
                              limit);
  const double e2 = std::fabs(stats::gaussian_sine_moment_oracle(0.005, 1.0, 0.0, 1.0, 2.0) -
                              limit);
  CHECK(std::fabs(e1 / 0.01 - e2 / 0.005) <= 1e-3);
  CHECK(e1 / 0.01 == doctest::Approx(0.1247).epsilon(0.01));

  // amplitude scaling is exactly quadratic
  const double base = stats::gaussian_sine_moment_oracle(0.05, 1.0, 3.0, 1.0, 2.0);
  const double scaled = stats::gaussian_sine_moment_oracle(0.05, 1.0, 3.0, 2.0, 0.0);
  CHECK(scaled == doctest::Approx(4.0 * base).epsilon(1e-12));
}

TEST_CASE("normal cdf and quantile are inverse") {
  for (double p : {1e-6, 0.02, 0.31, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(std::fabs(stats::normal_cdf(stats::normal_quantile(p)) - p) <= 1e-13);
  }
  CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS(stats::normal_quantile(0.0));
  CHECK_THROWS(stats::normal_quantile(1.0));
}

TEST_CASE("ks critical values match the pinned acceptance numbers") {
  CHECK(stats::ks_critical_two_sample(0.001, 100000, 100000) ==
        doctest::Approx(0.0087).epsilon(0.01));
  CHECK(stats::ks_critical_one_sample(0.001, 100000) ==
        doctest::Approx(0.0062).epsilon(0.01));
}
