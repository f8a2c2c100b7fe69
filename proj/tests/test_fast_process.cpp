#include <cmath>
#include <vector>

#include "doctest.h"

#include "avgsde/errors.hpp"
#include "avgsde/fast_process.hpp"
#include "avgsde/stats.hpp"

using namespace avgsde;
using expr::CoefficientFn;

namespace {

fast::FastProcessSpec ou_spec(double eps, double m0 = 0.0) {
  fast::FastProcessSpec spec;
  spec.kind = fast::Kind::OU;
  spec.epsilon = eps;
  spec.m0 = m0;
  return spec;
}

}  // namespace

TEST_CASE("ou exact step edge cases") {
  CHECK(fast::ou_exact_step(1.7, 0.0, 0.1, 0.42) == 1.7);
  // deep in the relaxation limit the output is the stationary draw
  CHECK(fast::ou_exact_step(123.0, 1000.0, 0.1, 0.42) == doctest::Approx(0.42).epsilon(1e-15));
  CHECK_THROWS_AS(fast::ou_exact_step(0.0, -1.0, 0.1, 0.0), NumericError);
}

// Oracle: a hand-rolled fine-step Euler-Maruyama chain for
// dm = -m dt + sqrt(2) dW in fast time, independent of the library code.
TEST_CASE("ou exact transition validated against a fine EM oracle") {
  const double m_start = 2.0, horizon = 1.0;  // one fast-time unit
  const double dt = 1e-3;
  const int nsub = static_cast<int>(horizon / dt);
  const long n = 60000;
  const double noise = std::sqrt(2.0 * dt);

  double sum = 0.0, sumsq = 0.0;
  RngStream rng(0x00D15EA5EULL);
  for (long r = 0; r < n; ++r) {
    double m = m_start;
    for (int k = 0; k < nsub; ++k) m += -m * dt + noise * rng.gaussian();
    sum += m;
    sumsq += m * m;
  }
  const double mean = sum / n;
  const double var = (sumsq - n * mean * mean) / (n - 1);

  const double exact_mean = m_start * std::exp(-1.0);          // 0.7358
  const double exact_var = 1.0 - std::exp(-2.0);               // 0.8647
  const double se_mean = std::sqrt(exact_var / n);
  const double se_var = exact_var * std::sqrt(2.0 / n);
  // EM bias at dt = 1e-3 is ~2e-4, well inside the Monte Carlo band
  CHECK(std::fabs(mean - exact_mean) <= 3.0 * se_mean + 5e-4);
  CHECK(std::fabs(var - exact_var) <= 3.0 * se_var + 1e-3);

  // and the library's one-shot exact transition reproduces the same law
  RngStream rng2(0xBEEF01ULL);
  double sum2 = 0.0, sumsq2 = 0.0;
  for (long r = 0; r < n; ++r) {
    const double m = fast::ou_exact_step(m_start, 1.0, 1.0, rng2.gaussian());
    sum2 += m;
    sumsq2 += m * m;
  }
  const double mean2 = sum2 / n;
  const double var2 = (sumsq2 - n * mean2 * mean2) / (n - 1);
  CHECK(std::fabs(mean2 - exact_mean) <= 3.0 * se_mean);
  CHECK(std::fabs(var2 - exact_var) <= 3.0 * se_var);
}

TEST_CASE("langevin em step definition and ceiling") {
  const auto vprime = CoefficientFn::parse("m");
  const double m = 0.8, dt = 1e-4, eps = 0.1, g = -0.6;
  const double expected = m - (dt / eps) * m + std::sqrt(2.0 * dt / eps) * g;
  CHECK(fast::langevin_em_step(m, dt, eps, vprime, g) == expected);
  CHECK(fast::langevin_em_step(0.8, 1e-4, 0.1, CoefficientFn::parse("0"), 0.0) == 0.8);
  CHECK_THROWS_AS(fast::langevin_em_step(0.0, 0.1, 0.1, vprime, 0.0), NumericError);
  CHECK(fast::fast_substeps(0.1, 0.1) == 100);
  CHECK(fast::fast_substeps(1e-4, 0.1) == 1);
}

TEST_CASE("langevin long-run second moment matches the OU stationary law") {
  const auto vprime = CoefficientFn::parse("m");
  const long nsteps = 1000000;
  const double dt_slow = 1e-4, eps = 0.1;  // fast-time step 1e-3

  RngStream em_rng(0x7777123ULL);
  RngStream ou_rng(0x7777123ULL);
  const int batches = 100;
  const long per_batch = nsteps / batches;
  std::vector<double> em_batch(batches, 0.0), ou_batch(batches, 0.0);
  double m_em = 0.0, m_ou = 0.0;
  for (int b = 0; b < batches; ++b) {
    for (long k = 0; k < per_batch; ++k) {
      m_em = fast::langevin_em_step(m_em, dt_slow, eps, vprime, em_rng.gaussian());
      m_ou = fast::ou_exact_step(m_ou, dt_slow, eps, ou_rng.gaussian());
      em_batch[static_cast<std::size_t>(b)] += m_em * m_em;
      ou_batch[static_cast<std::size_t>(b)] += m_ou * m_ou;
    }
    em_batch[static_cast<std::size_t>(b)] /= static_cast<double>(per_batch);
    ou_batch[static_cast<std::size_t>(b)] /= static_cast<double>(per_batch);
  }
  const auto batch_stats = [&](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>{mean, std::sqrt(var / static_cast<double>(xs.size()))};
  };
  const auto [em_mean, em_se] = batch_stats(em_batch);
  const auto [ou_mean, ou_se] = batch_stats(ou_batch);
  CHECK(std::fabs(em_mean - 1.0) <= 3.0 * em_se + 1e-3);  // 1e-3 EM bias allowance
  CHECK(std::fabs(ou_mean - 1.0) <= 3.0 * ou_se);
}

TEST_CASE("invariant sampling") {
  const auto gauss = avg::InvariantMeasure::standard_gaussian(128);

  SUBCASE("OU samples are standard normal") {
    RngStream rng(0x1234FEDULL);
    const long n = 1000000;
    double sum = 0.0;
    const auto spec = ou_spec(0.1);
    for (long i = 0; i < n; ++i) sum += fast::sample_invariant(spec, gauss, rng);
    CHECK(std::fabs(sum / n) <= 3e-3);
  }

  SUBCASE("general V = m^2/2 sampler agrees with the OU sampler") {
    const auto gibbs =
        avg::InvariantMeasure::gibbs_from_derivative(CoefficientFn::parse("m"));
    fast::FastProcessSpec spec;
    spec.kind = fast::Kind::GeneralLangevin;
    spec.vprime = CoefficientFn::parse("m");
    spec.epsilon = 0.1;
    const long n = 100000;
    std::vector<double> a(n), b(n);
    RngStream rng_a(0xAAAA01ULL), rng_b(0xBBBB02ULL);
    const auto ou = ou_spec(0.1);
    for (long i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = fast::sample_invariant(ou, gauss, rng_a);
      b[static_cast<std::size_t>(i)] = fast::sample_invariant(spec, gibbs, rng_b);
    }
    const double d = stats::ks_two_sample(stats::EmpiricalSample(std::move(a)),
                                          stats::EmpiricalSample(std::move(b)));
    CHECK(d <= 0.01);
  }

  SUBCASE("quartic potential second moment matches quadrature") {
    const auto gibbs =
        avg::InvariantMeasure::gibbs_from_derivative(CoefficientFn::parse("m*m*m"));
    // oracle: direct quadrature of the exact potential
    const auto oracle =
        avg::InvariantMeasure::gibbs_from_potential(CoefficientFn::parse("m*m*m*m/4"));
    const double m2 = oracle.integrate([](double m) { return m * m; });
    const double m4 = oracle.integrate([](double m) { return m * m * m * m; });

    fast::FastProcessSpec spec;
    spec.kind = fast::Kind::GeneralLangevin;
    spec.vprime = CoefficientFn::parse("m*m*m");
    spec.epsilon = 0.1;
    RngStream rng(0xCCCC03ULL);
    const long n = 200000;
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
      const double m = fast::sample_invariant(spec, gibbs, rng);
      sum += m * m;
    }
    const double se = std::sqrt((m4 - m2 * m2) / n);
    CHECK(std::fabs(sum / n - m2) <= 3.0 * se + 1e-4);
  }
}

TEST_CASE("simulate_fast_grid") {
  SUBCASE("zero horizon gives the single-point path") {
    RngStream rng(1);
    const auto path = fast::simulate_fast_grid(ou_spec(0.1, 0.7), 0.0, 0.01, rng);
    CHECK(path.values == std::vector<double>{0.7});
  }

  SUBCASE("grid rounding lands on T") {
    RngStream rng(2);
    const auto path = fast::simulate_fast_grid(ou_spec(0.1), 1.0, 0.3, rng);
    CHECK(path.values.size() == 5);  // 4 steps of 0.25
    CHECK(path.step == doctest::Approx(0.25).epsilon(1e-15));
  }

  SUBCASE("OU marginals have the exact variance profile") {
    const double eps = 0.1, dt = 0.01, T = 0.5;
    const long n = 20000;
    const long nsteps = 50;
    std::vector<double> sumsq(static_cast<std::size_t>(nsteps) + 1, 0.0);
    for (long r = 0; r < n; ++r) {
      RngStream rng(derive_stream_seed(9090, static_cast<std::uint64_t>(r),
                                       StreamRole::FastNoise));
      const auto path = fast::simulate_fast_grid(ou_spec(eps), T, dt, rng);
      for (std::size_t k = 0; k < path.values.size(); ++k)
        sumsq[k] += path.values[k] * path.values[k];
    }
    for (long k : {5L, 20L, 50L}) {
      const double t = static_cast<double>(k) * dt;
      const double expected = 1.0 - std::exp(-2.0 * t / eps);
      const double got = sumsq[static_cast<std::size_t>(k)] / n;
      const double se = expected * std::sqrt(2.0 / n);
      CHECK(std::fabs(got - expected) <= 3.0 * se);
    }
  }

  SUBCASE("second moments stay bounded by 1 + m0^2") {
    const double m0 = 2.0;
    const long n = 20000;
    std::vector<double> sumsq(51, 0.0);
    for (long r = 0; r < n; ++r) {
      RngStream rng(derive_stream_seed(17, static_cast<std::uint64_t>(r),
                                       StreamRole::FastNoise));
      const auto path = fast::simulate_fast_grid(ou_spec(0.05, m0), 0.5, 0.01, rng);
      for (std::size_t k = 0; k < path.values.size(); ++k)
        sumsq[k] += path.values[k] * path.values[k];
    }
    for (double s : sumsq) CHECK(s / n <= 1.0 + m0 * m0 + 0.05);
  }

  SUBCASE("deterministic under a fixed seed") {
    RngStream rng_a(42), rng_b(42);
    const auto a = fast::simulate_fast_grid(ou_spec(0.1, 0.3), 1.0, 0.01, rng_a);
    const auto b = fast::simulate_fast_grid(ou_spec(0.1, 0.3), 1.0, 0.01, rng_b);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("stationary chain covariance is exponential in the lag") {
  const double eps = 0.05, dt = 0.01;
  const long n = 50000;
  const long nsteps = 20;
  const auto gauss = avg::InvariantMeasure::standard_gaussian(32);
  const auto spec = ou_spec(eps);

  std::vector<std::vector<double>> values(static_cast<std::size_t>(nsteps) + 1,
                                          std::vector<double>(n));
  for (long r = 0; r < n; ++r) {
    RngStream rng(derive_stream_seed(5150, static_cast<std::uint64_t>(r),
                                     StreamRole::FastNoise));
    auto stationary = spec;
    stationary.m0 = fast::sample_invariant(spec, gauss, rng);
    const auto path = fast::simulate_fast_grid(stationary, dt * nsteps, dt, rng);
    for (std::size_t k = 0; k < path.values.size(); ++k)
      values[k][static_cast<std::size_t>(r)] = path.values[k];
  }
  for (auto [i, j] : {std::pair<long, long>{0, 5}, {5, 10}, {0, 20}}) {
    const auto cov = stats::sample_cov(values[static_cast<std::size_t>(i)],
                                       values[static_cast<std::size_t>(j)]);
    const double expected = std::exp(-std::fabs(i - j) * dt / eps);
    CHECK(std::fabs(cov.q12 - expected) <= 3.0 * cov.se12);
  }
}

TEST_CASE("spec validation") {
  auto spec = ou_spec(0.1);
  spec.epsilon = 1.5;
  CHECK_THROWS_AS(spec.validate(), NumericError);
  spec.epsilon = 0.1;
  spec.kind = fast::Kind::GeneralLangevin;
  CHECK_THROWS_AS(spec.validate(), NumericError);  // missing vprime
  spec.vprime = CoefficientFn::parse("x+m");
  CHECK_THROWS_AS(spec.validate(), NumericError);  // x-dependence
  spec.vprime = CoefficientFn::parse("m");
  CHECK_NOTHROW(spec.validate());
}
