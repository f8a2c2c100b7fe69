#include <cmath>
#include <vector>

#include "doctest.h"

#include "avgsde/averaging.hpp"
#include "avgsde/errors.hpp"

using namespace avgsde;
using avg::InvariantMeasure;
using expr::CoefficientFn;

namespace {

std::vector<double> grid64() {
  std::vector<double> g(64);
  for (int i = 0; i < 64; ++i) g[static_cast<std::size_t>(i)] = i / 64.0;
  return g;
}

const double kVarSin = 0.5 * (1.0 - std::exp(-2.0));  // Var sin(N(0,1))

}  // namespace

TEST_CASE("sigma_bar on reference coefficients") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  CHECK(std::fabs(avg::sigma_bar(CoefficientFn::parse("1.5"), mu, 0.3) - 1.5) <= 1e-14);
  CHECK(std::fabs(avg::sigma_bar(CoefficientFn::parse("2+sin(m)"), mu, 0.0) - 2.0) <= 1e-12);
  CHECK(std::fabs(avg::sigma_bar(CoefficientFn::parse("m"), mu, 0.9)) <= 1e-12);
}

TEST_CASE("sigma_fluct on reference coefficients") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  CHECK(avg::sigma_fluct(CoefficientFn::parse("1.5"), mu, 0.1) == 0.0);
  CHECK(std::fabs(avg::sigma_fluct(CoefficientFn::parse("2+sin(m)"), mu, 0.5) -
                  std::sqrt(kVarSin)) <= 1e-12);
  CHECK(std::fabs(avg::sigma_fluct(CoefficientFn::parse("m"), mu, 0.0) - 1.0) <= 1e-12);
}

TEST_CASE("sigma_Sigma on reference coefficients") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  CHECK(std::fabs(avg::sigma_Sigma(CoefficientFn::parse("0-1.5"), mu, 0.2) - 1.5) <= 1e-14);
  CHECK(std::fabs(avg::sigma_Sigma(CoefficientFn::parse("2+sin(m)"), mu, 0.0) -
                  std::sqrt(4.0 + kVarSin)) <= 1e-12);
  CHECK(std::fabs(avg::sigma_Sigma(CoefficientFn::parse("m"), mu, 0.0) - 1.0) <= 1e-12);
  // sanity against the spec's decimal values
  CHECK(std::sqrt(kVarSin) == doctest::Approx(0.65752).epsilon(1e-4));
  CHECK(std::sqrt(4.0 + kVarSin) == doctest::Approx(2.10531).epsilon(1e-4));
}

TEST_CASE("identity bar^2 + fluct^2 = Sigma^2 holds at quadrature accuracy") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  const auto grid = grid64();
  CHECK(avg::identity_residual(CoefficientFn::parse("2+sin(m)"), mu, grid) <= 1e-12);
  CHECK(avg::identity_residual(CoefficientFn::parse("0.5+0.25*sin(2*pi*x)*cos(m)"), mu,
                               grid) <= 1e-10);
  CHECK(avg::identity_residual(CoefficientFn::parse("1+0.5*cos(2*pi*x)+0.3*sin(m)+0.1*m"),
                               mu, grid) <= 1e-10);
}

TEST_CASE("cauchy-schwarz ordering and positive fluctuation") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  const auto sigma = CoefficientFn::parse("0.5+0.25*sin(2*pi*x)*cos(m)");
  for (double x : grid64()) {
    const double bar = avg::sigma_bar(sigma, mu, x);
    const double fluct = avg::sigma_fluct(sigma, mu, x);
    const double big = avg::sigma_Sigma(sigma, mu, x);
    CHECK(fluct >= 0.0);
    CHECK(big * big - bar * bar >= -1e-12);
    // sigma(x,.) is non-constant except where sin(2 pi x) = 0
    if (std::fabs(std::sin(2.0 * 3.14159265358979323846 * x)) > 1e-12) CHECK(fluct > 0.0);
  }
}

TEST_CASE("doubling the node count moves averages by less than 1e-10") {
  const auto mu128 = InvariantMeasure::standard_gaussian(128);
  const auto mu256 = InvariantMeasure::standard_gaussian(256);
  for (const char* text : {"2+sin(m)", "0.5+0.25*sin(2*pi*x)*cos(m)"}) {
    const auto sigma = CoefficientFn::parse(text);
    for (double x : {0.0, 0.21, 0.73}) {
      CHECK(std::fabs(avg::sigma_bar(sigma, mu128, x) - avg::sigma_bar(sigma, mu256, x)) <=
            1e-10);
      CHECK(std::fabs(avg::sigma_fluct(sigma, mu128, x) -
                      avg::sigma_fluct(sigma, mu256, x)) <= 1e-10);
      CHECK(std::fabs(avg::sigma_Sigma(sigma, mu128, x) -
                      avg::sigma_Sigma(sigma, mu256, x)) <= 1e-10);
    }
  }
}

TEST_CASE("memoized tables interpolate the direct quadrature") {
  const auto mu = InvariantMeasure::standard_gaussian(128);
  const avg::AveragedCoefficients averaged(
      CoefficientFn::parse("0.5+0.25*sin(2*pi*x)*cos(m)"), mu);
  // exact at the table knots
  for (int j : {0, 17, 100, 255}) {
    const double x = j / 256.0;
    CHECK(std::fabs(averaged.bar(x) - averaged.bar_direct(x)) <= 1e-14);
  }
  // cubic-accurate between knots, and wrapped on the torus
  for (double x : {0.123, 0.456, 0.999, -0.25, 1.75}) {
    CHECK(std::fabs(averaged.bar(x) - averaged.bar_direct(x)) <= 5e-9);
    CHECK(std::fabs(averaged.fluct(x) - averaged.fluct_direct(x)) <= 5e-9);
    CHECK(std::fabs(averaged.Sigma(x) - averaged.Sigma_direct(x)) <= 5e-9);
  }
  CHECK(averaged.bar(0.3) == averaged.bar(1.3));
  CHECK(averaged.table_size() == 256);
}

TEST_CASE("gibbs-backed averaging matches the gaussian measure") {
  const auto gauss = InvariantMeasure::standard_gaussian(128);
  const auto gibbs = InvariantMeasure::gibbs_from_potential(CoefficientFn::parse("m*m/2"));
  const auto sigma = CoefficientFn::parse("2+sin(m)");
  CHECK(std::fabs(avg::sigma_bar(sigma, gauss, 0.0) - avg::sigma_bar(sigma, gibbs, 0.0)) <=
        1e-12);
  CHECK(std::fabs(avg::sigma_fluct(sigma, gauss, 0.0) -
                  avg::sigma_fluct(sigma, gibbs, 0.0)) <= 1e-12);
}
