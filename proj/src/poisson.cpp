#include "avgsde/poisson.hpp"

#include <cmath>

#include "avgsde/errors.hpp"

namespace avgsde::poisson {

namespace {

constexpr double kCenteringTol = 1e-9;
constexpr double kTailEnergyTol = 1e-12;

void require_gaussian(const avg::InvariantMeasure& mu, const char* where) {
  if (mu.kind() != avg::InvariantMeasure::Kind::StandardGaussian)
    throw NumericError(std::string(where) +
                       ": Hermite spectral solve supports the OU fast process "
                       "(StandardGaussian measure) only");
}

}  // namespace

double HermiteBasis::unnormalized(int n, double m) {
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = m;
  for (int k = 1; k < n; ++k) {
    const double next = m * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double HermiteBasis::factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

void HermiteBasis::eval_normalized(int degree, double m, std::span<double> out) {
  out[0] = 1.0;
  if (degree == 0) return;
  out[1] = m;
  for (int k = 1; k < degree; ++k)
    out[static_cast<std::size_t>(k) + 1] =
        (m * out[static_cast<std::size_t>(k)] -
         std::sqrt(static_cast<double>(k)) * out[static_cast<std::size_t>(k) - 1]) /
        std::sqrt(static_cast<double>(k + 1));
}

double SpectralSolution::eval(double m) const {
  std::vector<double> basis(static_cast<std::size_t>(degree) + 1);
  HermiteBasis::eval_normalized(degree, m, basis);
  double acc = 0.0;
  for (std::size_t n = 0; n < basis.size(); ++n) acc += coeff[n] * basis[n];
  return acc;
}

double SpectralSolution::raw_coefficient(int n) const {
  return coeff[static_cast<std::size_t>(n)] / std::sqrt(HermiteBasis::factorial(n));
}

std::vector<double> project(const std::function<double(double)>& f, int degree,
                            const avg::InvariantMeasure& mu) {
  require_gaussian(mu, "project");
  if (degree < 0) throw std::invalid_argument("project: negative degree");
  std::vector<double> acc(static_cast<std::size_t>(degree) + 1, 0.0);
  std::vector<double> basis(acc.size());
  const auto nodes = mu.nodes();
  const auto weights = mu.weights();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double fw = weights[i] * f(nodes[i]);
    HermiteBasis::eval_normalized(degree, nodes[i], basis);
    for (std::size_t n = 0; n < acc.size(); ++n) acc[n] += fw * basis[n];
  }
  return acc;
}

SpectralSolution solve_poisson(const std::function<double(double)>& f, int degree,
                               const avg::InvariantMeasure& mu) {
  require_gaussian(mu, "solve_poisson");
  std::vector<double> fhat = project(f, degree, mu);
  if (std::fabs(fhat[0]) > kCenteringTol)
    throw NumericError("solve_poisson: right-hand side not centered, mean = " +
                       std::to_string(fhat[0]));
  SpectralSolution psi;
  psi.degree = degree;
  psi.coeff.assign(fhat.size(), 0.0);
  for (int n = 1; n <= degree; ++n)
    psi.coeff[static_cast<std::size_t>(n)] = fhat[static_cast<std::size_t>(n)] / n;
  for (int n = degree / 2 + 1; n <= degree; ++n)
    psi.tail_energy += fhat[static_cast<std::size_t>(n)] * fhat[static_cast<std::size_t>(n)];
  psi.tail_warning = psi.tail_energy > kTailEnergyTol;
  return psi;
}

double apply_generator(const SpectralSolution& psi, double m) {
  std::vector<double> basis(static_cast<std::size_t>(psi.degree) + 1);
  HermiteBasis::eval_normalized(psi.degree, m, basis);
  double acc = 0.0;
  for (int n = 1; n <= psi.degree; ++n)
    acc -= n * psi.coeff[static_cast<std::size_t>(n)] * basis[static_cast<std::size_t>(n)];
  return acc;
}

double apply_generator_fd(const std::function<double(double)>& f, double m, double step) {
  const double fp = f(m + step);
  const double f0 = f(m);
  const double fm = f(m - step);
  const double second = (fp - 2.0 * f0 + fm) / (step * step);
  const double first = (fp - fm) / (2.0 * step);
  return second - m * first;
}

namespace {

SpectralSolution solve_at_x(const avg::AveragedCoefficients& averaged, double x, int degree,
                            const std::function<double(double)>& rhs, const char* what) {
  require_gaussian(averaged.measure(), what);
  SpectralSolution psi;
  try {
    psi = solve_poisson(rhs, degree, averaged.measure());
  } catch (const NumericError& e) {
    throw NumericError(std::string(what) + ": " + e.what() +
                       " (centering violation signals an averaging inconsistency)");
  }
  psi.x = x;
  return psi;
}

}  // namespace

SpectralSolution build_psi1(const avg::AveragedCoefficients& averaged, double x, int degree) {
  const double bar = averaged.bar_direct(x);
  const auto& sigma = averaged.sigma();
  return solve_at_x(
      averaged, x, degree, [&](double m) { return sigma.eval(x, m) - bar; }, "build_psi1");
}

SpectralSolution build_psi2(const avg::AveragedCoefficients& averaged, double x, int degree) {
  const double bar = averaged.bar_direct(x);
  const double fluct = averaged.fluct_direct(x);
  const double var = fluct * fluct;
  const auto& sigma = averaged.sigma();
  return solve_at_x(
      averaged, x, degree,
      [&](double m) {
        const double d = sigma.eval(x, m) - bar;
        return d * d - var;
      },
      "build_psi2");
}

SpectralSolution build_psi_single(const avg::AveragedCoefficients& averaged, double x,
                                  int degree) {
  const double big = averaged.Sigma_direct(x);
  const double second = big * big;
  const auto& sigma = averaged.sigma();
  return solve_at_x(
      averaged, x, degree,
      [&](double m) {
        const double s = sigma.eval(x, m);
        return s * s - second;
      },
      "build_psi_single");
}

ResidualReport residual_check(const SpectralSolution& psi,
                              const std::function<double(double)>& f,
                              std::span<const double> node_set,
                              const avg::InvariantMeasure& mu) {
  ResidualReport report;
  for (double m : node_set) {
    const double r = std::fabs(-apply_generator(psi, m) - f(m));
    if (r > report.sup_residual) report.sup_residual = r;
  }
  report.centering = std::fabs(mu.integrate([&](double m) { return psi.eval(m); }));
  return report;
}

std::vector<double> default_residual_nodes(const avg::InvariantMeasure& mu, double window) {
  std::vector<double> nodes;
  for (double m : mu.nodes())
    if (std::fabs(m) <= window) nodes.push_back(m);
  return nodes;
}

double quadratic_growth_constant(const SpectralSolution& psi, double lo, double hi, int npts) {
  double worst = 0.0;
  for (int i = 0; i < npts; ++i) {
    const double m = lo + (hi - lo) * i / (npts - 1);
    const double ratio = std::fabs(psi.eval(m)) / (1.0 + m * m);
    if (ratio > worst) worst = ratio;
  }
  return worst;
}

}  // namespace avgsde::poisson
