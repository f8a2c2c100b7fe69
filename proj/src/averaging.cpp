#include "avgsde/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "avgsde/errors.hpp"

namespace avgsde::avg {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

// Variance readings slightly below zero are quadrature noise; anything
// further negative signals an inconsistent table.
constexpr double kVarianceSlack = 1e-14;

double checked_sqrt_variance(double var) {
  if (var < 0.0) {
    if (var < -kVarianceSlack)
      throw NumericError("negative variance from quadrature: " + std::to_string(var));
    var = 0.0;
  }
  return std::sqrt(var);
}

}  // namespace

InvariantMeasure InvariantMeasure::standard_gaussian(int nodes) {
  quad::Rule rule = quad::gauss_hermite_probabilists(nodes);
  InvariantMeasure mu;
  mu.kind_ = Kind::StandardGaussian;
  mu.normalization_ = kSqrt2Pi;
  mu.truncation_ = 0.0;
  mu.nodes_ = std::move(rule.nodes);
  mu.weights_ = std::move(rule.weights);
  return mu;
}

namespace {

InvariantMeasure build_gibbs(const std::function<double(double)>& potential,
                             const MeasureOptions& opts) {
  const double L = opts.truncation;

  quad::Rule rule =
      quad::composite_gauss_legendre(-L, L, opts.gibbs_panels, opts.gibbs_points_per_panel);

  std::vector<double> vvals(rule.nodes.size());
  double vmin = potential(0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    vvals[i] = potential(rule.nodes[i]);
    if (!std::isfinite(vvals[i]))
      throw NumericError("invariant measure: V is not finite at m=" +
                         std::to_string(rule.nodes[i]));
    vmin = std::min(vmin, vvals[i]);
  }

  // Tail gate relative to the density peak: the mass beyond [-L, L] must be
  // negligible for the truncated normalization to make sense. A divergent
  // exp(-V) fails here too.
  for (double edge : {-L, L}) {
    const double ratio = std::exp(-(potential(edge) - vmin));
    if (!(ratio < 1e-14))
      throw NumericError("invariant measure: exp(-V) tail at m=" + std::to_string(edge) +
                         " is " + std::to_string(ratio) +
                         " of the peak; not negligible on [-L,L]");
  }

  std::vector<double> density(rule.nodes.size());
  double scaled_z = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    density[i] = std::exp(-(vvals[i] - vmin));
    scaled_z += rule.weights[i] * density[i];
  }
  if (!std::isfinite(scaled_z) || scaled_z <= 0.0)
    throw NumericError("invariant measure: divergent or degenerate normalization");

  InvariantMeasure mu;
  mu.kind_ = InvariantMeasure::Kind::GibbsFromV;
  mu.normalization_ = scaled_z * std::exp(-vmin);  // Z = integral of exp(-V)
  mu.truncation_ = L;
  mu.nodes_ = std::move(rule.nodes);
  mu.weights_.resize(density.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    mu.weights_[i] = rule.weights[i] * density[i] / scaled_z;
    wsum += mu.weights_[i];
  }
  for (double& w : mu.weights_) w /= wsum;

  // CDF table on a uniform grid; interval masses by a small Gauss-Legendre
  // rule so the table is quadrature-accurate, then normalized monotone.
  const int np = opts.cdf_points;
  const quad::Rule cell = quad::gauss_legendre(8);
  mu.cdf_grid_.resize(static_cast<std::size_t>(np));
  mu.cdf_values_.resize(static_cast<std::size_t>(np));
  const double h = 2.0 * L / (np - 1);
  mu.cdf_grid_[0] = -L;
  mu.cdf_values_[0] = 0.0;
  for (int j = 1; j < np; ++j) {
    const double lo = -L + (j - 1) * h;
    const double mid = lo + 0.5 * h;
    double mass = 0.0;
    for (std::size_t i = 0; i < cell.nodes.size(); ++i)
      mass += 0.5 * h * cell.weights[i] *
              std::exp(-(potential(mid + 0.5 * h * cell.nodes[i]) - vmin));
    mu.cdf_grid_[static_cast<std::size_t>(j)] = -L + j * h;
    mu.cdf_values_[static_cast<std::size_t>(j)] =
        mu.cdf_values_[static_cast<std::size_t>(j - 1)] + mass / scaled_z;
  }
  const double total = mu.cdf_values_.back();
  for (double& v : mu.cdf_values_) v /= total;
  return mu;
}

}  // namespace

InvariantMeasure InvariantMeasure::gibbs_from_potential(const expr::CoefficientFn& potential,
                                                        const MeasureOptions& opts) {
  if (potential.uses_x())
    throw NumericError("invariant measure: potential must depend on m only");
  return build_gibbs([&](double m) { return potential.eval_raw(0.0, m); }, opts);
}

InvariantMeasure InvariantMeasure::gibbs_from_derivative(const expr::CoefficientFn& vprime,
                                                         const MeasureOptions& opts) {
  if (vprime.uses_x())
    throw NumericError("invariant measure: V' must depend on m only");
  const double L = opts.truncation;

  // Antiderivative table: V on a dense uniform grid by cumulative
  // Gauss-Legendre cell integrals of V', then cubic interpolation.
  const int cells = 8192;
  const double h = 2.0 * L / cells;
  const quad::Rule cell = quad::gauss_legendre(8);
  std::vector<double> table(static_cast<std::size_t>(cells) + 1);
  table[0] = 0.0;
  for (int j = 0; j < cells; ++j) {
    const double lo = -L + j * h;
    const double mid = lo + 0.5 * h;
    double inc = 0.0;
    for (std::size_t i = 0; i < cell.nodes.size(); ++i)
      inc += 0.5 * h * cell.weights[i] *
             vprime.eval_raw(0.0, mid + 0.5 * h * cell.nodes[i]);
    table[static_cast<std::size_t>(j) + 1] = table[static_cast<std::size_t>(j)] + inc;
  }

  const auto potential = [table = std::move(table), L, h, cells](double m) {
    double u = (m + L) / h;
    if (u < 0.0) u = 0.0;
    int j = static_cast<int>(u);
    j = std::clamp(j, 1, cells - 2);  // centered 4-point stencil
    const double t = u - j;
    const double fm = table[static_cast<std::size_t>(j) - 1];
    const double f0 = table[static_cast<std::size_t>(j)];
    const double f1 = table[static_cast<std::size_t>(j) + 1];
    const double f2 = table[static_cast<std::size_t>(j) + 2];
    const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return wm * fm + w0 * f0 + w1 * f1 + w2 * f2;
  };
  return build_gibbs(potential, opts);
}

double InvariantMeasure::quantile(double u) const {
  if (cdf_values_.empty())
    throw NumericError("invariant measure: no CDF table (StandardGaussian samples directly)");
  u = std::clamp(u, 0.0, 1.0);
  const auto it = std::lower_bound(cdf_values_.begin(), cdf_values_.end(), u);
  if (it == cdf_values_.begin()) return cdf_grid_.front();
  if (it == cdf_values_.end()) return cdf_grid_.back();
  const std::size_t j = static_cast<std::size_t>(it - cdf_values_.begin());
  const double f0 = cdf_values_[j - 1], f1 = cdf_values_[j];
  const double t = (f1 > f0) ? (u - f0) / (f1 - f0) : 0.0;
  return cdf_grid_[j - 1] + t * (cdf_grid_[j] - cdf_grid_[j - 1]);
}

InvariantMeasure build_measure(InvariantMeasure::Kind kind, const expr::CoefficientFn* potential,
                               const MeasureOptions& opts) {
  if (kind == InvariantMeasure::Kind::StandardGaussian)
    return InvariantMeasure::standard_gaussian(opts.gauss_hermite_nodes);
  if (potential == nullptr)
    throw NumericError("build_measure: GibbsFromV requires a potential");
  return InvariantMeasure::gibbs_from_potential(*potential, opts);
}

double sigma_bar(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x) {
  return mu.integrate([&](double m) { return sigma.eval(x, m); });
}

double sigma_fluct(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x) {
  // Two-pass form: subtracting the mean inside the square avoids the
  // cancellation of Sigma^2 - bar^2 and keeps the identity a real check.
  const double bar = sigma_bar(sigma, mu, x);
  const double var = mu.integrate([&](double m) {
    const double d = sigma.eval(x, m) - bar;
    return d * d;
  });
  return checked_sqrt_variance(var);
}

double sigma_Sigma(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x) {
  const double second = mu.integrate([&](double m) {
    const double s = sigma.eval(x, m);
    return s * s;
  });
  return checked_sqrt_variance(second);
}

double identity_residual(const expr::CoefficientFn& sigma, const InvariantMeasure& mu,
                         std::span<const double> x_grid) {
  double worst = 0.0;
  for (double x : x_grid) {
    const double bar = sigma_bar(sigma, mu, x);
    const double fluct = sigma_fluct(sigma, mu, x);
    const double big = sigma_Sigma(sigma, mu, x);
    worst = std::max(worst, std::fabs(bar * bar + fluct * fluct - big * big));
  }
  return worst;
}

AveragedCoefficients::AveragedCoefficients(expr::CoefficientFn sigma, InvariantMeasure mu,
                                           int table_size) {
  if (table_size < 8) throw std::invalid_argument("AveragedCoefficients: table too small");
  auto tables = std::make_shared<Tables>(Tables{std::move(sigma), std::move(mu), {}, {}, {}});
  tables->bar.resize(static_cast<std::size_t>(table_size));
  tables->fluct.resize(static_cast<std::size_t>(table_size));
  tables->Sigma.resize(static_cast<std::size_t>(table_size));
  for (int j = 0; j < table_size; ++j) {
    const double x = static_cast<double>(j) / table_size;
    tables->bar[static_cast<std::size_t>(j)] = sigma_bar(tables->sigma, tables->mu, x);
    tables->fluct[static_cast<std::size_t>(j)] = sigma_fluct(tables->sigma, tables->mu, x);
    tables->Sigma[static_cast<std::size_t>(j)] = sigma_Sigma(tables->sigma, tables->mu, x);
  }
  tables_ = std::move(tables);
}

double AveragedCoefficients::bar_direct(double x) const {
  return sigma_bar(tables_->sigma, tables_->mu, x);
}

double AveragedCoefficients::fluct_direct(double x) const {
  return sigma_fluct(tables_->sigma, tables_->mu, x);
}

double AveragedCoefficients::Sigma_direct(double x) const {
  return sigma_Sigma(tables_->sigma, tables_->mu, x);
}

// 4-point cubic Lagrange interpolation on the uniform periodic grid.
double AveragedCoefficients::interp(const std::vector<double>& table, double x) const {
  const int n = static_cast<int>(table.size());
  const double u = (x - std::floor(x)) * n;
  int j = static_cast<int>(u);
  if (j >= n) j = n - 1;  // u == n after rounding at x just below an integer
  const double t = u - j;
  const int jm = (j + n - 1) % n;
  const int j1 = (j + 1) % n;
  const int j2 = (j + 2) % n;
  const double fm = table[static_cast<std::size_t>(jm)];
  const double f0 = table[static_cast<std::size_t>(j)];
  const double f1 = table[static_cast<std::size_t>(j1)];
  const double f2 = table[static_cast<std::size_t>(j2)];
  const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return wm * fm + w0 * f0 + w1 * f1 + w2 * f2;
}

}  // namespace avgsde::avg
