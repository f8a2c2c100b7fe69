#include "avgsde/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "avgsde/errors.hpp"

namespace avgsde::quad {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal
// Jacobi matrix of the orthogonal-polynomial recurrence; the weight of
// node i is mu0 * (first eigenvector component)^2.
Rule golub_welsch(const std::vector<double>& diag, const std::vector<double>& offdiag,
                  double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jacobi(i, i) = diag[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
    jacobi(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw NumericError("quadrature: Jacobi eigensolve failed");

  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

Rule gauss_hermite_probabilists(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_probabilists: n must be >= 1");
  // He_{k+1} = m He_k - k He_{k-1}: Jacobi diagonal 0, off-diagonal sqrt(k).
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  std::vector<double> off(static_cast<std::size_t>(n - 1));
  for (int k = 1; k < n; ++k) off[static_cast<std::size_t>(k - 1)] = std::sqrt(k);
  Rule rule = golub_welsch(diag, off, 1.0);
  double sum = 0.0;
  for (double w : rule.weights) sum += w;
  for (double& w : rule.weights) w /= sum;
  return rule;
}

Rule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  std::vector<double> off(static_cast<std::size_t>(n - 1));
  for (int k = 1; k < n; ++k)
    off[static_cast<std::size_t>(k - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

Rule composite_gauss_legendre(double a, double b, int panels, int points_per_panel) {
  if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: need b > a");
  if (panels < 1 || points_per_panel < 1)
    throw std::invalid_argument("composite_gauss_legendre: bad resolution");
  const Rule base = gauss_legendre(points_per_panel);
  const double h = (b - a) / panels;
  Rule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * base.nodes.size());
  rule.weights.reserve(rule.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      rule.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
      rule.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return rule;
}

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson(fa, fm, fb, a, b);
  const double r = adaptive_step(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
  if (!std::isfinite(r)) throw NumericError("adaptive_simpson: non-finite integral");
  return r;
}

}  // namespace avgsde::quad
