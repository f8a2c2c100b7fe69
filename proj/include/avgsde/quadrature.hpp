#pragma once

#include <functional>
#include <vector>

namespace avgsde::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for the probabilists' weight e^{-m^2/2}/sqrt(2*pi):
// integrates polynomials up to degree 2n-1 exactly against N(0,1).
// Nodes ascending, weights sum to 1.
Rule gauss_hermite_probabilists(int n);

// Gauss-Legendre rule on [-1,1], nodes ascending, weights sum to 2.
Rule gauss_legendre(int n);

// Composite rule: `panels` equal panels on [a,b], `points_per_panel`
// Gauss-Legendre points each.
Rule composite_gauss_legendre(double a, double b, int panels, int points_per_panel = 8);

// Adaptive Simpson to absolute tolerance. The integrand must be finite on
// [a,b]; depth-limited so a hostile integrand terminates.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 48);

}  // namespace avgsde::quad
