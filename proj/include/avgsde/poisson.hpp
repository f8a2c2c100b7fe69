#pragma once

#include <functional>
#include <span>
#include <vector>

#include "avgsde/averaging.hpp"

namespace avgsde::poisson {

// Probabilists' Hermite polynomials He_n: orthogonal under N(0,1) with
// norms n!, eigenfunctions of the OU generator L f = f'' - m f' with
// eigenvalues -n. Computations run in the normalized basis
// Hb_n = He_n / sqrt(n!) to keep magnitudes representable at degree 40.
struct HermiteBasis {
  static double unnormalized(int n, double m);  // He_n(m), three-term recurrence
  static double factorial(int n);
  // fills out[0..degree] with Hb_n(m)
  static void eval_normalized(int degree, double m, std::span<double> out);
};

// Truncated solution of -L psi = f at a fixed slow coordinate x.
struct SpectralSolution {
  int degree = 0;
  double x = 0.0;
  std::vector<double> coeff;  // normalized-basis coefficients, coeff[0] == 0
  double tail_energy = 0.0;   // sum_{n > degree/2} fhat_n^2 of the projected rhs
  bool tail_warning = false;

  double eval(double m) const;
  // coefficient w.r.t. the unnormalized He_n (tests, small n)
  double raw_coefficient(int n) const;
};

// Projection fhat_n = (integral of f * Hb_n dmu), i.e. f_n sqrt(n!) in
// unnormalized terms. Requires the StandardGaussian measure.
std::vector<double> project(const std::function<double(double)>& f, int degree,
                            const avg::InvariantMeasure& mu);

// Eigenvalue inversion psi_n = f_n / n, psi_0 = 0. The right-hand side must
// be centered: |f_0| <= 1e-9, else the equation has no solution and the
// offending mean is reported.
SpectralSolution solve_poisson(const std::function<double(double)>& f, int degree,
                               const avg::InvariantMeasure& mu);

// L psi, termwise exact for spectral solutions.
double apply_generator(const SpectralSolution& psi, double m);

// L f = f'' - m f' by central finite differences for plain callables.
double apply_generator_fd(const std::function<double(double)>& f, double m,
                          double step = 1e-4);

// The paper's two Poisson equations at fixed x:
//   -L psi1 = sigma(x,.) - bar(x)
//   -L psi2 = (sigma(x,.) - bar(x))^2 - fluct(x)^2
// Right-hand sides are centered by construction (same quadrature defines
// the means); a violation signals an averaging inconsistency.
SpectralSolution build_psi1(const avg::AveragedCoefficients& averaged, double x, int degree);
SpectralSolution build_psi2(const avg::AveragedCoefficients& averaged, double x, int degree);

// Single-equation variant -L psi = sigma(x,.)^2 - Sigma(x)^2 (the standard
// proof's device), provided as a cross-check of the same machinery.
SpectralSolution build_psi_single(const avg::AveragedCoefficients& averaged, double x,
                                  int degree);

struct ResidualReport {
  double sup_residual = 0.0;  // max over nodes of |-L psi - f|
  double centering = 0.0;     // |integral of psi dmu|
};

ResidualReport residual_check(const SpectralSolution& psi,
                              const std::function<double(double)>& f,
                              std::span<const double> node_set,
                              const avg::InvariantMeasure& mu);

// Default probe set: quadrature nodes inside |m| <= window. Hermite
// truncations of entire functions converge pointwise on compact windows
// only; the extreme tail nodes of a 128-point rule sit far outside that
// region.
std::vector<double> default_residual_nodes(const avg::InvariantMeasure& mu,
                                           double window = 7.0);

// Smallest C with |psi(m)| <= C (1 + m^2) on a uniform grid over [lo, hi].
double quadratic_growth_constant(const SpectralSolution& psi, double lo = -8.0,
                                 double hi = 8.0, int npts = 321);

}  // namespace avgsde::poisson
