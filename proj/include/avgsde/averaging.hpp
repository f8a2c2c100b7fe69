#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "avgsde/expr.hpp"
#include "avgsde/quadrature.hpp"

namespace avgsde::avg {

struct MeasureOptions {
  int gauss_hermite_nodes = 128;  // StandardGaussian
  int gibbs_panels = 256;         // GibbsFromV: panels x points_per_panel nodes
  int gibbs_points_per_panel = 8;
  double truncation = 12.0;       // [-L, L] for GibbsFromV
  int cdf_points = 2048;          // inverse-CDF sampling table
};

// Invariant probability measure of the fast process: N(0,1) backed by a
// Gauss-Hermite table, or Z^{-1} exp(-V(m)) dm on a truncated domain backed
// by a composite quadrature table plus a monotone CDF table for sampling.
class InvariantMeasure {
 public:
  enum class Kind { StandardGaussian, GibbsFromV };

  static InvariantMeasure standard_gaussian(int nodes = 128);
  static InvariantMeasure gibbs_from_potential(const expr::CoefficientFn& potential,
                                               const MeasureOptions& opts = {});

  // Configurations provide V' (the drift), not V. The potential is
  // recovered by cumulative quadrature of V' on a dense grid; the additive
  // constant is absorbed by the normalization.
  static InvariantMeasure gibbs_from_derivative(const expr::CoefficientFn& vprime,
                                                const MeasureOptions& opts = {});

  Kind kind() const { return kind_; }
  double normalization() const { return normalization_; }   // Z
  double truncation() const { return truncation_; }         // 0 for StandardGaussian
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
    return acc;
  }

  // Quantile function by monotone linear interpolation of the CDF table
  // (GibbsFromV only).
  double quantile(double u) const;

 private:
  InvariantMeasure() = default;

  Kind kind_ = Kind::StandardGaussian;
  double normalization_ = 1.0;
  double truncation_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> cdf_grid_;
  std::vector<double> cdf_values_;
};

InvariantMeasure build_measure(InvariantMeasure::Kind kind,
                               const expr::CoefficientFn* potential = nullptr,
                               const MeasureOptions& opts = {});

// Direct quadrature evaluators (verification path).
double sigma_bar(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x);
double sigma_fluct(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x);
double sigma_Sigma(const expr::CoefficientFn& sigma, const InvariantMeasure& mu, double x);

// max over the grid of |bar^2 + fluct^2 - Sigma^2|, direct quadrature.
double identity_residual(const expr::CoefficientFn& sigma, const InvariantMeasure& mu,
                         std::span<const double> x_grid);

// Quadrature-backed bar/fluct/Sigma with eagerly built periodic tables
// (256 x-points, cubic interpolation) for the time-stepping inner loop.
// Immutable after construction; safe to share across replica workers.
class AveragedCoefficients {
 public:
  AveragedCoefficients(expr::CoefficientFn sigma, InvariantMeasure mu, int table_size = 256);

  // interpolated (simulation path); argument on the real line, wrapped mod 1
  double bar(double x) const { return interp(tables_->bar, x); }
  double fluct(double x) const { return interp(tables_->fluct, x); }
  double Sigma(double x) const { return interp(tables_->Sigma, x); }

  // direct quadrature (verification path)
  double bar_direct(double x) const;
  double fluct_direct(double x) const;
  double Sigma_direct(double x) const;

  const expr::CoefficientFn& sigma() const { return tables_->sigma; }
  const InvariantMeasure& measure() const { return tables_->mu; }
  int table_size() const { return static_cast<int>(tables_->bar.size()); }

 private:
  struct Tables {
    expr::CoefficientFn sigma;
    InvariantMeasure mu;
    std::vector<double> bar, fluct, Sigma;
  };

  double interp(const std::vector<double>& table, double x) const;

  std::shared_ptr<const Tables> tables_;
};

}  // namespace avgsde::avg
