#pragma once

#include <optional>
#include <string>
#include <vector>

#include "avgsde/averaging.hpp"
#include "avgsde/expr.hpp"
#include "avgsde/rng.hpp"

namespace avgsde::fast {

enum class Kind { OU, GeneralLangevin };

// Fast ergodic process m_eps(t) = m(t/eps). The OU case is pinned to unit
// relaxation and noise sqrt(2) (stationary law N(0,1)); general Langevin
// dynamics dm = -V'(m) dt + sqrt(2) dW are handled by Euler-Maruyama
// micro-stepping.
struct FastProcessSpec {
  Kind kind = Kind::OU;
  std::optional<expr::CoefficientFn> vprime;  // GeneralLangevin only, m only
  double m0 = 0.0;
  double epsilon = 0.1;  // in (0,1)

  void validate() const;
};

struct FastPath {
  double step = 0.0;  // slow-time grid step
  double epsilon = 0.0;
  std::string scheme;
  std::vector<double> values;
};

// Stability ceiling for one Euler-Maruyama micro step in fast time.
constexpr double kFastStepCeiling = 1e-2;

// Exact OU transition over a slow-time interval:
//   m' = e^{-dt/eps} m + sqrt(1 - e^{-2 dt/eps}) xi,   xi ~ N(0,1).
double ou_exact_step(double m, double dt_slow, double eps, double gaussian_draw);

// One raw EM step m - (dt/eps) V'(m) + sqrt(2 dt/eps) xi. Rejects steps
// beyond the stability ceiling; grid-level drivers sub-step instead.
double langevin_em_step(double m, double dt_slow, double eps,
                        const expr::CoefficientFn& vprime, double gaussian_draw);

// Number of EM micro steps needed to keep each fast-time step at or below
// the ceiling.
int fast_substeps(double dt_slow, double eps);

// Grid stepper with per-grid constants precomputed (the OU decay factor,
// the EM sub-step layout). One advance() consumes a deterministic number
// of draws from the stream.
class FastStepper {
 public:
  FastStepper(const FastProcessSpec& spec, double dt_slow);

  double advance(double m, RngStream& noise) const {
    if (kind_ == Kind::OU) return decay_ * m + diffuse_ * noise.gaussian();
    for (int i = 0; i < n_sub_; ++i)
      m += -dt_sub_ * vprime_->eval_raw(0.0, m) + noise_amp_ * noise.gaussian();
    return m;
  }

 private:
  Kind kind_;
  double decay_ = 1.0, diffuse_ = 0.0;        // OU
  const expr::CoefficientFn* vprime_ = nullptr;  // borrowed from the spec
  int n_sub_ = 1;
  double dt_sub_ = 0.0, noise_amp_ = 0.0;     // Langevin
};

// One draw from the invariant measure: a standard normal for OU, inverse
// CDF through the measure's table otherwise.
double sample_invariant(const FastProcessSpec& spec, const avg::InvariantMeasure& mu,
                        RngStream& rng);

// Path of m_eps on the uniform grid over [0, T]; the requested step is
// rounded so the grid lands on T exactly. T = 0 yields the single point m0.
FastPath simulate_fast_grid(const FastProcessSpec& spec, double T, double dt_slow,
                            RngStream& noise);

}  // namespace avgsde::fast
