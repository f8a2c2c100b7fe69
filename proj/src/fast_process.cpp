#include "avgsde/fast_process.hpp"

#include <cmath>

#include "avgsde/errors.hpp"

namespace avgsde::fast {

void FastProcessSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw NumericError("fast process: epsilon must lie in (0,1), got " +
                       std::to_string(epsilon));
  if (!std::isfinite(m0)) throw NumericError("fast process: m0 must be finite");
  if (kind == Kind::GeneralLangevin) {
    if (!vprime) throw NumericError("fast process: GeneralLangevin requires V'");
    if (vprime->uses_x())
      throw NumericError("fast process: V' must depend on m only");
  }
}

double ou_exact_step(double m, double dt_slow, double eps, double gaussian_draw) {
  if (dt_slow < 0.0) throw NumericError("ou_exact_step: negative step");
  const double decay = std::exp(-dt_slow / eps);
  return decay * m + std::sqrt(1.0 - decay * decay) * gaussian_draw;
}

double langevin_em_step(double m, double dt_slow, double eps,
                        const expr::CoefficientFn& vprime, double gaussian_draw) {
  const double dt_fast = dt_slow / eps;
  if (dt_fast > kFastStepCeiling)
    throw NumericError("langevin_em_step: fast-time step " + std::to_string(dt_fast) +
                       " exceeds stability ceiling " + std::to_string(kFastStepCeiling));
  return m - dt_fast * vprime.eval_raw(0.0, m) + std::sqrt(2.0 * dt_fast) * gaussian_draw;
}

int fast_substeps(double dt_slow, double eps) {
  const double dt_fast = dt_slow / eps;
  if (dt_fast <= kFastStepCeiling) return 1;
  return static_cast<int>(std::ceil(dt_fast / kFastStepCeiling));
}

FastStepper::FastStepper(const FastProcessSpec& spec, double dt_slow) : kind_(spec.kind) {
  spec.validate();
  if (dt_slow < 0.0) throw NumericError("FastStepper: negative step");
  if (kind_ == Kind::OU) {
    decay_ = std::exp(-dt_slow / spec.epsilon);
    diffuse_ = std::sqrt(1.0 - decay_ * decay_);
  } else {
    vprime_ = &*spec.vprime;
    n_sub_ = fast_substeps(dt_slow, spec.epsilon);
    dt_sub_ = dt_slow / spec.epsilon / n_sub_;
    noise_amp_ = std::sqrt(2.0 * dt_sub_);
  }
}

double sample_invariant(const FastProcessSpec& spec, const avg::InvariantMeasure& mu,
                        RngStream& rng) {
  if (spec.kind == Kind::OU) return rng.gaussian();
  if (mu.kind() != avg::InvariantMeasure::Kind::GibbsFromV)
    throw NumericError("sample_invariant: GeneralLangevin needs a GibbsFromV measure");
  return mu.quantile(rng.uniform());
}

FastPath simulate_fast_grid(const FastProcessSpec& spec, double T, double dt_slow,
                            RngStream& noise) {
  spec.validate();
  if (T < 0.0) throw NumericError("simulate_fast_grid: negative horizon");
  FastPath path;
  path.epsilon = spec.epsilon;
  path.scheme = spec.kind == Kind::OU ? "ou-exact" : "langevin-em";
  if (T == 0.0) {
    path.step = 0.0;
    path.values = {spec.m0};
    return path;
  }
  if (!(dt_slow > 0.0)) throw NumericError("simulate_fast_grid: step must be positive");
  const long nsteps = static_cast<long>(std::ceil(T / dt_slow - 1e-12));
  const double step = T / static_cast<double>(nsteps);
  path.step = step;
  path.values.resize(static_cast<std::size_t>(nsteps) + 1);
  path.values[0] = spec.m0;
  const FastStepper stepper(spec, step);
  double m = spec.m0;
  for (long k = 1; k <= nsteps; ++k) {
    m = stepper.advance(m, noise);
    if (!std::isfinite(m))
      throw NumericError("simulate_fast_grid: non-finite state at step " + std::to_string(k));
    path.values[static_cast<std::size_t>(k)] = m;
  }
  return path;
}

}  // namespace avgsde::fast
