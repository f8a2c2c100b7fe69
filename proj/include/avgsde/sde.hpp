#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avgsde/averaging.hpp"
#include "avgsde/expr.hpp"
#include "avgsde/fast_process.hpp"

namespace avgsde::sde {

// Knobs for one eps-experiment. The macro step is h = min(h_max, c*eps),
// then rounded so the grid lands exactly on T.
struct SimConfig {
  double epsilon = 0.1;
  double T = 1.0;
  double x0 = 0.0;
  double m0 = 0.0;
  double h_max = 1e-2;
  double c = 0.1;
  long n_samples = 1;
  std::uint64_t base_seed = 0;
  int threads = 1;  // 0 = machine parallelism

  void validate() const;
  long n_steps() const;
  double macro_step() const;
};

// Terminal values of all replicas. `second` is empty for scalar systems.
struct EndpointSample {
  SimConfig config;
  std::string scheme;
  std::vector<double> first;   // Y (pairs) or X (scalar)
  std::vector<double> second;  // Z

  bool is_pair() const { return !second.empty(); }
};

// Smooth test function phi(y, z). Reuses the expression machinery with the
// x slot carrying y and the m slot carrying z; arguments are NOT wrapped
// onto the torus (endpoints live on the real line).
class TestFunction {
 public:
  explicit TestFunction(expr::CoefficientFn fn) : fn_(std::move(fn)) {}
  static TestFunction parse(std::string_view text) {
    return TestFunction(expr::CoefficientFn::parse(text));
  }
  double operator()(double y, double z) const { return fn_.eval_raw(y, z); }

 private:
  expr::CoefficientFn fn_;
};

// All simulators are Euler-Maruyama on the macro grid with coefficients at
// the left endpoint. Per replica the noise comes from substreams derived
// from (base_seed, replica_id, role), so runs with equal configs share
// Brownian increments draw for draw: coupled and original runs are coupled
// pathwise by construction. The run's epsilon and m0 come from the config;
// the fast spec contributes the dynamics (kind and V').

// dY = bar(Y+Z) dbeta, dZ = (sigma(Y+Z, m_eps) - bar(Y+Z)) dbeta, one shared
// Brownian increment per step; Y(0) = 0, Z(0) = x0.
EndpointSample simulate_coupled(const SimConfig& config, const expr::CoefficientFn& sigma,
                                const avg::AveragedCoefficients& averaged,
                                const fast::FastProcessSpec& dynamics);

// dX = sigma(X, m_eps) dbeta, X(0) = x0.
EndpointSample simulate_original(const SimConfig& config, const expr::CoefficientFn& sigma,
                                 const fast::FastProcessSpec& dynamics);

// Limit pair: dY = bar(Y+Z) dbeta1, dZ = fluct(Y+Z) dbeta2 with independent
// Brownian motions; epsilon enters only through the step policy.
EndpointSample simulate_limit(const SimConfig& config,
                              const avg::AveragedCoefficients& averaged);

// Averaged equation dXbar = Sigma(Xbar) dbeta, Xbar(0) = x0.
EndpointSample simulate_averaged(const SimConfig& config,
                                 const avg::AveragedCoefficients& averaged);

// Steps the original and coupled systems in lockstep on shared draws and
// returns the max over replicas and grid times of |X - (Y+Z)|.
double pathwise_decomposition_deviation(const SimConfig& config,
                                        const expr::CoefficientFn& sigma,
                                        const avg::AveragedCoefficients& averaged,
                                        const fast::FastProcessSpec& dynamics);

struct WeakEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo mean of phi over replicas with CLT standard error. Scalar
// samples evaluate phi(X, 0).
WeakEstimate weak_functional(const EndpointSample& samples, const TestFunction& phi);

// Endpoint cache: 8-byte magic, u32 version, u64 config hash, u32 columns,
// u64 rows, then row-major little-endian IEEE doubles.
void write_binary_cache(const std::string& path, const EndpointSample& samples,
                        std::uint64_t config_hash);

struct CacheContents {
  std::uint32_t version = 0;
  std::uint64_t config_hash = 0;
  std::vector<double> first;
  std::vector<double> second;
};

CacheContents read_binary_cache(const std::string& path);

}  // namespace avgsde::sde
