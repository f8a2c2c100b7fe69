#pragma once

#include <optional>
#include <string>
#include <vector>

#include "avgsde/expr.hpp"
#include "avgsde/fast_process.hpp"
#include "avgsde/sde.hpp"

namespace avgsde::cfg {

// One experiment as declared in a sectioned key-value file:
//
//   [coefficient]
//   sigma = 2+sin(m)
//   [fast]
//   kind = ou              # or langevin (requires vprime)
//   m0 = 0
//   [sim]
//   epsilon = 0.1          # or epsilon_list = 0.2,0.1,0.05 (strictly decreasing)
//   T = 1
//   x0 = 0
//   n_samples = 100000
//   base_seed = 42
//   [outputs]
//   directory = out
//   formats = csv
struct ExperimentConfig {
  std::string sigma_text;
  expr::CoefficientFn sigma;
  bool sigma_constant_in_m = false;  // Assumption warning, surfaced by the CLI

  fast::Kind fast_kind = fast::Kind::OU;
  std::optional<std::string> vprime_text;
  std::optional<expr::CoefficientFn> vprime;
  double m0 = 0.0;

  std::vector<double> epsilons;  // one or more, strictly decreasing when several
  double T = 1.0;
  double x0 = 0.0;
  double h_max = 1e-2;
  double c = 0.1;
  long n_samples = 1;
  std::uint64_t base_seed = 0;

  std::string out_dir = "out";
  std::vector<std::string> formats = {"csv"};

  // Canonical serialization of the experiment knobs; its FNV-1a hash stamps
  // every artifact.
  std::string canonical() const;
  std::uint64_t hash() const;

  sde::SimConfig sim_config(double epsilon, int threads = 1) const;
  fast::FastProcessSpec fast_spec(double epsilon) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(std::string_view text, const std::string& origin);

}  // namespace avgsde::cfg
