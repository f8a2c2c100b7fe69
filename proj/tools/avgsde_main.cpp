// avgsde: simulate the average/fluctuation decomposition of a slow-fast SDE,
// its limit system and the averaged equation, and verify the distributional
// limits against analytic and quadrature references.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "avgsde/acceptance.hpp"
#include "avgsde/averaging.hpp"
#include "avgsde/config.hpp"
#include "avgsde/errors.hpp"
#include "avgsde/io.hpp"
#include "avgsde/parallel.hpp"
#include "avgsde/poisson.hpp"
#include "avgsde/sde.hpp"
#include "avgsde/stats.hpp"

namespace {

using namespace avgsde;

struct CommonFlags {
  std::string config_path;
  std::optional<double> epsilon;
  std::optional<long> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  int threads = 0;
  bool echo = false;

  void attach(CLI::App* cmd, bool config_required = true) {
    auto* opt = cmd->add_option("--config,-c", config_path, "experiment configuration file");
    if (config_required) opt->required();
    cmd->add_option("--epsilon", epsilon, "override epsilon (single value)");
    cmd->add_option("--samples", samples, "override n_samples");
    cmd->add_option("--seed", seed, "override base_seed");
    cmd->add_option("--out", out_dir, "override output directory");
    cmd->add_option("--format", format, "override output format (csv or json)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
    cmd->add_flag("--echo", echo, "also print artifacts to stdout");
  }

  cfg::ExperimentConfig load() const {
    cfg::ExperimentConfig config = cfg::load_config(config_path);
    if (epsilon) {
      if (!(*epsilon > 0.0 && *epsilon < 1.0))
        throw ConfigError("--epsilon must lie in (0,1)");
      config.epsilons = {*epsilon};
    }
    if (samples) {
      if (*samples < 1) throw ConfigError("--samples must be >= 1");
      config.n_samples = *samples;
    }
    if (seed) config.base_seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    if (format) config.formats = {*format};
    if (config.sigma_constant_in_m)
      std::cerr << "warning: sigma does not depend on m; the fluctuation term vanishes "
                   "and the averaging decomposition is degenerate\n";
    return config;
  }
};

std::string eps_tag(double eps) {
  std::string tag = io::format_double(eps);
  for (char& c : tag)
    if (c == '.' || c == '+' || c == '-') c = '_';
  return tag;
}

void emit(const cfg::ExperimentConfig& config, const CommonFlags& flags,
          const std::string& stem, const io::Table& table) {
  const std::string prov = io::provenance(config.hash(), config.base_seed);
  io::ensure_directory(config.out_dir);
  for (const auto& fmt : config.formats) {
    const std::string path = config.out_dir + "/" + stem + "." + fmt;
    const std::string content = fmt == "csv" ? table.to_csv(prov) : table.to_json(prov);
    io::write_file(path, content);
    std::cerr << "wrote " << path << " (" << table.rows() << " rows)\n";
    if (flags.echo) std::cout << content;
  }
}

avg::InvariantMeasure measure_for(const cfg::ExperimentConfig& config) {
  if (config.fast_kind == fast::Kind::OU)
    return avg::InvariantMeasure::standard_gaussian(128);
  return avg::InvariantMeasure::gibbs_from_derivative(*config.vprime);
}

int cmd_avg_table(const CommonFlags& flags, int grid) {
  const auto config = flags.load();
  const auto mu = measure_for(config);
  io::Table table({"x", "sigma_bar", "sigma_fluct", "sigma_Sigma", "identity_residual"});
  for (int i = 0; i < grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    const double bar = avg::sigma_bar(config.sigma, mu, x);
    const double fluct = avg::sigma_fluct(config.sigma, mu, x);
    const double big = avg::sigma_Sigma(config.sigma, mu, x);
    table.add_row(std::vector<double>{
        x, bar, fluct, big, std::fabs(bar * bar + fluct * fluct - big * big)});
  }
  emit(config, flags, "avg_table", table);
  return 0;
}

int cmd_simulate(const CommonFlags& flags, const std::string& system,
                 const std::string& cache_path) {
  const auto config = flags.load();
  const auto mu = measure_for(config);
  const avg::AveragedCoefficients averaged(config.sigma, mu);
  for (double eps : config.epsilons) {
    const auto sim = config.sim_config(eps, flags.threads);
    sde::EndpointSample sample;
    if (system == "coupled")
      sample = sde::simulate_coupled(sim, config.sigma, averaged, config.fast_spec(eps));
    else if (system == "original")
      sample = sde::simulate_original(sim, config.sigma, config.fast_spec(eps));
    else
      sample = sde::simulate_averaged(sim, averaged);

    io::Table table(sample.is_pair() ? std::vector<std::string>{"replica_id", "Y", "Z"}
                                     : std::vector<std::string>{"replica_id", "X"});
    for (std::size_t i = 0; i < sample.first.size(); ++i) {
      if (sample.is_pair())
        table.add_row(
            std::vector<double>{static_cast<double>(i), sample.first[i], sample.second[i]});
      else
        table.add_row(std::vector<double>{static_cast<double>(i), sample.first[i]});
    }
    emit(config, flags, "endpoints_" + system + "_eps" + eps_tag(eps), table);
    if (!cache_path.empty()) {
      sde::write_binary_cache(cache_path, sample, config.hash());
      std::cerr << "wrote " << cache_path << "\n";
    }
  }
  return 0;
}

int cmd_limit(const CommonFlags& flags) {
  const auto config = flags.load();
  const auto mu = measure_for(config);
  const avg::AveragedCoefficients averaged(config.sigma, mu);
  const auto sim = config.sim_config(config.epsilons.front(), flags.threads);
  const auto sample = sde::simulate_limit(sim, averaged);
  io::Table table({"replica_id", "Y", "Z"});
  for (std::size_t i = 0; i < sample.first.size(); ++i)
    table.add_row(
        std::vector<double>{static_cast<double>(i), sample.first[i], sample.second[i]});
  emit(config, flags, "endpoints_limit", table);
  return 0;
}

bool averaged_coefficients_constant(const avg::AveragedCoefficients& averaged) {
  const double bar0 = averaged.bar_direct(0.0);
  const double fluct0 = averaged.fluct_direct(0.0);
  for (int i = 1; i < 16; ++i) {
    const double x = static_cast<double>(i) / 16.0;
    if (std::fabs(averaged.bar_direct(x) - bar0) > 1e-12 ||
        std::fabs(averaged.fluct_direct(x) - fluct0) > 1e-12)
      return false;
  }
  return true;
}

int cmd_compare(const CommonFlags& flags) {
  const auto config = flags.load();
  const auto mu = measure_for(config);
  const avg::AveragedCoefficients averaged(config.sigma, mu);
  const double alpha = 0.001;

  io::Table table({"epsilon", "metric_id", "value", "threshold", "pass"});
  // metric ids: 0 ks_Y, 1 ks_Z, 2 ks_X, 3 |Q11-ref|, 4 |Q12-ref|, 5 |Q22-ref|
  bool all_ok = true;
  for (double eps : config.epsilons) {
    const auto sim = config.sim_config(eps, flags.threads);
    const auto coupled =
        sde::simulate_coupled(sim, config.sigma, averaged, config.fast_spec(eps));
    std::vector<double> x_sum(coupled.first.size());
    for (std::size_t i = 0; i < x_sum.size(); ++i)
      x_sum[i] = coupled.first[i] + coupled.second[i];
    const auto cov = stats::sample_cov(coupled.first, coupled.second);

    const bool constant_case = averaged_coefficients_constant(averaged);
    double ks_y, ks_z, ks_x, thr_ks;
    double ref11, ref12, ref22, thr11, thr12, thr22;
    if (constant_case) {
      const double bar = averaged.bar_direct(0.0);
      const double fluct = averaged.fluct_direct(0.0);
      const double vy = bar * bar * config.T;
      const double vz = fluct * fluct * config.T;
      ks_y = stats::ks_against_gaussian(stats::EmpiricalSample(coupled.first), 0.0, vy);
      ks_z = stats::ks_against_gaussian(stats::EmpiricalSample(coupled.second), config.x0,
                                        vz);
      ks_x = stats::ks_against_gaussian(stats::EmpiricalSample(std::move(x_sum)), config.x0,
                                        vy + vz);
      thr_ks = stats::ks_critical_one_sample(alpha, coupled.first.size());
      ref11 = vy;
      ref12 = 0.0;
      ref22 = vz;
      thr11 = 3.0 * cov.se11;
      thr12 = 3.0 * cov.se12;
      thr22 = 3.0 * cov.se22;
    } else {
      auto fine = sim;
      fine.h_max = sim.macro_step() / 16.0;
      const auto limit = sde::simulate_limit(fine, averaged);
      std::vector<double> x_lim(limit.first.size());
      for (std::size_t i = 0; i < x_lim.size(); ++i)
        x_lim[i] = limit.first[i] + limit.second[i];
      ks_y = stats::ks_two_sample(stats::EmpiricalSample(coupled.first),
                                  stats::EmpiricalSample(limit.first));
      ks_z = stats::ks_two_sample(stats::EmpiricalSample(coupled.second),
                                  stats::EmpiricalSample(limit.second));
      ks_x = stats::ks_two_sample(stats::EmpiricalSample(std::move(x_sum)),
                                  stats::EmpiricalSample(std::move(x_lim)));
      thr_ks =
          stats::ks_critical_two_sample(alpha, coupled.first.size(), limit.first.size());
      const auto cov_lim = stats::sample_cov(limit.first, limit.second);
      ref11 = cov_lim.q11;
      ref12 = cov_lim.q12;
      ref22 = cov_lim.q22;
      thr11 = 3.0 * std::hypot(cov.se11, cov_lim.se11);
      thr12 = 3.0 * std::hypot(cov.se12, cov_lim.se12);
      thr22 = 3.0 * std::hypot(cov.se22, cov_lim.se22);
    }

    const double values[6] = {ks_y, ks_z, ks_x, std::fabs(cov.q11 - ref11),
                              std::fabs(cov.q12 - ref12), std::fabs(cov.q22 - ref22)};
    const double thresholds[6] = {thr_ks, thr_ks, thr_ks, thr11, thr12, thr22};
    for (int metric = 0; metric < 6; ++metric) {
      const bool ok = values[metric] <= thresholds[metric];
      all_ok = all_ok && ok;
      table.add_row(std::vector<double>{eps, static_cast<double>(metric), values[metric],
                                        thresholds[metric], ok ? 1.0 : 0.0});
    }
  }
  emit(config, flags, "compare", table);
  return all_ok ? 0 : 1;
}

// sigma(x,m) = offset + amp*sin(m) detection for the analytic weak-error
// oracle; falls back to Monte Carlo differences otherwise.
std::optional<std::pair<double, double>> sine_form(const cfg::ExperimentConfig& config) {
  if (config.fast_kind != fast::Kind::OU) return std::nullopt;
  if (config.sigma.uses_x()) return std::nullopt;
  const double offset = config.sigma.eval_raw(0.0, 0.0);
  const double amp = config.sigma.eval_raw(0.0, 1.5707963267948966) - offset;
  for (int i = 0; i <= 120; ++i) {
    const double m = -6.0 + i * 0.1;
    if (std::fabs(config.sigma.eval_raw(0.0, m) - offset - amp * std::sin(m)) > 1e-12)
      return std::nullopt;
  }
  return std::make_pair(offset, amp);
}

int cmd_rate_sweep(const CommonFlags& flags) {
  const auto config = flags.load();
  if (config.epsilons.size() < 3)
    throw ConfigError("rate-sweep needs an epsilon_list with at least 3 entries");
  const auto mu = measure_for(config);
  const avg::AveragedCoefficients averaged(config.sigma, mu);
  const auto form = sine_form(config);

  std::vector<double> errors, stderrs;
  for (double eps : config.epsilons) {
    if (form) {
      const double oracle = stats::gaussian_sine_moment_oracle(eps, config.T, config.m0,
                                                               form->second, form->first);
      const double limit = stats::gaussian_sine_moment_limit(config.T, form->second);
      errors.push_back(std::fabs(oracle - limit));
      stderrs.push_back(0.0);
    } else {
      const auto sim = config.sim_config(eps, flags.threads);
      const auto coupled =
          sde::simulate_coupled(sim, config.sigma, averaged, config.fast_spec(eps));
      auto fine = sim;
      fine.h_max = sim.macro_step() / 16.0;
      const auto limit = sde::simulate_limit(fine, averaged);
      const sde::TestFunction phi = sde::TestFunction::parse("m*m");
      const auto a = sde::weak_functional(coupled, phi);
      const auto b = sde::weak_functional(limit, phi);
      errors.push_back(std::fabs(a.mean - b.mean));
      stderrs.push_back(std::hypot(a.std_error, b.std_error));
    }
  }

  io::Table table({"epsilon", "error", "stderr"});
  for (std::size_t i = 0; i < errors.size(); ++i)
    table.add_row(std::vector<double>{config.epsilons[i], errors[i], stderrs[i]});
  emit(config, flags, "rate_sweep", table);

  const auto fit = form ? stats::fit_rate(config.epsilons, errors)
                        : stats::fit_rate(config.epsilons, errors, stderrs);
  std::cout << "slope=" << io::format_double(fit.slope)
            << " intercept=" << io::format_double(fit.intercept)
            << " r_squared=" << io::format_double(fit.r_squared)
            << " used=" << fit.used.size() << " excluded=" << fit.excluded.size()
            << (form ? " oracle=analytic" : " oracle=monte-carlo") << "\n";
  return 0;
}

int cmd_poisson_check(const CommonFlags& flags, int grid, int degree) {
  const auto config = flags.load();
  const auto mu = measure_for(config);
  const avg::AveragedCoefficients averaged(config.sigma, mu);
  const auto nodes = poisson::default_residual_nodes(mu);
  io::Table table({"x", "residual1", "residual2", "centering1", "centering2"});
  for (int i = 0; i < grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    const double bar = averaged.bar_direct(x);
    const double fluct = averaged.fluct_direct(x);
    const double var = fluct * fluct;
    const auto psi1 = poisson::build_psi1(averaged, x, degree);
    const auto psi2 = poisson::build_psi2(averaged, x, degree);
    const auto rep1 = poisson::residual_check(
        psi1, [&](double m) { return config.sigma.eval(x, m) - bar; }, nodes, mu);
    const auto rep2 = poisson::residual_check(
        psi2,
        [&](double m) {
          const double d = config.sigma.eval(x, m) - bar;
          return d * d - var;
        },
        nodes, mu);
    table.add_row(std::vector<double>{x, rep1.sup_residual, rep2.sup_residual,
                                      rep1.centering, rep2.centering});
  }
  emit(config, flags, "poisson_check", table);
  return 0;
}

int cmd_acceptance(const CommonFlags& flags) {
  acceptance::Options options;
  if (flags.out_dir) options.out_dir = *flags.out_dir;
  else if (const char* env = std::getenv("AVGSDE_OUT_DIR"); env && *env)
    options.out_dir = std::string(env) + "/acceptance";
  if (flags.seed) options.base_seed = *flags.seed;
  options.threads = flags.threads;
  const auto results = acceptance::run_all(options);
  return acceptance::print_report(results, std::cout);
}

void report_error(const char* kind, const std::exception& e) {
  nlohmann::json record;
  record["error"] = kind;
  record["message"] = e.what();
  std::cerr << record.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow-fast SDE averaging toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  int grid = 64;
  int degree = 40;
  std::string system = "coupled";
  std::string cache_path;

  auto* avg_cmd = app.add_subcommand("avg-table", "invariant-average table for sigma");
  flags.attach(avg_cmd);
  avg_cmd->add_option("--grid", grid, "x-grid size");

  auto* sim_cmd = app.add_subcommand("simulate", "endpoint samples of an eps-system");
  flags.attach(sim_cmd);
  sim_cmd->add_option("--system", system, "coupled, original, or averaged")
      ->check(CLI::IsMember({"coupled", "original", "averaged"}));
  sim_cmd->add_option("--cache", cache_path, "also write a binary endpoint cache");

  auto* limit_cmd = app.add_subcommand("limit", "endpoint samples of the limit system");
  flags.attach(limit_cmd);

  auto* compare_cmd =
      app.add_subcommand("compare", "distributional comparison against references");
  flags.attach(compare_cmd);

  auto* rate_cmd = app.add_subcommand("rate-sweep", "weak error versus epsilon with rate fit");
  flags.attach(rate_cmd);

  auto* poisson_cmd = app.add_subcommand("poisson-check", "Poisson solver residuals");
  flags.attach(poisson_cmd);
  poisson_cmd->add_option("--grid", grid, "x-grid size");
  poisson_cmd->add_option("--degree", degree, "Hermite truncation degree");

  auto* accept_cmd = app.add_subcommand("acceptance", "run the certification suite");
  flags.attach(accept_cmd, /*config_required=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (avg_cmd->parsed()) return cmd_avg_table(flags, grid);
    if (sim_cmd->parsed()) return cmd_simulate(flags, system, cache_path);
    if (limit_cmd->parsed()) return cmd_limit(flags);
    if (compare_cmd->parsed()) return cmd_compare(flags);
    if (rate_cmd->parsed()) return cmd_rate_sweep(flags);
    if (poisson_cmd->parsed()) return cmd_poisson_check(flags, grid, degree);
    if (accept_cmd->parsed()) return cmd_acceptance(flags);
  } catch (const ConfigError& e) {
    report_error("config", e);
    return 2;
  } catch (const ParseError& e) {
    report_error("parse", e);
    return 2;
  } catch (const NumericError& e) {
    report_error("numeric", e);
    return 3;
  } catch (const std::exception& e) {
    report_error("internal", e);
    return 3;
  }
  return 2;
}
