#include "avgsde/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "avgsde/averaging.hpp"
#include "avgsde/errors.hpp"
#include "avgsde/expr.hpp"
#include "avgsde/io.hpp"
#include "avgsde/parallel.hpp"
#include "avgsde/poisson.hpp"
#include "avgsde/sde.hpp"
#include "avgsde/stats.hpp"

namespace avgsde::acceptance {

namespace {

using expr::CoefficientFn;

constexpr const char* kSigmaConstant = "2+sin(m)";
constexpr const char* kSigmaXdep = "0.5+0.25*sin(2*pi*x)*cos(m)";

// Simplified-case analytic laws: bar = 2, fluct^2 = (1-e^{-2})/2.
const double kVarZ = 0.5 * (1.0 - std::exp(-2.0));
const double kVarY = 4.0;
const double kVarX = kVarY + kVarZ;

struct Context {
  Options options;
  CoefficientFn sigma_const = CoefficientFn::parse(kSigmaConstant);
  CoefficientFn sigma_xdep = CoefficientFn::parse(kSigmaXdep);
  avg::InvariantMeasure mu = avg::InvariantMeasure::standard_gaussian(128);
  avg::AveragedCoefficients averaged_const{sigma_const, mu};
  avg::AveragedCoefficients averaged_xdep{sigma_xdep, mu};
  fast::FastProcessSpec ou;

  sde::SimConfig base_config(double eps, long n) const {
    sde::SimConfig config;
    config.epsilon = eps;
    config.T = 1.0;
    config.x0 = 0.0;
    config.m0 = 0.0;
    config.n_samples = n;
    config.base_seed = options.base_seed;
    config.threads = options.threads;
    return config;
  }
};

std::string fmt(double v) { return io::format_double(v); }

struct Check {
  std::ostringstream detail;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << (cond ? "" : "FAILED: ") << what;
    ok = ok && cond;
  }
};

// --- criterion bodies ------------------------------------------------------

void criterion_identity(Context& ctx, Check& check) {
  std::vector<double> grid(64);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 64.0;
  for (const auto* sigma : {&ctx.sigma_const, &ctx.sigma_xdep}) {
    const double residual = avg::identity_residual(*sigma, ctx.mu, grid);
    check.require(residual <= 1e-10,
                  "identity residual " + fmt(residual) + " <= 1e-10 for '" +
                      sigma->source() + "'");
  }
}

void criterion_pathwise(Context& ctx, Check& check) {
  sde::SimConfig config = ctx.base_config(0.05, 1000);
  const double dev = sde::pathwise_decomposition_deviation(config, ctx.sigma_xdep,
                                                           ctx.averaged_xdep, ctx.ou);
  check.require(dev <= 1e-12, "max |X-(Y+Z)| = " + fmt(dev) + " <= 1e-12");
}

void criterion_average_marginal(Context& ctx, Check& check) {
  for (double eps : {0.2, 0.05}) {
    const auto sample =
        sde::simulate_coupled(ctx.base_config(eps, 100000), ctx.sigma_const,
                              ctx.averaged_const, ctx.ou);
    const auto cov = stats::sample_cov(sample.first, sample.second);
    check.require(std::fabs(cov.q11 - kVarY) <= 3.0 * cov.se11,
                  "eps=" + fmt(eps) + ": Var(Y)=" + fmt(cov.q11) + " within 3se(" +
                      fmt(cov.se11) + ") of 4");
    const double d =
        stats::ks_against_gaussian(stats::EmpiricalSample(sample.first), 0.0, kVarY);
    check.require(d <= 0.0087, "eps=" + fmt(eps) + ": KS(Y, N(0,4)) = " + fmt(d) +
                                   " <= 0.0087");
  }
}

void criterion_fluctuation_limit(Check& check, const sde::EndpointSample& eps3_sample) {
  const auto cov = stats::sample_cov(eps3_sample.first, eps3_sample.second);
  const double d =
      stats::ks_against_gaussian(stats::EmpiricalSample(eps3_sample.second), 0.0, kVarZ);
  check.require(d <= 0.02, "KS(Z, N(0," + fmt(kVarZ) + ")) = " + fmt(d) + " <= 0.02");
  check.require(std::fabs(cov.q12) <= 3.0 * cov.se12,
                "Q12=" + fmt(cov.q12) + " within 3se(" + fmt(cov.se12) + ") of 0");
  check.require(std::fabs(cov.q22 - kVarZ) <= 3.0 * cov.se22,
                "Q22=" + fmt(cov.q22) + " within 3se(" + fmt(cov.se22) + ") of " +
                    fmt(kVarZ));
}

void criterion_full_averaging(Context& ctx, Check& check,
                              const sde::EndpointSample& eps3_sample) {
  std::vector<double> sum(eps3_sample.first.size());
  for (std::size_t i = 0; i < sum.size(); ++i)
    sum[i] = eps3_sample.first[i] + eps3_sample.second[i];
  const double d3 = stats::ks_against_gaussian(stats::EmpiricalSample(std::move(sum)), 0.0,
                                               kVarX);
  check.require(d3 <= 0.02, "KS(X at eps=1e-3, N(0," + fmt(kVarX) + ")) = " + fmt(d3) +
                                " <= 0.02");

  std::vector<double> trend;
  for (double eps : {0.2, 0.05, 0.0125}) {
    const auto sample = sde::simulate_coupled(ctx.base_config(eps, 200000),
                                              ctx.sigma_const, ctx.averaged_const, ctx.ou);
    std::vector<double> x(sample.first.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = sample.first[i] + sample.second[i];
    trend.push_back(
        stats::ks_against_gaussian(stats::EmpiricalSample(std::move(x)), 0.0, kVarX));
  }
  check.require(trend[0] > trend[1] && trend[1] > trend[2],
                "KS strictly decreasing along eps {0.2,0.05,0.0125}: " + fmt(trend[0]) +
                    " > " + fmt(trend[1]) + " > " + fmt(trend[2]));
}

void criterion_weak_error_rate(Context& ctx, Check& check, io::Table* rate_table) {
  const double m0 = 3.0;
  const double limit = stats::gaussian_sine_moment_limit(1.0, 1.0);
  const std::vector<double> eps_values = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> errors;
  for (double eps : eps_values) {
    const double oracle = stats::gaussian_sine_moment_oracle(eps, 1.0, m0, 1.0, 2.0);
    errors.push_back(std::fabs(oracle - limit));
    if (rate_table) rate_table->add_row(std::vector<double>{eps, errors.back(), 0.0});
  }
  const auto fit = stats::fit_rate(eps_values, errors);
  check.require(fit.slope >= 0.8 && fit.slope <= 1.2,
                "log-log slope " + fmt(fit.slope) + " in [0.8, 1.2]");
  check.require(fit.r_squared >= 0.98, "R^2 " + fmt(fit.r_squared) + " >= 0.98");

  // Monte Carlo cross-check at eps = 0.1 with the nontrivial initial layer.
  // The macro step is refined to keep the left-endpoint Riemann bias of the
  // EM variance below the Monte Carlo noise floor.
  sde::SimConfig config = ctx.base_config(0.1, 100000);
  config.m0 = m0;
  config.h_max = 0.0025;
  const auto sample =
      sde::simulate_coupled(config, ctx.sigma_const, ctx.averaged_const, ctx.ou);
  const auto z2 = sde::weak_functional(sample, sde::TestFunction::parse("m*m"));
  const double oracle01 = stats::gaussian_sine_moment_oracle(0.1, 1.0, m0, 1.0, 2.0);
  check.require(std::fabs(z2.mean - oracle01) <= 3.0 * z2.std_error,
                "MC E[Z^2]=" + fmt(z2.mean) + " within 3se(" + fmt(z2.std_error) +
                    ") of oracle " + fmt(oracle01));
}

void criterion_poisson(Context& ctx, Check& check) {
  const int degree = 40;
  const auto nodes = poisson::default_residual_nodes(ctx.mu);

  const CoefficientFn sigma_linear = CoefficientFn::parse("m");
  const avg::AveragedCoefficients averaged_linear(sigma_linear, ctx.mu);
  const struct {
    const CoefficientFn* sigma;
    const avg::AveragedCoefficients* averaged;
  } cases[] = {{&ctx.sigma_const, &ctx.averaged_const}, {&sigma_linear, &averaged_linear}};

  for (const auto& c : cases) {
    const double x = 0.0;
    const double bar = c.averaged->bar_direct(x);
    const double var = std::pow(c.averaged->fluct_direct(x), 2);
    const auto psi1 = poisson::build_psi1(*c.averaged, x, degree);
    const auto psi2 = poisson::build_psi2(*c.averaged, x, degree);
    const auto rhs1 = [&](double m) { return c.sigma->eval(x, m) - bar; };
    const auto rhs2 = [&](double m) {
      const double d = c.sigma->eval(x, m) - bar;
      return d * d - var;
    };
    const auto rep1 = poisson::residual_check(psi1, rhs1, nodes, ctx.mu);
    const auto rep2 = poisson::residual_check(psi2, rhs2, nodes, ctx.mu);
    const std::string tag = "sigma='" + c.sigma->source() + "'";
    check.require(rep1.sup_residual <= 1e-8,
                  tag + " psi1 residual " + fmt(rep1.sup_residual) + " <= 1e-8");
    check.require(rep2.sup_residual <= 1e-8,
                  tag + " psi2 residual " + fmt(rep2.sup_residual) + " <= 1e-8");
    check.require(rep1.centering <= 1e-12,
                  tag + " psi1 centering " + fmt(rep1.centering) + " <= 1e-12");
    check.require(rep2.centering <= 1e-12,
                  tag + " psi2 centering " + fmt(rep2.centering) + " <= 1e-12");
  }

  // exact eigenfunction cases
  const auto he1 = [](double m) { return m; };
  const auto he2 = [](double m) { return m * m - 1.0; };
  for (const auto& f : {std::function<double(double)>(he1), std::function<double(double)>(he2)}) {
    const auto psi = poisson::solve_poisson(f, degree, ctx.mu);
    const auto rep = poisson::residual_check(psi, f, nodes, ctx.mu);
    check.require(rep.sup_residual <= 1e-10,
                  "basis case residual " + fmt(rep.sup_residual) + " <= 1e-10");
  }
}

void criterion_generator_equality(Context& ctx, Check& check) {
  sde::SimConfig coupled_config = ctx.base_config(1e-2, 50000);
  const auto coupled = sde::simulate_coupled(coupled_config, ctx.sigma_xdep,
                                             ctx.averaged_xdep, ctx.ou);
  std::vector<double> x(coupled.first.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = coupled.first[i] + coupled.second[i];

  // Xbar at one sixteenth of the coupled macro step.
  sde::SimConfig avg_config = coupled_config;
  avg_config.h_max = coupled_config.macro_step() / 16.0;
  const auto averaged = sde::simulate_averaged(avg_config, ctx.averaged_xdep);

  const double d = stats::ks_two_sample(stats::EmpiricalSample(std::move(x)),
                                        stats::EmpiricalSample(averaged.first));
  check.require(d <= 0.015, "two-sample KS(X_eps, Xbar at h/16) = " + fmt(d) + " <= 0.015");
}

std::string artifact_bundle(Context& ctx) {
  // Deterministic artifact set: averaging table, endpoint samples in both
  // serializations, rate-sweep table. Concatenated for byte comparison and
  // written out per run.
  const std::uint64_t seed = ctx.options.base_seed;
  std::string bundle;

  io::Table avg_table({"x", "sigma_bar", "sigma_fluct", "sigma_Sigma", "identity_residual"});
  for (int i = 0; i < 64; ++i) {
    const double x = static_cast<double>(i) / 64.0;
    const double bar = ctx.averaged_xdep.bar_direct(x);
    const double fluct = ctx.averaged_xdep.fluct_direct(x);
    const double big = ctx.averaged_xdep.Sigma_direct(x);
    avg_table.add_row(std::vector<double>{
        x, bar, fluct, big, std::fabs(bar * bar + fluct * fluct - big * big)});
  }
  const std::uint64_t avg_hash = io::fnv1a64(std::string("acceptance-avg-table;sigma=") +
                                             kSigmaXdep + ";seed=" + std::to_string(seed));
  bundle += avg_table.to_csv(io::provenance(avg_hash, seed));

  sde::SimConfig config = ctx.base_config(0.1, 2000);
  const auto sample = sde::simulate_coupled(config, ctx.sigma_const, ctx.averaged_const,
                                            ctx.ou);
  io::Table endpoints({"replica_id", "Y", "Z"});
  for (std::size_t i = 0; i < sample.first.size(); ++i)
    endpoints.add_row(
        std::vector<double>{static_cast<double>(i), sample.first[i], sample.second[i]});
  const std::uint64_t run_hash = io::fnv1a64(std::string("acceptance-endpoints;sigma=") +
                                             kSigmaConstant + ";eps=0.1;n=2000;seed=" +
                                             std::to_string(seed));
  bundle += endpoints.to_csv(io::provenance(run_hash, seed));
  bundle += endpoints.to_json(io::provenance(run_hash, seed));

  io::Table rate({"epsilon", "error", "stderr"});
  Check scratch;
  criterion_weak_error_rate(ctx, scratch, &rate);
  const std::uint64_t rate_hash =
      io::fnv1a64(std::string("acceptance-rate-sweep;seed=") + std::to_string(seed));
  bundle += rate.to_csv(io::provenance(rate_hash, seed));

  std::string dir = ctx.options.out_dir;
  io::ensure_directory(dir);
  io::write_file(dir + "/bundle.csv", bundle);

  // the binary cache participates in the byte comparison as well
  sde::write_binary_cache(dir + "/endpoints.bin", sample, run_hash);
  bundle += io::read_file(dir + "/endpoints.bin");
  return bundle;
}

void criterion_reproducibility(Context& ctx, Check& check) {
  const std::string base = ctx.options.out_dir;
  Context fresh1;
  fresh1.options = ctx.options;
  fresh1.options.out_dir = base + "/run1";
  Context fresh2;
  fresh2.options = ctx.options;
  fresh2.options.out_dir = base + "/run2";
  const std::string bundle1 = artifact_bundle(fresh1);
  const std::string bundle2 = artifact_bundle(fresh2);
  check.require(!bundle1.empty() && bundle1 == bundle2,
                "repeated runs produce byte-identical artifacts (" +
                    std::to_string(bundle1.size()) + " bytes)");
}

}  // namespace

std::vector<CriterionResult> run_all(const Options& options) {
  Context ctx;
  ctx.options = options;

  std::vector<CriterionResult> results;
  sde::EndpointSample eps3_sample;  // shared by criteria 4 and 5

  const auto run = [&](int index, const std::string& name,
                       const std::function<void(Check&)>& body) {
    CriterionResult result;
    result.index = index;
    result.name = name;
    const auto start = std::chrono::steady_clock::now();
    Check check;
    try {
      body(check);
      result.passed = check.ok;
      result.detail = check.detail.str();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = std::string("exception: ") + e.what();
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(result);
  };

  run(1, "averaging identity", [&](Check& c) { criterion_identity(ctx, c); });
  run(2, "pathwise decomposition", [&](Check& c) { criterion_pathwise(ctx, c); });
  run(3, "average marginal law", [&](Check& c) { criterion_average_marginal(ctx, c); });
  run(4, "fluctuation limit", [&](Check& c) {
    eps3_sample = sde::simulate_coupled(ctx.base_config(1e-3, 100000), ctx.sigma_const,
                                        ctx.averaged_const, ctx.ou);
    criterion_fluctuation_limit(c, eps3_sample);
  });
  run(5, "diffusion enhancement", [&](Check& c) {
    if (eps3_sample.first.empty())
      eps3_sample = sde::simulate_coupled(ctx.base_config(1e-3, 100000), ctx.sigma_const,
                                          ctx.averaged_const, ctx.ou);
    criterion_full_averaging(ctx, c, eps3_sample);
  });
  run(6, "weak-error rate", [&](Check& c) { criterion_weak_error_rate(ctx, c, nullptr); });
  run(7, "poisson solver", [&](Check& c) { criterion_poisson(ctx, c); });
  run(8, "generator equality", [&](Check& c) { criterion_generator_equality(ctx, c); });
  run(9, "reproducibility", [&](Check& c) { criterion_reproducibility(ctx, c); });
  return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

int print_report(const std::vector<CriterionResult>& results, std::ostream& out) {
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << "criterion " << r.index << " (" << r.name
        << ", " << static_cast<long>(r.seconds * 1000.0) << " ms): " << r.detail << "\n";
  }
  const bool ok = all_passed(results);
  out << (ok ? "acceptance: all criteria passed\n" : "acceptance: FAILURES present\n");
  return ok ? 0 : 1;
}

}  // namespace avgsde::acceptance
