#include "avgsde/sde.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "avgsde/errors.hpp"
#include "avgsde/parallel.hpp"
#include "avgsde/rng.hpp"

namespace avgsde::sde {

namespace {

constexpr char kCacheMagic[8] = {'A', 'V', 'S', 'D', 'C', 'S', '0', '1'};
constexpr std::uint32_t kCacheVersion = 1;

fast::FastProcessSpec effective_fast(const fast::FastProcessSpec& dynamics,
                                     const SimConfig& config) {
  fast::FastProcessSpec spec = dynamics;
  spec.epsilon = config.epsilon;
  spec.m0 = config.m0;
  spec.validate();
  return spec;
}

[[noreturn]] void abort_non_finite(const char* scheme, long replica, long step) {
  throw NumericError(std::string(scheme) + ": non-finite state in replica " +
                     std::to_string(replica) + " at step " + std::to_string(step));
}

}  // namespace

void SimConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw NumericError("sim config: epsilon must lie in (0,1), got " + std::to_string(epsilon));
  if (!(T > 0.0)) throw NumericError("sim config: horizon T must be positive");
  if (n_samples < 1) throw NumericError("sim config: n_samples must be >= 1");
  if (!(c > 0.0 && c <= 1.0)) throw NumericError("sim config: c must lie in (0,1]");
  if (!(h_max > 0.0)) throw NumericError("sim config: h_max must be positive");
  if (!std::isfinite(x0) || !std::isfinite(m0))
    throw NumericError("sim config: initial values must be finite");
  if (threads < 0) throw NumericError("sim config: threads must be >= 0");
}

long SimConfig::n_steps() const {
  const double h_req = std::min(h_max, c * epsilon);
  return static_cast<long>(std::ceil(T / h_req - 1e-12));
}

double SimConfig::macro_step() const { return T / static_cast<double>(n_steps()); }

EndpointSample simulate_coupled(const SimConfig& config, const expr::CoefficientFn& sigma,
                                const avg::AveragedCoefficients& averaged,
                                const fast::FastProcessSpec& dynamics) {
  config.validate();
  const fast::FastProcessSpec spec = effective_fast(dynamics, config);
  const double h = config.macro_step();
  const long nsteps = config.n_steps();
  const double sqh = std::sqrt(h);
  const fast::FastStepper stepper(spec, h);

  EndpointSample out;
  out.config = config;
  out.scheme = "coupled-em";
  out.first.resize(static_cast<std::size_t>(config.n_samples));
  out.second.resize(static_cast<std::size_t>(config.n_samples));

  parallel_replicas(config.n_samples, config.threads, [&](long r) {
    RngStream beta(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::SlowBrownian);
    RngStream w(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::FastNoise);
    double y = 0.0, z = config.x0, m = spec.m0;
    for (long k = 0; k < nsteps; ++k) {
      const double xk = y + z;
      const double sbar = averaged.bar(xk);
      const double sig = sigma.eval(xk, m);
      const double db = sqh * beta.gaussian();
      y += sbar * db;
      z += (sig - sbar) * db;
      if (!(std::isfinite(y) && std::isfinite(z))) abort_non_finite("simulate_coupled", r, k);
      m = stepper.advance(m, w);
    }
    out.first[static_cast<std::size_t>(r)] = y;
    out.second[static_cast<std::size_t>(r)] = z;
  });
  return out;
}

EndpointSample simulate_original(const SimConfig& config, const expr::CoefficientFn& sigma,
                                 const fast::FastProcessSpec& dynamics) {
  config.validate();
  const fast::FastProcessSpec spec = effective_fast(dynamics, config);
  const double h = config.macro_step();
  const long nsteps = config.n_steps();
  const double sqh = std::sqrt(h);
  const fast::FastStepper stepper(spec, h);

  EndpointSample out;
  out.config = config;
  out.scheme = "original-em";
  out.first.resize(static_cast<std::size_t>(config.n_samples));

  parallel_replicas(config.n_samples, config.threads, [&](long r) {
    RngStream beta(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::SlowBrownian);
    RngStream w(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::FastNoise);
    double x = config.x0, m = spec.m0;
    for (long k = 0; k < nsteps; ++k) {
      const double db = sqh * beta.gaussian();
      x += sigma.eval(x, m) * db;
      if (!std::isfinite(x)) abort_non_finite("simulate_original", r, k);
      m = stepper.advance(m, w);
    }
    out.first[static_cast<std::size_t>(r)] = x;
  });
  return out;
}

EndpointSample simulate_limit(const SimConfig& config,
                              const avg::AveragedCoefficients& averaged) {
  config.validate();
  const double h = config.macro_step();
  const long nsteps = config.n_steps();
  const double sqh = std::sqrt(h);

  EndpointSample out;
  out.config = config;
  out.scheme = "limit-em";
  out.first.resize(static_cast<std::size_t>(config.n_samples));
  out.second.resize(static_cast<std::size_t>(config.n_samples));

  parallel_replicas(config.n_samples, config.threads, [&](long r) {
    RngStream beta1(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::SlowBrownian);
    RngStream beta2(config.base_seed, static_cast<std::uint64_t>(r),
                    StreamRole::SecondBrownian);
    double y = 0.0, z = config.x0;
    for (long k = 0; k < nsteps; ++k) {
      const double xk = y + z;
      const double db1 = sqh * beta1.gaussian();
      const double db2 = sqh * beta2.gaussian();
      y += averaged.bar(xk) * db1;
      z += averaged.fluct(xk) * db2;
      if (!(std::isfinite(y) && std::isfinite(z))) abort_non_finite("simulate_limit", r, k);
    }
    out.first[static_cast<std::size_t>(r)] = y;
    out.second[static_cast<std::size_t>(r)] = z;
  });
  return out;
}

EndpointSample simulate_averaged(const SimConfig& config,
                                 const avg::AveragedCoefficients& averaged) {
  config.validate();
  const double h = config.macro_step();
  const long nsteps = config.n_steps();
  const double sqh = std::sqrt(h);

  EndpointSample out;
  out.config = config;
  out.scheme = "averaged-em";
  out.first.resize(static_cast<std::size_t>(config.n_samples));

  parallel_replicas(config.n_samples, config.threads, [&](long r) {
    RngStream beta(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::SlowBrownian);
    double x = config.x0;
    for (long k = 0; k < nsteps; ++k) {
      const double db = sqh * beta.gaussian();
      x += averaged.Sigma(x) * db;
      if (!std::isfinite(x)) abort_non_finite("simulate_averaged", r, k);
    }
    out.first[static_cast<std::size_t>(r)] = x;
  });
  return out;
}

double pathwise_decomposition_deviation(const SimConfig& config,
                                        const expr::CoefficientFn& sigma,
                                        const avg::AveragedCoefficients& averaged,
                                        const fast::FastProcessSpec& dynamics) {
  config.validate();
  const fast::FastProcessSpec spec = effective_fast(dynamics, config);
  const double h = config.macro_step();
  const long nsteps = config.n_steps();
  const double sqh = std::sqrt(h);
  const fast::FastStepper stepper(spec, h);

  std::vector<double> worst(static_cast<std::size_t>(config.n_samples), 0.0);
  parallel_replicas(config.n_samples, config.threads, [&](long r) {
    RngStream beta(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::SlowBrownian);
    RngStream w(config.base_seed, static_cast<std::uint64_t>(r), StreamRole::FastNoise);
    double y = 0.0, z = config.x0, x = config.x0, m = spec.m0;
    double dev = 0.0;
    for (long k = 0; k < nsteps; ++k) {
      const double xk = y + z;
      const double sbar = averaged.bar(xk);
      const double db = sqh * beta.gaussian();
      y += sbar * db;
      z += (sigma.eval(xk, m) - sbar) * db;
      x += sigma.eval(x, m) * db;
      if (!(std::isfinite(y) && std::isfinite(z) && std::isfinite(x)))
        abort_non_finite("pathwise_decomposition", r, k);
      m = stepper.advance(m, w);
      dev = std::max(dev, std::fabs(x - (y + z)));
    }
    worst[static_cast<std::size_t>(r)] = dev;
  });
  double overall = 0.0;
  for (double d : worst) overall = std::max(overall, d);
  return overall;
}

WeakEstimate weak_functional(const EndpointSample& samples, const TestFunction& phi) {
  const std::size_t n = samples.first.size();
  if (n == 0) throw std::invalid_argument("weak_functional: empty sample");
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = samples.is_pair() ? phi(samples.first[i], samples.second[i])
                                       : phi(samples.first[i], 0.0);
    sum += v;
    sumsq += v * v;
  }
  WeakEstimate est;
  est.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * est.mean) / (static_cast<double>(n) - 1.0));
    est.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return est;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

double get_f64(const char* p) {
  const std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

void write_binary_cache(const std::string& path, const EndpointSample& samples,
                        std::uint64_t config_hash) {
  std::string blob;
  blob.append(kCacheMagic, sizeof kCacheMagic);
  put_u32(blob, kCacheVersion);
  put_u64(blob, config_hash);
  const std::uint32_t cols = samples.is_pair() ? 2 : 1;
  put_u32(blob, cols);
  put_u64(blob, static_cast<std::uint64_t>(samples.first.size()));
  for (std::size_t i = 0; i < samples.first.size(); ++i) {
    put_f64(blob, samples.first[i]);
    if (cols == 2) put_f64(blob, samples.second[i]);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw NumericError("binary cache: cannot open '" + path + "' for writing");
  file.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!file) throw NumericError("binary cache: write failed for '" + path + "'");
}

CacheContents read_binary_cache(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw NumericError("binary cache: cannot open '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  const std::size_t header = sizeof kCacheMagic + 4 + 8 + 4 + 8;
  if (blob.size() < header || std::memcmp(blob.data(), kCacheMagic, sizeof kCacheMagic) != 0)
    throw NumericError("binary cache: bad magic in '" + path + "'");
  CacheContents contents;
  const char* p = blob.data() + sizeof kCacheMagic;
  contents.version = get_u32(p);
  p += 4;
  if (contents.version != kCacheVersion)
    throw NumericError("binary cache: unsupported version " + std::to_string(contents.version));
  contents.config_hash = get_u64(p);
  p += 8;
  const std::uint32_t cols = get_u32(p);
  p += 4;
  const std::uint64_t rows = get_u64(p);
  p += 8;
  if (cols < 1 || cols > 2 || blob.size() != header + rows * cols * 8)
    throw NumericError("binary cache: truncated or malformed '" + path + "'");
  contents.first.resize(rows);
  if (cols == 2) contents.second.resize(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    contents.first[i] = get_f64(p);
    p += 8;
    if (cols == 2) {
      contents.second[i] = get_f64(p);
      p += 8;
    }
  }
  return contents;
}

}  // namespace avgsde::sde
