#pragma once

#include <cmath>
#include <cstdint>

namespace avgsde {

// splitmix64 (Steele, Lea, Flood). Used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman, Vigna). Small, fast, and fully deterministic
// across platforms, unlike std::normal_distribution.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Stream roles per replica. Each Monte Carlo replica owns one stream per
// noise source; the slow Brownian motion, the fast process noise and the
// second Brownian motion of the limit system never share draws.
enum class StreamRole : std::uint64_t {
  SlowBrownian = 1,
  FastNoise = 2,
  SecondBrownian = 3,
  InvariantSampling = 4,
};

// Derives a well-mixed 64-bit stream seed from (base_seed, replica, role).
inline std::uint64_t derive_stream_seed(std::uint64_t base_seed,
                                        std::uint64_t replica,
                                        StreamRole role) {
  std::uint64_t s = base_seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (replica * 0xD1B54A32D192ED03ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (static_cast<std::uint64_t>(role) * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

// One deterministic substream: uniforms in (0,1) and standard normals via
// Box-Muller. A spare normal is cached, so draws are consumed in a fixed
// order within the stream.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t replica, StreamRole role)
      : eng_(derive_stream_seed(base_seed, replica, role)) {}

  explicit RngStream(std::uint64_t raw_seed) : eng_(raw_seed) {}

  // Uniform on the open interval (0,1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(eng_.next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  Xoshiro256pp eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace avgsde
