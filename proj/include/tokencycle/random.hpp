#pragma once

#include <cmath>
#include <cstdint>

#include "tokencycle/errors.hpp"

// Reproducible random streams.
//
// The substream key derivation is the normative contract (not any library):
//
//   mix(z) = splitmix64 finalizer of (z + 0x9E3779B97F4A7C15)
//   k0  = mix(master_seed)
//   k1  = mix(k0 ^ 0x9E3779B97F4A7C15 * (stream_index + 1))
//   key = mix(k1 ^ 0xC2B2AE3D27D4EB4F * (channel + 1))
//
// The generator state is xoshiro256++ seeded with four successive
// splitmix64 outputs starting from `key`. Everything is unsigned 64-bit
// arithmetic, so the same (master_seed, stream_index, channel) produces
// the same sample sequence on every platform. Distinct indices or
// channels give statistically independent sequences.

namespace tokencycle {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += kGolden;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t z) {
  std::uint64_t s = z;
  return splitmix64_next(s);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// Inverse of the standard normal CDF (Wichura's algorithm AS 241,
// PPND16 variant). Relative accuracy near full double precision; pure
// rational-polynomial arithmetic, so results are platform-stable.
inline double inverse_normal_cdf(double p) {
  static constexpr double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2,
      1.9715909503065514427e3,  1.3731693765509461125e4,
      4.5921953931549871457e4,  6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double b[8] = {
      1.0,                      4.2313330701600911252e1,
      6.8718700749205790830e2,  5.3941960214247511077e3,
      2.1213794301586595867e4,  3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double c[8] = {
      1.42343711074968357734e0,  4.63033784615654529590e0,
      5.76949722146069140550e0,  3.64784832476320460504e0,
      1.27045825245236838258e0,  2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {
      1.0,                       2.05319162663775882187e0,
      1.67638483018380384940e0,  6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[8] = {
      6.65790464350110377720e0,  5.46378491116411436990e0,
      1.78482653991729133580e0,  2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {
      1.0,                       5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  auto ratio = [](const double (&num)[8], const double (&den)[8], double r) {
    double n = num[7];
    double m = den[7];
    for (int i = 6; i >= 0; --i) {
      n = n * r + num[i];
      m = m * r + den[i];
    }
    return n / m;
  };

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * ratio(a, b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    x = ratio(c, d, r - 1.6);
  } else {
    x = ratio(e, f, r - 5.0);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace detail

// One reproducible stream of draws, owned by a single consumer at a time.
class RandomStream {
public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index,
               std::uint64_t channel = 0)
      : master_seed_(master_seed), stream_index_(stream_index),
        channel_(channel) {
    std::uint64_t k = detail::mix64(master_seed);
    k = detail::mix64(k ^ (detail::kGolden * (stream_index + 1)));
    k = detail::mix64(k ^ (0xC2B2AE3D27D4EB4Full * (channel + 1)));
    for (auto& s : state_) {
      s = detail::splitmix64_next(k);
    }
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  // Keyed off (master_seed, stream_index, channel); independent of how many
  // draws this stream has already produced.
  RandomStream substream(std::uint64_t channel) const {
    return RandomStream(master_seed_, stream_index_, channel);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // 53-bit uniform in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in the open interval (0, 1); safe input for inverse CDFs.
  double next_open_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via inverse CDF: exactly one uniform per draw, which
  // keeps paired/common-random-number layouts aligned.
  double next_normal() {
    return detail::inverse_normal_cdf(next_open_uniform());
  }

private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t channel_;
  std::uint64_t state_[4];
};

inline RandomStream derive_stream(std::uint64_t master_seed,
                                  std::uint64_t trial_index) {
  return RandomStream(master_seed, trial_index);
}

// Gamma(shape, 1) via Marsaglia-Tsang; draw count varies per sample but the
// stream is sequentially owned, so reproducibility is unaffected.
inline double sample_gamma(double shape, RandomStream& stream) {
  if (shape <= 0.0) {
    throw ConfigError("gamma.shape", "must be > 0");
  }
  if (shape < 1.0) {
    const double boost =
        std::pow(stream.next_open_uniform(), 1.0 / shape);
    return sample_gamma(shape + 1.0, stream) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = stream.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.next_open_uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

inline double sample_beta(double alpha, double beta, RandomStream& stream) {
  const double x = sample_gamma(alpha, stream);
  const double y = sample_gamma(beta, stream);
  return x / (x + y);
}

}  // namespace tokencycle
