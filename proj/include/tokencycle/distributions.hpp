#pragma once

#include <cmath>
#include <algorithm>
#include <optional>
#include <string>

#include "tokencycle/errors.hpp"
#include "tokencycle/random.hpp"

namespace tokencycle {

enum class DistributionKind { constant, normal, lognormal, beta, scaled_beta };

inline const char* to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::constant: return "constant";
    case DistributionKind::normal: return "normal";
    case DistributionKind::lognormal: return "lognormal";
    case DistributionKind::beta: return "beta";
    case DistributionKind::scaled_beta: return "scaled-beta";
  }
  return "?";
}

struct ClampBounds {
  double lo;
  double hi;
};

// Tagged description of a sampleable distribution. Parameter use per kind:
//   constant     a = value
//   normal       a = mean, b = sd
//   lognormal    a = log_mean (mu), b = log_sd (sigma)
//   beta         a, b = shape parameters
//   scaled-beta  a, b shapes, mapped affinely onto [lo, hi]
// An optional clamp is applied after sampling; clamp events are counted.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::constant;
  double a = 0.0;
  double b = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  std::optional<ClampBounds> clamp;

  static DistributionSpec constant(double value) {
    DistributionSpec s;
    s.kind = DistributionKind::constant;
    s.a = value;
    return s;
  }

  static DistributionSpec normal(double mean, double sd) {
    DistributionSpec s;
    s.kind = DistributionKind::normal;
    s.a = mean;
    s.b = sd;
    return s;
  }

  static DistributionSpec lognormal(double log_mean, double log_sd) {
    DistributionSpec s;
    s.kind = DistributionKind::lognormal;
    s.a = log_mean;
    s.b = log_sd;
    return s;
  }

  static DistributionSpec beta(double a, double b) {
    DistributionSpec s;
    s.kind = DistributionKind::beta;
    s.a = a;
    s.b = b;
    return s;
  }

  static DistributionSpec scaled_beta(double a, double b, double lo, double hi) {
    DistributionSpec s;
    s.kind = DistributionKind::scaled_beta;
    s.a = a;
    s.b = b;
    s.lo = lo;
    s.hi = hi;
    return s;
  }

  DistributionSpec clamped(double clamp_lo, double clamp_hi) const {
    DistributionSpec s = *this;
    s.clamp = ClampBounds{clamp_lo, clamp_hi};
    return s;
  }

  // `field` prefixes error paths, e.g. "stochastic_inputs.token_value".
  void validate(const std::string& field) const {
    switch (kind) {
      case DistributionKind::constant:
        break;
      case DistributionKind::normal:
        if (!(b >= 0.0)) throw ConfigError(field + ".sd", "must be >= 0");
        break;
      case DistributionKind::lognormal:
        if (!(b >= 0.0)) throw ConfigError(field + ".log_sd", "must be >= 0");
        break;
      case DistributionKind::scaled_beta:
        if (!(lo <= hi)) throw ConfigError(field + ".lo", "requires lo <= hi");
        [[fallthrough]];
      case DistributionKind::beta:
        if (!(a > 0.0)) throw ConfigError(field + ".a", "must be > 0");
        if (!(b > 0.0)) throw ConfigError(field + ".b", "must be > 0");
        break;
    }
    if (clamp && !(clamp->lo <= clamp->hi)) {
      throw ConfigError(field + ".clamp", "requires lo <= hi");
    }
  }

  // Mean of the distribution before clamping.
  double unclamped_mean() const {
    switch (kind) {
      case DistributionKind::constant: return a;
      case DistributionKind::normal: return a;
      case DistributionKind::lognormal: return std::exp(a + 0.5 * b * b);
      case DistributionKind::beta: return a / (a + b);
      case DistributionKind::scaled_beta:
        return lo + (hi - lo) * a / (a + b);
    }
    return 0.0;
  }
};

// One draw. Clamp events (if any) are added to `clamp_count`.
inline double sample(const DistributionSpec& spec, RandomStream& stream,
                     long long& clamp_count) {
  double x = 0.0;
  switch (spec.kind) {
    case DistributionKind::constant:
      x = spec.a;
      break;
    case DistributionKind::normal:
      x = spec.a + spec.b * stream.next_normal();
      break;
    case DistributionKind::lognormal:
      x = std::exp(spec.a + spec.b * stream.next_normal());
      break;
    case DistributionKind::beta:
      x = sample_beta(spec.a, spec.b, stream);
      break;
    case DistributionKind::scaled_beta:
      x = spec.lo + (spec.hi - spec.lo) * sample_beta(spec.a, spec.b, stream);
      break;
  }
  if (spec.clamp) {
    if (x < spec.clamp->lo) {
      x = spec.clamp->lo;
      ++clamp_count;
    } else if (x > spec.clamp->hi) {
      x = spec.clamp->hi;
      ++clamp_count;
    }
  }
  return x;
}

inline double sample(const DistributionSpec& spec, RandomStream& stream) {
  long long ignored = 0;
  return sample(spec, stream, ignored);
}

// Builds a lognormal spec whose natural-space mean and standard deviation
// equal the given values:
//   sigma^2 = ln(1 + (sd/mean)^2),  mu = ln(mean) - sigma^2 / 2
inline DistributionSpec lognormal_from_natural_moments(double natural_mean,
                                                       double natural_sd) {
  if (!(natural_mean > 0.0)) {
    throw ConfigError("lognormal.natural_mean", "must be > 0");
  }
  if (!(natural_sd >= 0.0)) {
    throw ConfigError("lognormal.natural_sd", "must be >= 0");
  }
  const double ratio = natural_sd / natural_mean;
  const double sigma2 = std::log1p(ratio * ratio);
  const double mu = std::log(natural_mean) - 0.5 * sigma2;
  return DistributionSpec::lognormal(mu, std::sqrt(sigma2));
}

// Natural-space (mean, sd) implied by lognormal(log_mean, log_sd).
inline std::pair<double, double> lognormal_natural_moments(
    const DistributionSpec& spec) {
  const double mu = spec.a;
  const double sigma2 = spec.b * spec.b;
  const double mean = std::exp(mu + 0.5 * sigma2);
  const double sd = mean * std::sqrt(std::expm1(sigma2));
  return {mean, sd};
}

}  // namespace tokencycle
