#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tokencycle/errors.hpp"

namespace tokencycle {

struct HistogramBin {
  double lo;
  double hi;
  long long count;
};

struct MonteCarloSummary {
  long long n = 0;
  double mean = 0.0;
  double sample_std = 0.0;          // n-1 denominator; 0 (flagged) when n == 1
  bool sample_std_defined = true;
  double min = 0.0;
  double max = 0.0;
  double p5 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  std::vector<HistogramBin> histogram;
  long long total_clamp_events = 0;
};

// Percentile by linear interpolation between order statistics:
// rank h = (n-1)p, value = x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] -
// x[floor(h)]). `sorted` must be ascending and non-empty.
inline double percentile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) {
    throw UsageError("percentile of empty sample");
  }
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) {
    return sorted[n - 1];
  }
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Left-to-right sum; the aggregation arithmetic is pinned so independent
// reimplementations reproduce results bit for bit.
inline double ordered_sum(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) {
    s += v;
  }
  return s;
}

inline double sample_mean(std::span<const double> values) {
  if (values.empty()) {
    throw UsageError("mean of empty sample");
  }
  // A constant sample short-circuits: its mean is that constant, exactly.
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn == *mx) {
    return *mn;
  }
  return ordered_sum(values) / static_cast<double>(values.size());
}

// Equal-width bins over [min, max]; the max value lands in the last bin.
// A zero-width range collapses to a single bin holding the whole sample.
inline std::vector<HistogramBin> histogram(std::span<const double> values,
                                           long long n_bins) {
  if (values.empty()) {
    throw UsageError("histogram of empty sample");
  }
  if (n_bins < 1) {
    throw UsageError("histogram needs n_bins >= 1");
  }
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn_it;
  const double hi = *mx_it;
  if (lo == hi) {
    return {HistogramBin{lo, hi, static_cast<long long>(values.size())}};
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<HistogramBin> bins;
  bins.reserve(static_cast<std::size_t>(n_bins));
  for (long long b = 0; b < n_bins; ++b) {
    bins.push_back(HistogramBin{lo + width * static_cast<double>(b),
                                b + 1 == n_bins
                                    ? hi
                                    : lo + width * static_cast<double>(b + 1),
                                0});
  }
  for (double v : values) {
    auto idx = static_cast<long long>((v - lo) / width);
    idx = std::clamp<long long>(idx, 0, n_bins - 1);
    // Width rounding can land a value one bin off its half-open range.
    while (idx > 0 && v < bins[static_cast<std::size_t>(idx)].lo) --idx;
    while (idx + 1 < n_bins && v >= bins[static_cast<std::size_t>(idx)].hi) {
      ++idx;
    }
    ++bins[static_cast<std::size_t>(idx)].count;
  }
  return bins;
}

inline MonteCarloSummary summarize(std::span<const double> values,
                                   long long histogram_bins = 0) {
  if (values.empty()) {
    throw UsageError("summarize needs a non-empty sample");
  }
  MonteCarloSummary s;
  s.n = static_cast<long long>(values.size());
  s.mean = sample_mean(values);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) {
      const double d = v - s.mean;
      ss += d * d;
    }
    s.sample_std = std::sqrt(ss / static_cast<double>(s.n - 1));
  } else {
    s.sample_std = 0.0;
    s.sample_std_defined = false;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p5 = percentile_sorted(sorted, 0.05);
  s.p50 = percentile_sorted(sorted, 0.50);
  s.p95 = percentile_sorted(sorted, 0.95);
  if (histogram_bins > 0) {
    s.histogram = histogram(values, histogram_bins);
  }
  return s;
}

}  // namespace tokencycle
