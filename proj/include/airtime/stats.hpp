#pragma once

#include <array>
#include <span>
#include <vector>

namespace airtime::stats {

/// Percentile with linear interpolation between closest ranks (q in [0, 100]).
double percentile(std::span<const double> values, double q);

/// The five box-plot levels: P5, P25, P50, P75, P95.
inline constexpr std::array<double, 5> kBoxLevels{5.0, 25.0, 50.0, 75.0, 95.0};
std::array<double, 5> box_percentiles(std::span<const double> values);

double mean(std::span<const double> values);
double stddev(std::span<const double> values);  // sample (n-1) normalization

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  bool defined = false;
};

/// Pearson r with a two-sided p-value from t = r * sqrt((m-2)/(1-r^2)).
/// Undefined for fewer than 3 points or zero variance on either side.
Correlation pearson(std::span<const double> x, std::span<const double> y);

}  // namespace airtime::stats
