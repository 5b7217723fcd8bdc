#include "airtime/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "airtime/error.hpp"

namespace airtime::stats {

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::EmptyDataset, "percentile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::array<double, 5> box_percentiles(std::span<const double> values) {
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < kBoxLevels.size(); ++i) out[i] = percentile(values, kBoxLevels[i]);
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyDataset, "mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::ShapeMismatch, "pearson: length mismatch");
  Correlation out;
  const std::size_t m = x.size();
  if (m < 3) return out;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return out;
  out.defined = true;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(m - 2);
  const double denom = 1.0 - out.r * out.r;
  if (denom <= 0.0) {
    out.p_value = 0.0;
    return out;
  }
  const double t = out.r * std::sqrt(dof / denom);
  boost::math::students_t dist(dof);
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
  return out;
}

}  // namespace airtime::stats
