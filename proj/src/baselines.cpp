#include "airtime/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "airtime/stats.hpp"

namespace airtime::baselines {

const char* to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::SimpleSum: return "simple-sum";
    case EstimatorKind::UniformSuperposition: return "uniform-superposition";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "simple-sum") return EstimatorKind::SimpleSum;
  if (name == "uniform-superposition") return EstimatorKind::UniformSuperposition;
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

namespace {

void check_dims(const LoadVector& loads, const Topology& topo) {
  if (loads.size() != topo.size()) {
    throw Error(ErrorKind::ShapeMismatch, "load vector length does not match topology size");
  }
}

}  // namespace

BaselineEstimate simple_sum(const LoadVector& loads, const Topology& topo, bool clip) {
  check_dims(loads, topo);
  const std::size_t n = topo.size();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    double sum = 0.0;
    for (std::size_t b : topo.neighbors(a)) sum += loads[b];
    out(static_cast<Eigen::Index>(a)) = clip ? std::min(1.0, sum) : sum;
  }
  return {std::move(out), EstimatorKind::SimpleSum};
}

BaselineEstimate uniform_superposition(const LoadVector& loads, const Topology& topo) {
  check_dims(loads, topo);
  const std::size_t n = topo.size();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    // busy += l * (1 - busy) is 1 - prod(1 - l) unrolled; in this form each
    // rounded step stays at or below the matching partial sum of simple_sum.
    double busy = 0.0;
    for (std::size_t b : topo.neighbors(a)) busy += loads[b] * (1.0 - busy);
    out(static_cast<Eigen::Index>(a)) = std::clamp(busy, 0.0, 1.0);
  }
  return {std::move(out), EstimatorKind::UniformSuperposition};
}

BaselineEstimate estimate(EstimatorKind kind, const LoadVector& loads, const Topology& topo) {
  return kind == EstimatorKind::SimpleSum ? simple_sum(loads, topo) : uniform_superposition(loads, topo);
}

double monte_carlo_superposition(std::span<const double> neighbor_loads, std::size_t slots,
                                 std::uint64_t seed) {
  if (slots == 0) throw Error(ErrorKind::InvalidArgument, "slots must be >= 1");
  if (neighbor_loads.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t busy = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    bool occupied = false;
    // Every neighbor draws in every slot so the stream layout does not depend on outcomes.
    for (double load : neighbor_loads) occupied |= u(rng) < load;
    busy += occupied ? 1 : 0;
  }
  return static_cast<double>(busy) / static_cast<double>(slots);
}

TelemetryEstimator telemetry_estimator(EstimatorKind kind) {
  return [kind](const TelemetrySample& sample, const Topology& topo) {
    return estimate(kind, load_from_telemetry(sample), topo).estimates;
  };
}

TelemetryEstimator groundtruth_estimator() {
  return [](const TelemetrySample& sample, const Topology&) { return sample.interference; };
}

std::vector<double> default_sweep_thresholds(double from, double to, double step) {
  if (step <= 0.0) throw Error(ErrorKind::InvalidArgument, "sweep step must be positive");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double t = from + step * i;
    if (t > to + 1e-9) break;
    out.push_back(t);
  }
  return out;
}

std::vector<SweepRow> threshold_sweep(std::span<const TelemetrySample> samples,
                                      std::span<const double> thresholds,
                                      const TelemetryEstimator& estimator) {
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "empty dataset");
  std::vector<Matrix> symmetric;
  symmetric.reserve(samples.size());
  for (const auto& s : samples) symmetric.push_back(symmetrize_rssi(s.rssi));

  std::vector<SweepRow> rows;
  for (double threshold : thresholds) {
    std::vector<double> errors;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Topology topo = derive_adjacency(symmetric[i], threshold);
      const Vector est = estimator(samples[i], topo);
      for (Eigen::Index a = 0; a < est.size(); ++a) {
        errors.push_back(est(a) - samples[i].interference(a));
      }
    }
    rows.push_back({threshold, stats::box_percentiles(errors), errors.size()});
  }
  return rows;
}

}  // namespace airtime::baselines
