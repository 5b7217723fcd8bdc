#pragma once

// Closed-form interference estimators.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "airtime/domain.hpp"

namespace airtime::baselines {

enum class EstimatorKind { SimpleSum, UniformSuperposition };

const char* to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator(std::string_view name);

struct BaselineEstimate {
  Vector estimates;
  EstimatorKind kind = EstimatorKind::SimpleSum;
};

/// I_a = sum of neighbor loads, optionally clipped to 1.
BaselineEstimate simple_sum(const LoadVector& loads, const Topology& topo, bool clip = true);

/// I_a = 1 - prod over neighbors of (1 - l_b): neighbor airtime placed independently and uniformly.
BaselineEstimate uniform_superposition(const LoadVector& loads, const Topology& topo);

BaselineEstimate estimate(EstimatorKind kind, const LoadVector& loads, const Topology& topo);

/// Slot simulation of independent neighbor occupancy; converges to uniform_superposition.
double monte_carlo_superposition(std::span<const double> neighbor_loads, std::size_t slots,
                                 std::uint64_t seed);

/// Maps one snapshot and a topology to a per-AP estimate.
using TelemetryEstimator = std::function<Vector(const TelemetrySample&, const Topology&)>;

TelemetryEstimator telemetry_estimator(EstimatorKind kind);
/// Returns the measured interference; every error is zero.
TelemetryEstimator groundtruth_estimator();

struct SweepRow {
  double threshold_dbm = 0.0;
  std::array<double, 5> percentiles{};  // signed error (estimate - truth) at P5/P25/P50/P75/P95
  std::size_t count = 0;
};

/// -100, -98, ..., -62 dBm.
std::vector<double> default_sweep_thresholds(double from = kMinThresholdDbm,
                                             double to = kEnergyDetectThresholdDbm,
                                             double step = 2.0);

std::vector<SweepRow> threshold_sweep(std::span<const TelemetrySample> samples,
                                      std::span<const double> thresholds,
                                      const TelemetryEstimator& estimator);

}  // namespace airtime::baselines
