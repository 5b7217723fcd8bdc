#pragma once

// Topology-generalization sweep: validation error as a function of the number
// of distinct training topologies k.

#include <cstdint>
#include <functional>
#include <vector>

#include "airtime/models.hpp"
#include "airtime/synth.hpp"
#include "airtime/train_eval.hpp"

namespace airtime::synth {

struct KSweepConfig {
  models::ModelSpec model = models::ModelSpec::gcn(10);
  std::vector<std::size_t> k_values{1, 2, 4, 8, 16, 32, 64};
  std::size_t repetitions = 30;
  SynthConfig synth;
  train::TrainConfig train;
  std::uint64_t seed = 0;
};

struct KSweepRow {
  std::size_t k = 0;
  double mean_mse = 0.0;
  double std_mse = 0.0;
  /// MSE restricted to the failure node; only meaningful for single-failure labels.
  double mean_failure_mse = 0.0;
  double std_failure_mse = 0.0;
  std::vector<double> repetition_mse;
  std::vector<double> repetition_failure_mse;
};

/// Called after every finished repetition with (k, repetition, validation MSE).
using SweepProgress = std::function<void(std::size_t, std::size_t, double)>;

/// Repetition r of every k uses seed + r for data and model initialization.
std::vector<KSweepRow> run_k_sweep(const KSweepConfig& config, const SweepProgress& progress = {});

}  // namespace airtime::synth
