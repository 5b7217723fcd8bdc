#pragma once

// Training loop, metrics, and the experiment procedures built on them.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "airtime/autodiff.hpp"
#include "airtime/baselines.hpp"
#include "airtime/domain.hpp"
#include "airtime/models.hpp"

namespace airtime::train {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  ad::OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  std::size_t oversample_factor = 10;
  double high_load_threshold = 0.10;
  /// Epochs without validation improvement before stopping; 0 disables early stop.
  std::size_t patience = 10;

  void validate() const;
};

struct TrainResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Samples strictly before `boundary` go to the first set, the rest to the second.
std::pair<Dataset, Dataset> split_by_time(std::span<const TelemetrySample> samples, Timestamp boundary,
                                          double threshold_dbm = kCcaThresholdDbm);

/// High-load samples appear `factor` times, others once; order shuffled by `seed`.
Dataset oversample_high_load(const Dataset& dataset, std::size_t factor, double threshold,
                             std::uint64_t seed);

/// Minimizes masked MSE with seeded shuffling; restores the best-validation
/// weights before returning. Throws Error(Numerical) on a non-finite loss.
TrainResult train(models::Model& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config);

/// Masked MSE of `model` over `dataset` (inference mode).
double validation_mse(const models::Model& model, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Evaluation

/// Per-sample predictions over real nodes.
using Predictor = std::function<std::vector<Vector>(std::span<const LabeledSample* const>)>;

/// Pads inputs to the model's capacity before predicting.
Predictor model_predictor(const models::Model& model);
/// Baseline over column 0 loads and the sample topology.
Predictor baseline_predictor(baselines::EstimatorKind kind);

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  std::array<double, 5> abs_error_percentiles{};  // P5/P25/P50/P75/P95
  std::size_t node_count = 0;
  std::size_t sample_count = 0;
};

struct NodeError {
  std::size_t sample = 0;
  std::size_t node = 0;
  double prediction = 0.0;
  double label = 0.0;
  double abs_error = 0.0;
};

struct Evaluation {
  MetricsReport report;
  std::vector<NodeError> errors;
};

/// Pools absolute errors over every real node of every (optionally high-load) sample.
/// Throws Error(EmptyDataset) if nothing is left to score.
Evaluation evaluate(const Predictor& predictor, const Dataset& dataset, bool high_load_only,
                    double high_load_threshold = 0.10);

/// Evaluates a model on another network: pads to capacity, zeroes node-ID
/// features of samples whose network differs from `source_network_id`, scores
/// high-load samples only.
Evaluation transfer_evaluate(const models::Model& model, const std::string& source_network_id,
                             const Dataset& dataset, double high_load_threshold = 0.10);

// ---------------------------------------------------------------------------
// Correlation heatmap

struct Heatmap {
  std::vector<std::string> ap_ids;
  static constexpr std::size_t kHours = 24;
  Matrix r;        // ap x hour
  Matrix p_value;  // ap x hour
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> count;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

/// Pearson correlation of measured vs estimated interference per (AP, UTC hour).
Heatmap pearson_heatmap(std::span<const TelemetrySample> samples,
                        const baselines::TelemetryEstimator& estimator,
                        double threshold_dbm = kCcaThresholdDbm);

// ---------------------------------------------------------------------------
// Kernel ablation

struct AblationResult {
  double mae_two_kernels = 0.0;
  double mae_three_kernels = 0.0;
  double ratio() const { return mae_two_kernels > 0.0 ? mae_three_kernels / mae_two_kernels : 0.0; }
};

/// Trains two GCNs that differ only in the adjacency kernel and reports their
/// validation MAE. Every sample must carry an RSSI matrix.
AblationResult kernel_ablation(const Dataset& train_set, const Dataset& val_set,
                               const models::ModelSpec& base_spec, const TrainConfig& config);

}  // namespace airtime::train
