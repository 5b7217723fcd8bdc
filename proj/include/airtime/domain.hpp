#pragma once

// Core data model: telemetry snapshots, loads, RSSI and AP adjacency.

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "airtime/error.hpp"

namespace airtime {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Timestamp = std::chrono::sys_seconds;

/// Minimum RSSI an AP reports; also the fill value for pairs that were never measured.
inline constexpr double kMissingRssiDbm = -100.0;
inline constexpr double kMaxRssiDbm = 0.0;
/// Canonical clear-channel-assessment threshold.
inline constexpr double kCcaThresholdDbm = -82.0;
/// Energy-detection threshold, the upper end of the threshold sweep.
inline constexpr double kEnergyDetectThresholdDbm = -62.0;
inline constexpr double kMinThresholdDbm = -100.0;
inline constexpr double kMaxThresholdDbm = -40.0;

/// One 10-minute snapshot of a network.
///
/// `rssi(a, b)` is the average RSSI of AP b as heard at AP a. The diagonal is
/// never read.
struct TelemetrySample {
  std::string network_id;
  Timestamp timestamp{};
  std::vector<std::string> ap_ids;
  Vector tx_time;
  Vector rx_time;
  Vector interference;
  Matrix rssi;

  std::size_t ap_count() const noexcept { return ap_ids.size(); }

  /// Throws Error(InvalidArgument) if any dimension or range invariant is broken.
  void validate() const;
};

struct LoadVector {
  Vector loads;

  std::size_t size() const noexcept { return static_cast<std::size_t>(loads.size()); }
  double operator[](std::size_t a) const { return loads(static_cast<Eigen::Index>(a)); }
};

/// Symmetric AP neighbor relation without self-loops.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::size_t n);

  /// Builds from a 0/1 matrix; throws unless symmetric with a zero diagonal.
  static Topology from_matrix(const Matrix& adjacency);
  static Topology from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const noexcept { return n_; }
  bool connected(std::size_t a, std::size_t b) const { return bits_[a * n_ + b] != 0; }
  void connect(std::size_t a, std::size_t b);

  std::vector<std::size_t> neighbors(std::size_t a) const;
  std::size_t degree(std::size_t a) const;
  std::size_t edge_count() const;
  Matrix to_matrix() const;

  bool operator==(const Topology&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> bits_;
};

/// Model input/target pair shared by synthetic and telemetry-derived data.
///
/// Column 0 of `features` is the load; an optional one-hot node-ID block
/// follows. Rows past `real_nodes` are padding and carry no signal.
struct LabeledSample {
  Matrix features;
  Topology topology;
  std::optional<Matrix> rssi;
  Vector labels;
  std::size_t real_nodes = 0;
  std::string network_id;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  Vector loads() const { return features.col(0); }
  /// 1 for real nodes, 0 for padding.
  Vector mask() const;
};

enum class DatasetRole { Train, Validation, Test };

const char* to_string(DatasetRole role) noexcept;

struct Dataset {
  std::vector<LabeledSample> samples;
  DatasetRole role = DatasetRole::Train;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// l_a = min(1, tx_a + rx_a).
LoadVector load_from_telemetry(const TelemetrySample& sample);

/// Mean of the two directions; a sentinel paired with a measured value yields the measured value.
Matrix symmetrize_rssi(const Matrix& directed);

/// a ~ b iff a != b and rssi(a, b) >= threshold.
Topology derive_adjacency(const Matrix& symmetric_rssi, double threshold_dbm = kCcaThresholdDbm);

/// Per-pair fraction of samples in which the pair are neighbors.
Matrix neighborhood_probability(std::span<const TelemetrySample> samples,
                                double threshold_dbm = kCcaThresholdDbm);

/// True if any real node's groundtruth interference reaches the threshold.
bool is_high_load(const LabeledSample& sample, double threshold = 0.10);

Dataset high_load_filter(const Dataset& dataset, double threshold = 0.10);

/// Telemetry snapshot -> labeled sample (load feature, CCA adjacency, symmetrized RSSI, measured interference).
LabeledSample labeled_from_telemetry(const TelemetrySample& sample,
                                     double threshold_dbm = kCcaThresholdDbm);

}  // namespace airtime
