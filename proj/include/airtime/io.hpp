#pragma once

// File formats: telemetry/RSSI CSV ingestion, dataset and checkpoint JSON,
// CSV/JSON reports, and what-if scenarios.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "airtime/baselines.hpp"
#include "airtime/domain.hpp"
#include "airtime/k_sweep.hpp"
#include "airtime/models.hpp"
#include "airtime/train_eval.hpp"

namespace airtime::io {

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kDatasetVersion = 1;

inline constexpr const char* kTelemetryHeader = "network_id,timestamp,ap_id,tx_time,rx_time,interference";
inline constexpr const char* kRssiHeader = "network_id,timestamp,src_ap,dst_ap,rssi_dbm";

/// ISO-8601 UTC, "YYYY-MM-DDTHH:MM:SSZ".
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

/// Shortest round-trip decimal for a double (at most 17 significant digits).
std::string format_double(double v);

/// Collects telemetry and RSSI rows and assembles validated snapshots.
///
/// Snapshots are keyed by (network_id, timestamp). The AP set of a snapshot is
/// the set of telemetry rows for that key, ordered by first appearance of each
/// AP id in its network. An RSSI row stores the level of `src_ap` as heard at
/// `dst_ap`; unreported pairs get the -100 dBm sentinel.
class TelemetryReader {
 public:
  void add_telemetry(std::istream& in, const std::string& source);
  void add_rssi(std::istream& in, const std::string& source);
  /// Throws Error(Parse) with "source:line: message" for the first bad RSSI row.
  std::vector<TelemetrySample> finish() const;

 private:
  struct ApRow {
    double tx, rx, interference;
  };
  struct RssiRow {
    std::string src, dst;
    double dbm;
    std::string where;
  };
  struct Snapshot {
    std::map<std::string, ApRow> aps;
    std::vector<RssiRow> rssi;
  };
  using Key = std::pair<std::string, Timestamp>;
  std::map<Key, Snapshot> snapshots_;
  std::map<std::string, std::vector<std::string>> ap_order_;
};

std::vector<TelemetrySample> parse_telemetry(const std::vector<std::filesystem::path>& telemetry_files,
                                             const std::vector<std::filesystem::path>& rssi_files);

void write_telemetry_csv(std::ostream& telemetry, std::ostream& rssi,
                         const std::vector<TelemetrySample>& samples);

// ---------------------------------------------------------------------------
// Datasets

std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const std::string& text);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMetadata {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string source_network_id;
};

struct Checkpoint {
  std::unique_ptr<models::Model> model;
  CheckpointMetadata metadata;
};

std::string checkpoint_to_json(const models::Model& model, const CheckpointMetadata& metadata);
/// Throws Error(Version) when format_version differs from kCheckpointVersion.
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const models::Model& model,
                     const CheckpointMetadata& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over a canonical text rendering of the training configuration.
std::string config_digest(const train::TrainConfig& config);

// ---------------------------------------------------------------------------
// Reports

std::string metrics_to_json(const train::MetricsReport& report);
void write_node_errors_csv(std::ostream& out, const std::vector<train::NodeError>& errors);
void write_loss_history_csv(std::ostream& out, const train::TrainResult& result);
void write_k_sweep_csv(std::ostream& out, const std::vector<synth::KSweepRow>& rows);
void write_threshold_sweep_csv(std::ostream& out, const std::vector<baselines::SweepRow>& rows);
void write_heatmap_csv(std::ostream& out, const train::Heatmap& map);

// ---------------------------------------------------------------------------
// What-if scenarios

struct Scenario {
  std::string network_id;
  std::vector<std::string> ap_ids;
  Vector loads;
  Topology topology;
  std::optional<Matrix> rssi;  // symmetrized
};

/// JSON with "loads" and either "rssi" (dBm, directed or symmetric) or "adjacency";
/// optional "ap_ids", "network_id", "threshold_dbm" (default -82).
Scenario scenario_from_json(const std::string& text);

struct WhatIfResult {
  std::vector<std::string> ap_ids;
  Vector model;
  Vector simple_sum;
  Vector uniform_superposition;
};

WhatIfResult whatif_predict(const Checkpoint& checkpoint, const Scenario& scenario);
void write_whatif_csv(std::ostream& out, const WhatIfResult& result);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace airtime::io
