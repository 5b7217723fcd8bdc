#pragma once

// Synthetic benchmark: Erdos-Renyi topologies, uniform loads, simple-sum and
// single-failure labels, and the k-fixed-training-topologies experiment.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "airtime/domain.hpp"

namespace airtime::synth {

using Rng = std::mt19937_64;

inline constexpr double kMinLoad = 0.01;
inline constexpr double kMaxLoad = 1.0;

enum class LabelKind { SimpleSum, SingleFailure };

const char* to_string(LabelKind kind) noexcept;
LabelKind parse_label_kind(std::string_view name);

struct SynthConfig {
  std::size_t n = 10;
  double p = 0.2;
  std::size_t k = 1;
  std::size_t train_size = 6000;
  std::size_t val_size = 2000;
  LabelKind label_kind = LabelKind::SimpleSum;
  std::size_t failure_index = 0;
  bool node_ids = false;
  std::uint64_t seed = 0;

  void validate() const;
};

Topology gen_erdos_renyi(std::size_t n, double p, Rng& rng);

/// i.i.d. uniform reals on [0.01, 1].
Vector gen_loads(std::size_t n, Rng& rng);

/// label_a = sum of neighbor loads, unclipped.
Vector label_simple_sum(const Vector& loads, const Topology& topo);

/// Simple-sum labels with label[failure_index] forced to 0. The failed node
/// still contributes its load to its neighbors' sums.
Vector label_single_failure(const Vector& loads, const Topology& topo, std::size_t failure_index);

/// Appends a max_n-wide one-hot node-ID block to an n x 1 load column.
Matrix augment_node_ids(const Matrix& features, std::size_t max_n);

/// Builds a labeled sample from loads and a topology per `config`.
LabeledSample make_sample(const Vector& loads, const Topology& topo, const SynthConfig& config);

struct KTopologyExperiment {
  Dataset train;
  Dataset val;
  std::vector<Topology> fixed_topologies;
};

/// Draws k topologies once; training samples pick one uniformly with fresh
/// loads, validation samples draw a fresh G(n, p) each.
KTopologyExperiment build_k_topology_experiment(const SynthConfig& config, Rng& rng);

/// Kernel-ablation benchmark: every sample carries a surrogate symmetric RSSI
/// matrix with edges in (-82, -72] dBm and non-edges in [-92, -82) dBm.
void attach_noisy_rssi(Dataset& dataset, Rng& rng, double threshold_dbm = kCcaThresholdDbm,
                       double jitter_db = 10.0);

/// Synthetic telemetry for end-to-end runs of the CSV pipeline.
struct TelemetrySimConfig {
  std::string network_id = "synthetic";
  std::size_t ap_count = 10;
  std::size_t samples = 100;
  double neighbor_probability = 0.2;
  /// Probability that a directed RSSI entry was never reported.
  double missing_probability = 0.05;
  Timestamp start{};
  std::uint64_t seed = 0;
};

/// Each snapshot draws RSSI around a fixed AP layout (with per-snapshot
/// jitter), tx/rx loads, and interference from the uniform-superposition
/// model plus small noise, clipped to [0, 1].
std::vector<TelemetrySample> simulate_telemetry(const TelemetrySimConfig& config);

}  // namespace airtime::synth
