#include "airtime/synth.hpp"

#include <algorithm>

#include "airtime/baselines.hpp"

namespace airtime::synth {

const char* to_string(LabelKind kind) noexcept {
  return kind == LabelKind::SimpleSum ? "simple-sum" : "single-failure";
}

LabelKind parse_label_kind(std::string_view name) {
  if (name == "simple-sum") return LabelKind::SimpleSum;
  if (name == "single-failure") return LabelKind::SingleFailure;
  throw Error(ErrorKind::InvalidArgument, "unknown label kind '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in [0,1]");
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if (failure_index >= n) {
    throw Error(ErrorKind::InvalidArgument, "failure_index must be < n");
  }
}

Topology gen_erdos_renyi(std::size_t n, double p, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  std::bernoulli_distribution edge(p);
  Topology topo(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (edge(rng)) topo.connect(a, b);
    }
  }
  return topo;
}

Vector gen_loads(std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  std::uniform_real_distribution<double> u(kMinLoad, kMaxLoad);
  Vector loads(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < loads.size(); ++i) loads(i) = u(rng);
  return loads;
}

Vector label_simple_sum(const Vector& loads, const Topology& topo) {
  return baselines::simple_sum(LoadVector{loads}, topo, /*clip=*/false).estimates;
}

Vector label_single_failure(const Vector& loads, const Topology& topo, std::size_t failure_index) {
  if (failure_index >= topo.size()) throw Error(ErrorKind::InvalidArgument, "failure_index must be < n");
  Vector labels = label_simple_sum(loads, topo);
  labels(static_cast<Eigen::Index>(failure_index)) = 0.0;
  return labels;
}

Matrix augment_node_ids(const Matrix& features, std::size_t max_n) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (n > max_n) throw Error(ErrorKind::Capacity, "network exceeds model capacity");
  Matrix out = Matrix::Zero(features.rows(), 1 + static_cast<Eigen::Index>(max_n));
  out.col(0) = features.col(0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) out(i, 1 + i) = 1.0;
  return out;
}

LabeledSample make_sample(const Vector& loads, const Topology& topo, const SynthConfig& config) {
  LabeledSample s;
  Matrix column = loads;
  s.features = config.node_ids ? augment_node_ids(column, config.n) : column;
  s.topology = topo;
  s.labels = config.label_kind == LabelKind::SimpleSum
                 ? label_simple_sum(loads, topo)
                 : label_single_failure(loads, topo, config.failure_index);
  s.real_nodes = topo.size();
  s.network_id = "synthetic";
  return s;
}

KTopologyExperiment build_k_topology_experiment(const SynthConfig& config, Rng& rng) {
  config.validate();
  KTopologyExperiment exp;
  for (std::size_t i = 0; i < config.k; ++i) {
    exp.fixed_topologies.push_back(gen_erdos_renyi(config.n, config.p, rng));
  }
  std::uniform_int_distribution<std::size_t> pick(0, config.k - 1);
  exp.train.role = DatasetRole::Train;
  exp.train.samples.reserve(config.train_size);
  for (std::size_t i = 0; i < config.train_size; ++i) {
    const Topology& topo = exp.fixed_topologies[pick(rng)];
    exp.train.samples.push_back(make_sample(gen_loads(config.n, rng), topo, config));
  }
  exp.val.role = DatasetRole::Validation;
  exp.val.samples.reserve(config.val_size);
  for (std::size_t i = 0; i < config.val_size; ++i) {
    const Topology topo = gen_erdos_renyi(config.n, config.p, rng);
    exp.val.samples.push_back(make_sample(gen_loads(config.n, rng), topo, config));
  }
  return exp;
}

void attach_noisy_rssi(Dataset& dataset, Rng& rng, double threshold_dbm, double jitter_db) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& s : dataset.samples) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Matrix rssi = Matrix::Constant(n, n, kMissingRssiDbm);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        // Offset in (0, jitter]: non-edges stay strictly below the threshold.
        const double offset = jitter_db * (1.0 - u(rng));
        const bool edge = s.topology.connected(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        const double v = std::clamp(edge ? threshold_dbm + offset : threshold_dbm - offset,
                                    kMissingRssiDbm, kMaxRssiDbm);
        rssi(a, b) = v;
        rssi(b, a) = v;
      }
    }
    s.rssi = std::move(rssi);
  }
}

std::vector<TelemetrySample> simulate_telemetry(const TelemetrySimConfig& config) {
  if (config.ap_count == 0) throw Error(ErrorKind::InvalidArgument, "ap_count must be >= 1");
  Rng rng(config.seed);
  const auto n = static_cast<Eigen::Index>(config.ap_count);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution near(config.neighbor_probability);
  std::normal_distribution<double> noise(0.0, 0.02);

  // Fixed layout: pairs are either within sensing range or not, with a base level each.
  Matrix base(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    base(a, a) = kMissingRssiDbm;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double level = near(rng) ? -78.0 + 23.0 * u(rng) : -100.0 + 12.0 * u(rng);
      base(a, b) = level;
      base(b, a) = level;
    }
  }

  std::vector<std::string> ids;
  for (Eigen::Index a = 0; a < n; ++a) ids.push_back("ap" + std::to_string(a));

  std::vector<TelemetrySample> out;
  out.reserve(config.samples);
  for (std::size_t i = 0; i < config.samples; ++i) {
    TelemetrySample s;
    s.network_id = config.network_id;
    s.timestamp = config.start + std::chrono::minutes(10 * static_cast<long>(i));
    s.ap_ids = ids;
    s.rssi = Matrix::Constant(n, n, kMissingRssiDbm);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        if (a == b || u(rng) < config.missing_probability) continue;
        s.rssi(a, b) = std::clamp(base(a, b) + 6.0 * (u(rng) - 0.5), kMissingRssiDbm, kMaxRssiDbm);
      }
    }
    s.tx_time = Vector(n);
    s.rx_time = Vector(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      s.tx_time(a) = 0.3 * u(rng);
      s.rx_time(a) = 0.3 * u(rng);
    }
    const Topology topo = derive_adjacency(symmetrize_rssi(s.rssi), kCcaThresholdDbm);
    const Vector truth = baselines::uniform_superposition(load_from_telemetry(s), topo).estimates;
    s.interference = Vector(n);
    for (Eigen::Index a = 0; a < n; ++a) s.interference(a) = std::clamp(truth(a) + noise(rng), 0.0, 1.0);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace airtime::synth
