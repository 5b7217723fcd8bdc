#include "airtime/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace airtime {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::EmptyDataset: return "empty_dataset";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Version: return "version";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

const char* to_string(DatasetRole role) noexcept {
  switch (role) {
    case DatasetRole::Train: return "train";
    case DatasetRole::Validation: return "val";
    case DatasetRole::Test: return "test";
  }
  return "unknown";
}

namespace {

bool is_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void check_fractions(const Vector& v, std::size_t n, const char* name) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw Error(ErrorKind::ShapeMismatch, std::string(name) + " has wrong length");
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!is_fraction(v(i))) {
      std::ostringstream os;
      os << name << "[" << i << "] = " << v(i) << " is not an airtime fraction in [0,1]";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
  }
}

bool is_sentinel(double dbm) { return dbm <= kMissingRssiDbm; }

}  // namespace

void TelemetrySample::validate() const {
  const std::size_t n = ap_count();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "telemetry sample has no APs");
  check_fractions(tx_time, n, "tx_time");
  check_fractions(rx_time, n, "rx_time");
  check_fractions(interference, n, "interference");
  if (static_cast<std::size_t>(rssi.rows()) != n || static_cast<std::size_t>(rssi.cols()) != n) {
    throw Error(ErrorKind::ShapeMismatch, "rssi matrix must be n x n");
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const double v = rssi(a, b);
      if (!std::isfinite(v) || v < kMissingRssiDbm || v > kMaxRssiDbm) {
        std::ostringstream os;
        os << "rssi(" << a << "," << b << ") = " << v << " dBm outside [-100, 0]";
        throw Error(ErrorKind::InvalidArgument, os.str());
      }
    }
  }
}

Topology::Topology(std::size_t n) : n_(n), bits_(n * n, 0) {}

Topology Topology::from_matrix(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "adjacency must be square");
  }
  Topology topo(static_cast<std::size_t>(adjacency.rows()));
  for (std::size_t a = 0; a < topo.n_; ++a) {
    if (adjacency(a, a) != 0.0) throw Error(ErrorKind::InvalidArgument, "adjacency has a self-loop");
    for (std::size_t b = 0; b < topo.n_; ++b) {
      const bool ab = adjacency(a, b) != 0.0;
      if (ab != (adjacency(b, a) != 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "adjacency is not symmetric");
      }
      topo.bits_[a * topo.n_ + b] = ab ? 1 : 0;
    }
  }
  return topo;
}

Topology Topology::from_edges(std::size_t n,
                              std::span<const std::pair<std::size_t, std::size_t>> edges) {
  Topology topo(n);
  for (auto [a, b] : edges) topo.connect(a, b);
  return topo;
}

void Topology::connect(std::size_t a, std::size_t b) {
  if (a >= n_ || b >= n_) throw Error(ErrorKind::InvalidArgument, "node index out of range");
  if (a == b) throw Error(ErrorKind::InvalidArgument, "self-loops are not allowed");
  bits_[a * n_ + b] = 1;
  bits_[b * n_ + a] = 1;
}

std::vector<std::size_t> Topology::neighbors(std::size_t a) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n_; ++b) {
    if (bits_[a * n_ + b]) out.push_back(b);
  }
  return out;
}

std::size_t Topology::degree(std::size_t a) const {
  return static_cast<std::size_t>(
      std::count(bits_.begin() + static_cast<std::ptrdiff_t>(a * n_),
                 bits_.begin() + static_cast<std::ptrdiff_t>((a + 1) * n_), 1));
}

std::size_t Topology::edge_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)) / 2;
}

Matrix Topology::to_matrix() const {
  Matrix m(n_, n_);
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t b = 0; b < n_; ++b) m(a, b) = bits_[a * n_ + b];
  }
  return m;
}

Vector LabeledSample::mask() const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(size()));
  m.head(static_cast<Eigen::Index>(real_nodes)).setOnes();
  return m;
}

LoadVector load_from_telemetry(const TelemetrySample& sample) {
  return LoadVector{(sample.tx_time + sample.rx_time).cwiseMin(1.0)};
}

Matrix symmetrize_rssi(const Matrix& directed) {
  if (directed.rows() != directed.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "rssi matrix must be square");
  }
  const Eigen::Index n = directed.rows();
  Matrix out = Matrix::Constant(n, n, kMissingRssiDbm);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double ab = directed(a, b);
      const double ba = directed(b, a);
      double v;
      if (is_sentinel(ab) && is_sentinel(ba)) {
        v = kMissingRssiDbm;
      } else if (is_sentinel(ab)) {
        v = ba;
      } else if (is_sentinel(ba)) {
        v = ab;
      } else {
        v = 0.5 * (ab + ba);
      }
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

Topology derive_adjacency(const Matrix& symmetric_rssi, double threshold_dbm) {
  if (symmetric_rssi.rows() != symmetric_rssi.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "rssi matrix must be square");
  }
  if (!(threshold_dbm >= kMinThresholdDbm && threshold_dbm <= kMaxThresholdDbm)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in [-100, -40] dBm");
  }
  const auto n = static_cast<std::size_t>(symmetric_rssi.rows());
  Topology topo(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (symmetric_rssi(a, b) != symmetric_rssi(b, a)) {
        throw Error(ErrorKind::InvalidArgument, "rssi matrix is not symmetric");
      }
      if (symmetric_rssi(a, b) >= threshold_dbm) topo.connect(a, b);
    }
  }
  return topo;
}

Matrix neighborhood_probability(std::span<const TelemetrySample> samples, double threshold_dbm) {
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "empty dataset");
  const std::size_t n = samples.front().ap_count();
  Matrix counts = Matrix::Zero(n, n);
  for (const auto& s : samples) {
    if (s.ap_count() != n) {
      throw Error(ErrorKind::ShapeMismatch, "samples disagree on AP count");
    }
    counts += derive_adjacency(symmetrize_rssi(s.rssi), threshold_dbm).to_matrix();
  }
  return counts / static_cast<double>(samples.size());
}

bool is_high_load(const LabeledSample& sample, double threshold) {
  const auto real = static_cast<Eigen::Index>(sample.real_nodes);
  for (Eigen::Index a = 0; a < real; ++a) {
    if (sample.labels(a) >= threshold) return true;
  }
  return false;
}

Dataset high_load_filter(const Dataset& dataset, double threshold) {
  Dataset out;
  out.role = dataset.role;
  for (const auto& s : dataset.samples) {
    if (is_high_load(s, threshold)) out.samples.push_back(s);
  }
  return out;
}

LabeledSample labeled_from_telemetry(const TelemetrySample& sample, double threshold_dbm) {
  LabeledSample out;
  const auto n = static_cast<Eigen::Index>(sample.ap_count());
  out.features = Matrix(n, 1);
  out.features.col(0) = load_from_telemetry(sample).loads;
  out.rssi = symmetrize_rssi(sample.rssi);
  out.topology = derive_adjacency(*out.rssi, threshold_dbm);
  out.labels = sample.interference;
  out.real_nodes = sample.ap_count();
  out.network_id = sample.network_id;
  return out;
}

}  // namespace airtime
