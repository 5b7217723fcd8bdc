#include "airtime/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace airtime::io {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& where, const std::string& message) {
  throw Error(ErrorKind::Parse, where + ": " + message);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_number(const std::string& text, const std::string& where, const char* column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(v)) {
    parse_error(where, std::string("invalid number in column ") + column + ": '" + text + "'");
  }
  return v;
}

double parse_fraction(const std::string& text, const std::string& where, const char* column) {
  const double v = parse_number(text, where, column);
  if (v < 0.0 || v > 1.0) {
    parse_error(where, std::string("out-of-range ") + column + " " + text + " (expected [0,1])");
  }
  return v;
}

std::string location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

/// Yields (line number, fields) for each non-empty data row after checking the header.
template <typename Fn>
void for_each_row(std::istream& in, const std::string& source, const char* header,
                  std::size_t fields, Fn&& fn) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != header) {
    parse_error(location(source, 1), std::string("expected header '") + header + "'");
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cols = split_csv(line);
    if (cols.size() != fields) {
      parse_error(location(source, number), "expected " + std::to_string(fields) + " fields, got " +
                                                std::to_string(cols.size()));
    }
    fn(number, cols);
  }
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorKind::Parse, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

template <typename Fn>
auto wrap_json(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Timestamps and numbers

Timestamp parse_timestamp(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c%n", &y, &mo, &d, &h, &mi, &s, &tail, &consumed) != 7 ||
      tail != 'Z' || static_cast<std::size_t>(consumed) != text.size()) {
    throw Error(ErrorKind::Parse, "invalid timestamp '" + text + "' (expected YYYY-MM-DDTHH:MM:SSZ)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorKind::Parse, "invalid timestamp '" + text + "'");
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss<std::chrono::seconds> tod{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Telemetry

void TelemetryReader::add_telemetry(std::istream& in, const std::string& source) {
  for_each_row(in, source, kTelemetryHeader, 6, [&](std::size_t line, const std::vector<std::string>& c) {
    const std::string where = location(source, line);
    Timestamp ts{};
    try {
      ts = parse_timestamp(c[1]);
    } catch (const Error& e) {
      parse_error(where, e.what());
    }
    if (c[0].empty() || c[2].empty()) parse_error(where, "empty network_id or ap_id");
    const ApRow row{parse_fraction(c[3], where, "tx_time"), parse_fraction(c[4], where, "rx_time"),
                    parse_fraction(c[5], where, "interference")};
    Snapshot& snap = snapshots_[{c[0], ts}];
    if (!snap.aps.emplace(c[2], row).second) {
      parse_error(where, "duplicate row for timestamp " + c[1] + " and ap " + c[2]);
    }
    auto& order = ap_order_[c[0]];
    if (std::find(order.begin(), order.end(), c[2]) == order.end()) order.push_back(c[2]);
  });
}

void TelemetryReader::add_rssi(std::istream& in, const std::string& source) {
  for_each_row(in, source, kRssiHeader, 5, [&](std::size_t line, const std::vector<std::string>& c) {
    const std::string where = location(source, line);
    Timestamp ts{};
    try {
      ts = parse_timestamp(c[1]);
    } catch (const Error& e) {
      parse_error(where, e.what());
    }
    const double dbm = parse_number(c[4], where, "rssi_dbm");
    if (dbm < kMissingRssiDbm || dbm > kMaxRssiDbm) {
      parse_error(where, "out-of-range rssi_dbm " + c[4] + " (expected [-100, 0])");
    }
    if (c[2] == c[3]) parse_error(where, "src_ap and dst_ap are the same AP");
    snapshots_[{c[0], ts}].rssi.push_back({c[2], c[3], dbm, where});
  });
}

std::vector<TelemetrySample> TelemetryReader::finish() const {
  std::vector<TelemetrySample> out;
  for (const auto& [key, snap] : snapshots_) {
    TelemetrySample s;
    s.network_id = key.first;
    s.timestamp = key.second;
    std::map<std::string, Eigen::Index> index;
    if (const auto order = ap_order_.find(key.first); order != ap_order_.end()) {
      for (const auto& ap : order->second) {
        if (snap.aps.count(ap)) {
          index[ap] = static_cast<Eigen::Index>(s.ap_ids.size());
          s.ap_ids.push_back(ap);
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(s.ap_ids.size());
    if (n == 0) {
      const auto& first = snap.rssi.front();
      parse_error(first.where, "unknown AP id '" + first.src + "' (no telemetry rows for this snapshot)");
    }
    s.tx_time.resize(n);
    s.rx_time.resize(n);
    s.interference.resize(n);
    for (const auto& [ap, row] : snap.aps) {
      const Eigen::Index a = index.at(ap);
      s.tx_time(a) = row.tx;
      s.rx_time(a) = row.rx;
      s.interference(a) = row.interference;
    }
    s.rssi = Matrix::Constant(n, n, kMissingRssiDbm);
    std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
    for (const auto& r : snap.rssi) {
      const auto src = index.find(r.src);
      const auto dst = index.find(r.dst);
      if (src == index.end()) parse_error(r.where, "unknown AP id '" + r.src + "'");
      if (dst == index.end()) parse_error(r.where, "unknown AP id '" + r.dst + "'");
      if (!seen.emplace(dst->second, src->second).second) {
        parse_error(r.where, "duplicate rssi row for " + r.src + " -> " + r.dst);
      }
      s.rssi(dst->second, src->second) = r.dbm;
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TelemetrySample> parse_telemetry(const std::vector<std::filesystem::path>& telemetry_files,
                                             const std::vector<std::filesystem::path>& rssi_files) {
  TelemetryReader reader;
  for (const auto& p : telemetry_files) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
    reader.add_telemetry(in, p.string());
  }
  for (const auto& p : rssi_files) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
    reader.add_rssi(in, p.string());
  }
  return reader.finish();
}

void write_telemetry_csv(std::ostream& telemetry, std::ostream& rssi,
                         const std::vector<TelemetrySample>& samples) {
  telemetry << kTelemetryHeader << '\n';
  rssi << kRssiHeader << '\n';
  for (const auto& s : samples) {
    const std::string ts = format_timestamp(s.timestamp);
    const auto n = static_cast<Eigen::Index>(s.ap_count());
    for (Eigen::Index a = 0; a < n; ++a) {
      telemetry << s.network_id << ',' << ts << ',' << s.ap_ids[static_cast<std::size_t>(a)] << ','
                << format_double(s.tx_time(a)) << ',' << format_double(s.rx_time(a)) << ','
                << format_double(s.interference(a)) << '\n';
    }
    for (Eigen::Index dst = 0; dst < n; ++dst) {
      for (Eigen::Index src = 0; src < n; ++src) {
        if (src == dst || s.rssi(dst, src) <= kMissingRssiDbm) continue;
        rssi << s.network_id << ',' << ts << ',' << s.ap_ids[static_cast<std::size_t>(src)] << ','
             << s.ap_ids[static_cast<std::size_t>(dst)] << ',' << format_double(s.rssi(dst, src)) << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

DatasetRole parse_role(const std::string& s) {
  if (s == "train") return DatasetRole::Train;
  if (s == "val") return DatasetRole::Validation;
  if (s == "test") return DatasetRole::Test;
  throw Error(ErrorKind::Parse, "unknown dataset role '" + s + "'");
}

}  // namespace

std::string dataset_to_json(const Dataset& dataset) {
  json j;
  j["format_version"] = kDatasetVersion;
  j["role"] = to_string(dataset.role);
  json samples = json::array();
  for (const auto& s : dataset.samples) {
    json js;
    js["network_id"] = s.network_id;
    js["n"] = s.size();
    js["real_nodes"] = s.real_nodes;
    js["features"] = matrix_to_json(s.features);
    json edges = json::array();
    for (std::size_t a = 0; a < s.topology.size(); ++a) {
      for (std::size_t b = a + 1; b < s.topology.size(); ++b) {
        if (s.topology.connected(a, b)) edges.push_back({a, b});
      }
    }
    js["edges"] = std::move(edges);
    js["rssi"] = s.rssi ? matrix_to_json(*s.rssi) : json(nullptr);
    js["labels"] = vector_to_json(s.labels);
    samples.push_back(std::move(js));
  }
  j["samples"] = std::move(samples);
  return j.dump() + "\n";
}

Dataset dataset_from_json(const std::string& text) {
  return wrap_json([&] {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kDatasetVersion) {
      throw Error(ErrorKind::Version, "unsupported dataset format_version " +
                                          std::to_string(j.at("format_version").get<int>()));
    }
    Dataset d;
    d.role = parse_role(j.at("role").get<std::string>());
    for (const auto& js : j.at("samples")) {
      LabeledSample s;
      s.network_id = js.at("network_id").get<std::string>();
      const auto n = js.at("n").get<std::size_t>();
      s.real_nodes = js.at("real_nodes").get<std::size_t>();
      s.features = matrix_from_json(js.at("features"));
      s.topology = Topology(n);
      for (const auto& e : js.at("edges")) s.topology.connect(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
      if (!js.at("rssi").is_null()) s.rssi = matrix_from_json(js.at("rssi"));
      s.labels = vector_from_json(js.at("labels"));
      if (s.size() != n || static_cast<std::size_t>(s.labels.size()) != n || s.real_nodes > n) {
        throw Error(ErrorKind::Parse, "dataset sample dimensions are inconsistent");
      }
      d.samples.push_back(std::move(s));
    }
    return d;
  });
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_file(path, dataset_to_json(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Checkpoints

std::string checkpoint_to_json(const models::Model& model, const CheckpointMetadata& metadata) {
  const auto& spec = model.spec();
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = models::to_string(spec.kind);
  j["architecture"] = {{"max_n", spec.max_n},
                       {"node_ids", spec.node_ids},
                       {"kernel_count", spec.kernel_count},
                       {"hidden", spec.hidden},
                       {"dropout", spec.dropout}};
  json params = json::array();
  const auto& names = model.parameter_names();
  const auto& values = model.parameters();
  for (std::size_t i = 0; i < values.size(); ++i) {
    params.push_back({{"name", names[i]},
                      {"rows", values[i].rows()},
                      {"cols", values[i].cols()},
                      {"data", matrix_to_json(values[i].value())}});
  }
  j["parameters"] = std::move(params);
  j["metadata"] = {{"seed", metadata.seed},
                   {"config_digest", metadata.config_digest},
                   {"source_network_id", metadata.source_network_id}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  return wrap_json([&] {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::Version, "checkpoint format_version " + std::to_string(version) +
                                          " is not supported (reader version " +
                                          std::to_string(kCheckpointVersion) + ")");
    }
    models::ModelSpec spec;
    spec.kind = models::parse_model_kind(j.at("kind").get<std::string>());
    const auto& arch = j.at("architecture");
    spec.max_n = arch.at("max_n").get<std::size_t>();
    spec.node_ids = arch.at("node_ids").get<bool>();
    spec.kernel_count = arch.at("kernel_count").get<std::size_t>();
    spec.hidden = arch.at("hidden").get<std::vector<std::size_t>>();
    spec.dropout = arch.at("dropout").get<double>();

    ad::Rng unused(0);
    Checkpoint cp;
    cp.model = models::make_model(spec, unused);
    const auto& params = j.at("parameters");
    const auto& names = cp.model->parameter_names();
    if (params.size() != names.size()) {
      throw Error(ErrorKind::Parse, "checkpoint has " + std::to_string(params.size()) +
                                        " parameters, architecture needs " + std::to_string(names.size()));
    }
    std::vector<Matrix> values;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].at("name").get<std::string>() != names[i]) {
        throw Error(ErrorKind::Parse, "unexpected parameter '" + params[i].at("name").get<std::string>() + "'");
      }
      values.push_back(matrix_from_json(params[i].at("data")));
    }
    cp.model->restore(values);
    const auto& meta = j.at("metadata");
    cp.metadata.seed = meta.at("seed").get<std::uint64_t>();
    cp.metadata.config_digest = meta.at("config_digest").get<std::string>();
    cp.metadata.source_network_id = meta.at("source_network_id").get<std::string>();
    return cp;
  });
}

void save_checkpoint(const std::filesystem::path& path, const models::Model& model,
                     const CheckpointMetadata& metadata) {
  write_file(path, checkpoint_to_json(model, metadata));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

std::string config_digest(const train::TrainConfig& c) {
  std::ostringstream os;
  os << "epochs=" << c.epochs << ";batch=" << c.batch_size << ";opt="
     << (c.optimizer.kind == ad::OptimizerConfig::Kind::Adam ? "adam" : "sgd")
     << ";lr=" << format_double(c.optimizer.learning_rate) << ";b1=" << format_double(c.optimizer.beta1)
     << ";b2=" << format_double(c.optimizer.beta2) << ";eps=" << format_double(c.optimizer.epsilon)
     << ";seed=" << c.seed << ";oversample=" << c.oversample_factor
     << ";threshold=" << format_double(c.high_load_threshold) << ";patience=" << c.patience;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Reports

std::string metrics_to_json(const train::MetricsReport& r) {
  json j;
  j["mae"] = r.mae;
  j["mse"] = r.mse;
  j["abs_error_percentiles"] = {{"p5", r.abs_error_percentiles[0]},
                                {"p25", r.abs_error_percentiles[1]},
                                {"p50", r.abs_error_percentiles[2]},
                                {"p75", r.abs_error_percentiles[3]},
                                {"p95", r.abs_error_percentiles[4]}};
  j["node_count"] = r.node_count;
  j["sample_count"] = r.sample_count;
  return j.dump(2) + "\n";
}

void write_node_errors_csv(std::ostream& out, const std::vector<train::NodeError>& errors) {
  out << "sample,node,prediction,label,abs_error\n";
  for (const auto& e : errors) {
    out << e.sample << ',' << e.node << ',' << format_double(e.prediction) << ','
        << format_double(e.label) << ',' << format_double(e.abs_error) << '\n';
  }
}

void write_loss_history_csv(std::ostream& out, const train::TrainResult& result) {
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    out << e << ',' << format_double(result.train_loss[e]) << ',' << format_double(result.val_loss[e]) << '\n';
  }
}

void write_k_sweep_csv(std::ostream& out, const std::vector<synth::KSweepRow>& rows) {
  out << "k,repetitions,mean_mse,std_mse,mean_failure_mse,std_failure_mse\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.repetition_mse.size() << ',' << format_double(r.mean_mse) << ','
        << format_double(r.std_mse) << ',' << format_double(r.mean_failure_mse) << ','
        << format_double(r.std_failure_mse) << '\n';
  }
}

void write_threshold_sweep_csv(std::ostream& out, const std::vector<baselines::SweepRow>& rows) {
  out << "threshold_dbm,count,p5,p25,p50,p75,p95\n";
  for (const auto& r : rows) {
    out << format_double(r.threshold_dbm) << ',' << r.count;
    for (double p : r.percentiles) out << ',' << format_double(p);
    out << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, const train::Heatmap& map) {
  out << "ap_id,hour,count,defined,r,p_value\n";
  for (Eigen::Index a = 0; a < map.r.rows(); ++a) {
    for (Eigen::Index h = 0; h < map.r.cols(); ++h) {
      out << map.ap_ids[static_cast<std::size_t>(a)] << ',' << h << ',' << map.count(a, h) << ','
          << (map.defined(a, h) ? 1 : 0) << ',';
      if (map.defined(a, h)) {
        out << format_double(map.r(a, h)) << ',' << format_double(map.p_value(a, h));
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Scenarios

Scenario scenario_from_json(const std::string& text) {
  return wrap_json([&] {
    const json j = json::parse(text);
    Scenario s;
    s.network_id = j.value("network_id", std::string{});
    s.loads = vector_from_json(j.at("loads"));
    const auto n = static_cast<std::size_t>(s.loads.size());
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "scenario has no APs");
    for (Eigen::Index a = 0; a < s.loads.size(); ++a) {
      if (!(s.loads(a) >= 0.0 && s.loads(a) <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "scenario load outside [0,1]");
      }
    }
    if (j.contains("ap_ids")) {
      s.ap_ids = j.at("ap_ids").get<std::vector<std::string>>();
      if (s.ap_ids.size() != n) throw Error(ErrorKind::ShapeMismatch, "ap_ids length differs from loads");
    } else {
      for (std::size_t a = 0; a < n; ++a) s.ap_ids.push_back("ap" + std::to_string(a));
    }
    const double threshold = j.value("threshold_dbm", kCcaThresholdDbm);
    if (j.contains("rssi")) {
      const Matrix directed = matrix_from_json(j.at("rssi"));
      if (static_cast<std::size_t>(directed.rows()) != n || static_cast<std::size_t>(directed.cols()) != n) {
        throw Error(ErrorKind::ShapeMismatch, "rssi must be n x n");
      }
      s.rssi = symmetrize_rssi(directed);
      s.topology = derive_adjacency(*s.rssi, threshold);
    } else if (j.contains("adjacency")) {
      const Matrix adj = matrix_from_json(j.at("adjacency"));
      if (static_cast<std::size_t>(adj.rows()) != n || static_cast<std::size_t>(adj.cols()) != n) {
        throw Error(ErrorKind::ShapeMismatch, "adjacency must be n x n");
      }
      s.topology = Topology::from_matrix(adj);
    } else {
      throw Error(ErrorKind::InvalidArgument, "scenario needs 'rssi' or 'adjacency'");
    }
    return s;
  });
}

WhatIfResult whatif_predict(const Checkpoint& checkpoint, const Scenario& scenario) {
  const models::Model& model = *checkpoint.model;
  const std::size_t n = scenario.ap_ids.size();
  if (n > model.max_n()) throw Error(ErrorKind::Capacity, "network exceeds model capacity");
  LabeledSample sample;
  sample.features = Matrix(static_cast<Eigen::Index>(n), 1);
  sample.features.col(0) = scenario.loads;
  if (model.spec().node_ids) {
    sample.features = Matrix::Zero(static_cast<Eigen::Index>(n), 1 + static_cast<Eigen::Index>(model.max_n()));
    sample.features.col(0) = scenario.loads;
    if (scenario.network_id == checkpoint.metadata.source_network_id) {
      for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(n); ++a) sample.features(a, 1 + a) = 1.0;
    }
  }
  sample.topology = scenario.topology;
  sample.rssi = scenario.rssi;
  sample.labels = Vector::Zero(static_cast<Eigen::Index>(n));
  sample.real_nodes = n;
  sample.network_id = scenario.network_id;

  WhatIfResult out;
  out.ap_ids = scenario.ap_ids;
  out.model = model.predict(models::pad_inputs(sample, model.max_n()));
  const LoadVector loads{scenario.loads};
  out.simple_sum = baselines::simple_sum(loads, scenario.topology).estimates;
  out.uniform_superposition = baselines::uniform_superposition(loads, scenario.topology).estimates;
  return out;
}

void write_whatif_csv(std::ostream& out, const WhatIfResult& r) {
  out << "ap_id,model,simple_sum,uniform_superposition\n";
  for (std::size_t a = 0; a < r.ap_ids.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    out << r.ap_ids[a] << ',' << format_double(r.model(i)) << ',' << format_double(r.simple_sum(i)) << ','
        << format_double(r.uniform_superposition(i)) << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace airtime::io
