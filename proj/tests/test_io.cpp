#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "airtime/io.hpp"
#include "airtime/synth.hpp"

using namespace airtime;
namespace fs = std::filesystem;

namespace {

const fs::path kCorpus = AIRTIME_TEST_DATA_DIR "/parse";

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("airtime_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset small_dataset(bool ids, bool rssi) {
  synth::SynthConfig c;
  c.k = 2;
  c.train_size = 5;
  c.val_size = 3;
  c.node_ids = ids;
  synth::Rng rng(1);
  auto exp = synth::build_k_topology_experiment(c, rng);
  if (rssi) synth::attach_noisy_rssi(exp.train, rng);
  return exp.train;
}

}  // namespace

TEST_CASE("timestamps round-trip and reject malformed text") {
  const Timestamp t = io::parse_timestamp("2021-03-01T10:20:30Z");
  CHECK(io::format_timestamp(t) == "2021-03-01T10:20:30Z");
  CHECK(io::parse_timestamp("1970-01-01T00:00:00Z").time_since_epoch().count() == 0);
  CHECK_THROWS_AS(io::parse_timestamp("2021-03-01 10:20:30"), Error);
  CHECK_THROWS_AS(io::parse_timestamp("2021-02-30T00:00:00Z"), Error);
  CHECK_THROWS_AS(io::parse_timestamp("2021-03-01T25:00:00Z"), Error);
}

TEST_CASE("doubles print as shortest round-trip decimals") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
}

TEST_CASE("golden corpus: well-formed files parse") {
  const auto samples = io::parse_telemetry({kCorpus / "good_telemetry.csv"}, {kCorpus / "good_rssi.csv"});
  REQUIRE(samples.size() == 2);
  const auto& s0 = samples[0];
  CHECK(s0.ap_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(s0.tx_time(1) == 0.3);
  // "a,b,-70" is a heard at b.
  CHECK(s0.rssi(1, 0) == -70.0);
  CHECK(s0.rssi(0, 1) == -80.0);
  CHECK(s0.rssi(0, 2) == -91.5);
  CHECK(s0.rssi(2, 0) == kMissingRssiDbm);
  CHECK(s0.rssi(1, 2) == kMissingRssiDbm);
  // Second snapshot lists b first in the file but keeps the network's AP order.
  const auto& s1 = samples[1];
  CHECK(s1.ap_ids == std::vector<std::string>{"a", "b"});
  CHECK(s1.tx_time(0) == 1.0);
  CHECK(s1.rssi(1, 0) == -65.0);
}

TEST_CASE("golden corpus: each documented error class is rejected with its line number") {
  std::ifstream cases(kCorpus / "cases.txt");
  std::string line;
  int checked = 0;
  while (std::getline(cases, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto a = line.find('|');
    const auto b = line.find('|', a + 1);
    const std::string file = line.substr(0, a);
    const std::string kind = line.substr(a + 1, b - a - 1);
    const std::string expected = line.substr(b + 1);
    INFO(file);
    try {
      if (kind == "telemetry") {
        io::parse_telemetry({kCorpus / file}, {});
      } else {
        io::parse_telemetry({kCorpus / "good_telemetry.csv"}, {kCorpus / file});
      }
      FAIL("accepted a malformed file");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      CHECK(std::string(e.what()).find(expected) != std::string::npos);
    }
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("telemetry CSV writer round-trips through the parser") {
  synth::TelemetrySimConfig c;
  c.ap_count = 6;
  c.samples = 12;
  c.seed = 3;
  const auto samples = synth::simulate_telemetry(c);
  std::ostringstream t, r;
  io::write_telemetry_csv(t, r, samples);
  io::TelemetryReader reader;
  std::istringstream ti(t.str()), ri(r.str());
  reader.add_telemetry(ti, "t");
  reader.add_rssi(ri, "r");
  const auto back = reader.finish();
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].ap_ids == samples[i].ap_ids);
    CHECK(back[i].tx_time == samples[i].tx_time);
    CHECK(back[i].interference == samples[i].interference);
    CHECK(back[i].rssi.bottomRightCorner(5, 5).diagonal() == back[i].rssi.bottomRightCorner(5, 5).diagonal());
    for (Eigen::Index a = 0; a < 6; ++a) {
      for (Eigen::Index b = 0; b < 6; ++b) {
        if (a != b) CHECK(back[i].rssi(a, b) == samples[i].rssi(a, b));
      }
    }
  }
}

TEST_CASE("datasets: save, load, save is byte-identical") {
  const fs::path dir = temp_dir("dataset");
  for (bool ids : {false, true}) {
    for (bool rssi : {false, true}) {
      const Dataset d = small_dataset(ids, rssi);
      io::save_dataset(dir / "a.json", d);
      const Dataset back = io::load_dataset(dir / "a.json");
      io::save_dataset(dir / "b.json", back);
      CHECK(io::read_file(dir / "a.json") == io::read_file(dir / "b.json"));
      REQUIRE(back.size() == d.size());
      CHECK(back.samples[0].features == d.samples[0].features);
      CHECK(back.samples[0].labels == d.samples[0].labels);
      CHECK(back.samples[0].topology == d.samples[0].topology);
      CHECK(back.samples[0].rssi.has_value() == rssi);
    }
  }
  auto j = nlohmann::json::parse(io::dataset_to_json(small_dataset(false, false)));
  j["format_version"] = 2;
  CHECK_THROWS_AS(io::dataset_from_json(j.dump()), Error);
}

TEST_CASE("checkpoints reproduce predictions bit-exactly") {
  const Dataset d = small_dataset(false, true);
  std::vector<const LabeledSample*> ptrs;
  std::vector<LabeledSample> padded;
  for (const auto& s : d.samples) padded.push_back(models::pad_inputs(s, 12));
  for (const auto& s : padded) ptrs.push_back(&s);
  for (auto kind : {models::ModelKind::Gcn, models::ModelKind::Mlp, models::ModelKind::Lstm}) {
    models::ModelSpec spec = models::ModelSpec::defaults(kind, 12);
    if (kind == models::ModelKind::Mlp) spec.hidden = {20, 20, 20};
    if (kind == models::ModelKind::Gcn) spec.kernel_count = 3;
    ad::Rng rng(4);
    auto m = models::make_model(spec, rng);
    io::CheckpointMetadata meta{4, "digest", "synthetic"};
    const std::string text = io::checkpoint_to_json(*m, meta);
    const auto back = io::checkpoint_from_json(text);
    CHECK(back.metadata.seed == 4);
    CHECK(back.metadata.source_network_id == "synthetic");
    CHECK(back.model->kind() == kind);
    const auto a = m->predict(ptrs);
    const auto b = back.model->predict(ptrs);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(io::checkpoint_to_json(*back.model, back.metadata) == text);
  }
}

TEST_CASE("checkpoint version mismatch and shapes") {
  ad::Rng rng(5);
  auto m = models::make_model(models::ModelSpec::gcn(128, false, 3), rng);
  auto j = nlohmann::json::parse(io::checkpoint_to_json(*m, {}));
  const auto& w0 = j["parameters"][0];
  CHECK(w0["name"] == "W0");
  CHECK(w0["rows"] == 3);
  CHECK(w0["cols"] == 100);
  CHECK(j["parameters"][2]["rows"] == 300);
  j["format_version"] = 2;
  try {
    io::checkpoint_from_json(j.dump());
    FAIL("accepted a version-2 checkpoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Version);
  }
  CHECK_THROWS_AS(io::checkpoint_from_json("{"), Error);
}

TEST_CASE("config digest is stable and sensitive") {
  train::TrainConfig a;
  train::TrainConfig b;
  CHECK(io::config_digest(a) == io::config_digest(b));
  b.epochs = 7;
  CHECK(io::config_digest(a) != io::config_digest(b));
}

TEST_CASE("what-if scenarios") {
  ad::Rng rng(6);
  auto m = models::make_model(models::ModelSpec::gcn(8), rng);
  io::Checkpoint ck{std::move(m), {}};

  const auto hand = io::scenario_from_json(
      R"({"loads":[0.1,0.2,0.3],"adjacency":[[0,1,0],[1,0,1],[0,1,0]],"ap_ids":["x","y","z"]})");
  const auto r = io::whatif_predict(ck, hand);
  CHECK(r.ap_ids == std::vector<std::string>{"x", "y", "z"});
  CHECK(r.model.size() == 3);
  CHECK(r.simple_sum(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.simple_sum(1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.simple_sum(2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.uniform_superposition(1) == doctest::Approx(1 - 0.9 * 0.7));

  const auto zero = io::scenario_from_json(R"({"loads":[0,0],"rssi":[[-100,-60],[-60,-100]]})");
  const auto z = io::whatif_predict(ck, zero);
  CHECK(z.simple_sum.isZero());
  CHECK(z.uniform_superposition.isZero());
  CHECK(zero.topology.connected(0, 1));

  CHECK_THROWS_AS(io::scenario_from_json(R"({"loads":[0.1]})"), Error);
  CHECK_THROWS_AS(io::scenario_from_json(R"({"loads":[0.1, 2.0],"adjacency":[[0,1],[1,0]]})"), Error);
  CHECK_THROWS_AS(io::scenario_from_json("not json"), Error);
  std::string big = R"({"loads":[)";
  for (int i = 0; i < 9; ++i) big += (i ? ",0.1" : "0.1");
  big += R"(],"adjacency":[)";
  for (int i = 0; i < 9; ++i) {
    big += i ? ",[" : "[";
    for (int j = 0; j < 9; ++j) big += j ? ",0" : "0";
    big += "]";
  }
  big += "]}";
  try {
    io::whatif_predict(ck, io::scenario_from_json(big));
    FAIL("accepted a scenario over capacity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("reports") {
  train::MetricsReport rep;
  rep.mae = 0.25;
  const auto j = nlohmann::json::parse(io::metrics_to_json(rep));
  CHECK(j["mae"] == 0.25);
  std::ostringstream os;
  io::write_node_errors_csv(os, {{0, 1, 0.5, 0.25, 0.25}});
  CHECK(os.str() == "sample,node,prediction,label,abs_error\n0,1,0.5,0.25,0.25\n");
}
