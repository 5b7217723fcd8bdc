#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "airtime/baselines.hpp"
#include "airtime/io.hpp"
#include "airtime/k_sweep.hpp"
#include "airtime/models.hpp"
#include "airtime/synth.hpp"
#include "airtime/train_eval.hpp"

namespace fs = std::filesystem;
using namespace airtime;

namespace {

struct SynthOptions {
  std::size_t n = 10;
  double p = 0.2;
  std::size_t k = 1;
  std::size_t train_size = 6000;
  std::size_t val_size = 2000;
  std::string labels = "simple-sum";
  std::size_t failure_index = 0;
  bool node_ids = false;

  void add_to(CLI::App* app) {
    app->add_option("--n", n, "Nodes per graph");
    app->add_option("--p", p, "Edge probability");
    app->add_option("--k", k, "Number of fixed training topologies");
    app->add_option("--train-size", train_size);
    app->add_option("--val-size", val_size);
    app->add_option("--labels", labels, "simple-sum | single-failure");
    app->add_option("--failure-index", failure_index);
    app->add_flag("--node-ids", node_ids, "Append one-hot node IDs");
  }

  synth::SynthConfig config(std::uint64_t seed) const {
    synth::SynthConfig c;
    c.n = n;
    c.p = p;
    c.k = k;
    c.train_size = train_size;
    c.val_size = val_size;
    c.label_kind = synth::parse_label_kind(labels);
    c.failure_index = failure_index;
    c.node_ids = node_ids;
    c.seed = seed;
    return c;
  }
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::string optimizer = "adam";
  double lr = 1e-3;
  std::size_t oversample = 10;
  double high_load_threshold = 0.10;
  std::size_t patience = 10;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--optimizer", optimizer, "adam | sgd");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--oversample", oversample, "High-load oversampling factor");
    app->add_option("--high-load-threshold", high_load_threshold);
    app->add_option("--patience", patience, "Early-stop patience, 0 disables");
  }

  train::TrainConfig config(std::uint64_t seed) const {
    train::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    if (optimizer == "adam") {
      c.optimizer.kind = ad::OptimizerConfig::Kind::Adam;
    } else if (optimizer == "sgd") {
      c.optimizer.kind = ad::OptimizerConfig::Kind::GradientDescent;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + optimizer + "'");
    }
    c.optimizer.learning_rate = lr;
    c.seed = seed;
    c.oversample_factor = oversample;
    c.high_load_threshold = high_load_threshold;
    c.patience = patience;
    c.validate();
    return c;
  }
};

struct ModelOptions {
  std::string kind = "gcn";
  std::size_t max_n = models::kDefaultMaxN;
  std::size_t kernels = 2;
  bool node_ids = false;

  void add_to(CLI::App* app) {
    app->add_option("--model", kind, "gcn | mlp | lstm");
    app->add_option("--max-n", max_n, "Model capacity in nodes");
    app->add_option("--kernels", kernels, "GCN kernel count (2 or 3)");
    app->add_flag("--model-node-ids", node_ids, "Model consumes node-ID features");
  }

  models::ModelSpec spec() const {
    auto s = models::ModelSpec::defaults(models::parse_model_kind(kind), max_n);
    s.node_ids = node_ids;
    if (s.kind == models::ModelKind::Gcn) s.kernel_count = kernels;
    s.validate();
    return s;
  }
};

// Data comes either from dataset JSON files or from telemetry CSV.
struct DataOptions {
  std::vector<std::string> datasets;
  std::vector<std::string> telemetry;
  std::vector<std::string> rssi;
  double threshold = kCcaThresholdDbm;

  void add_to(CLI::App* app, const std::string& dataset_flag) {
    app->add_option(dataset_flag, datasets, "Dataset JSON file(s)");
    app->add_option("--telemetry", telemetry, "Telemetry CSV file(s)");
    app->add_option("--rssi", rssi, "RSSI CSV file(s)");
    app->add_option("--threshold", threshold, "Neighbor threshold in dBm");
  }

  std::vector<TelemetrySample> samples() const {
    if (telemetry.empty()) throw Error(ErrorKind::InvalidArgument, "--telemetry is required");
    return io::parse_telemetry({telemetry.begin(), telemetry.end()}, {rssi.begin(), rssi.end()});
  }

  Dataset dataset() const {
    Dataset out;
    for (const auto& path : datasets) {
      Dataset d = io::load_dataset(path);
      out.role = d.role;
      for (auto& s : d.samples) out.samples.push_back(std::move(s));
    }
    if (!telemetry.empty()) {
      for (const auto& s : samples()) out.samples.push_back(labeled_from_telemetry(s, threshold));
    }
    if (out.empty()) throw Error(ErrorKind::EmptyDataset, "no input samples");
    return out;
  }
};

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out);
  return dir;
}

template <typename Fn>
void write_csv(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  io::write_file(path, os.str());
}

void print_json_error(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WLAN airtime interference estimation"};
  app.require_subcommand(1);
  std::string out = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Random seed");
  app.add_flag("--quiet", quiet, "Suppress progress output");

  // synth-gen ---------------------------------------------------------------
  auto* gen = app.add_subcommand("synth-gen", "Generate a synthetic dataset or synthetic telemetry");
  SynthOptions gen_synth;
  gen_synth.add_to(gen);
  bool gen_noisy_rssi = false;
  bool gen_telemetry = false;
  synth::TelemetrySimConfig sim;
  std::string sim_start = "2021-01-01T00:00:00Z";
  gen->add_flag("--noisy-rssi", gen_noisy_rssi, "Attach surrogate RSSI around the CCA threshold");
  gen->add_flag("--telemetry", gen_telemetry, "Write telemetry.csv and rssi.csv instead");
  gen->add_option("--network-id", sim.network_id);
  gen->add_option("--aps", sim.ap_count, "APs in the simulated network");
  gen->add_option("--samples", sim.samples, "Snapshots to simulate");
  gen->add_option("--start", sim_start, "First snapshot timestamp (UTC)");

  // train -------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  DataOptions tr_train;
  DataOptions tr_val;
  ModelOptions tr_model;
  TrainOptions tr_opts;
  std::string tr_split;
  tr_train.add_to(tr, "--train");
  tr->add_option("--val", tr_val.datasets, "Validation dataset JSON file(s)");
  tr->add_option("--split-time", tr_split, "Telemetry before this UTC time trains, the rest validates");
  tr_model.add_to(tr);
  tr_opts.add_to(tr);

  // eval --------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline");
  DataOptions ev_data;
  std::string ev_checkpoint;
  std::string ev_baseline;
  bool ev_high_load = false;
  bool ev_transfer = false;
  double ev_threshold = 0.10;
  ev_data.add_to(ev, "--data");
  ev->add_option("--checkpoint", ev_checkpoint);
  ev->add_option("--baseline", ev_baseline, "simple-sum | uniform-superposition");
  ev->add_flag("--high-load-only", ev_high_load);
  ev->add_flag("--transfer", ev_transfer, "Cross-network evaluation (high-load samples only)");
  ev->add_option("--high-load-threshold", ev_threshold);

  // sweep-k -----------------------------------------------------------------
  auto* sk = app.add_subcommand("sweep-k", "Validation error against the number of training topologies");
  SynthOptions sk_synth;
  ModelOptions sk_model;
  TrainOptions sk_opts;
  sk_opts.oversample = 1;
  std::vector<std::size_t> sk_k{1, 2, 4, 8, 16, 32, 64};
  std::size_t sk_reps = 30;
  sk_synth.add_to(sk);
  sk_model.add_to(sk);
  sk_opts.add_to(sk);
  sk->add_option("--k-values", sk_k, "Topology counts to sweep");
  sk->add_option("--repetitions", sk_reps);

  // sweep-threshold ---------------------------------------------------------
  auto* st = app.add_subcommand("sweep-threshold", "Baseline error against the neighbor threshold");
  DataOptions st_data;
  std::string st_estimator = "uniform-superposition";
  double st_from = kMinThresholdDbm;
  double st_to = kEnergyDetectThresholdDbm;
  double st_step = 2.0;
  st_data.add_to(st, "--data");
  st->add_option("--estimator", st_estimator);
  st->add_option("--from", st_from);
  st->add_option("--to", st_to);
  st->add_option("--step", st_step);

  // ablate-kernels ----------------------------------------------------------
  auto* ab = app.add_subcommand("ablate-kernels", "Two- vs three-kernel GCN on noisy synthetic RSSI");
  SynthOptions ab_synth;
  ab_synth.k = 64;
  TrainOptions ab_opts;
  ab_opts.oversample = 1;
  std::size_t ab_runs = 10;
  std::size_t ab_max_n = 0;
  ab_synth.add_to(ab);
  ab_opts.add_to(ab);
  ab->add_option("--runs", ab_runs);
  ab->add_option("--max-n", ab_max_n, "Model capacity (defaults to --n)");

  // heatmap -----------------------------------------------------------------
  auto* hm = app.add_subcommand("heatmap", "Pearson correlation per AP and hour of day");
  DataOptions hm_data;
  std::string hm_estimator = "uniform-superposition";
  hm_data.add_to(hm, "--data");
  hm->add_option("--estimator", hm_estimator);

  // predict -----------------------------------------------------------------
  auto* pr = app.add_subcommand("predict", "What-if prediction for a scenario");
  std::string pr_checkpoint;
  std::string pr_scenario;
  pr->add_option("--checkpoint", pr_checkpoint)->required();
  pr->add_option("--scenario", pr_scenario)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_json_error("usage", e.what());
    return 2;
  }

  try {
    const fs::path dir = prepare_out(out);

    if (*gen) {
      if (gen_telemetry) {
        sim.seed = seed;
        sim.start = io::parse_timestamp(sim_start);
        const auto samples = synth::simulate_telemetry(sim);
        std::ofstream t(dir / "telemetry.csv", std::ios::binary);
        std::ofstream r(dir / "rssi.csv", std::ios::binary);
        if (!t || !r) throw Error(ErrorKind::Io, "cannot write telemetry files");
        io::write_telemetry_csv(t, r, samples);
      } else {
        const auto config = gen_synth.config(seed);
        synth::Rng rng(seed);
        auto exp = synth::build_k_topology_experiment(config, rng);
        if (gen_noisy_rssi) {
          synth::attach_noisy_rssi(exp.train, rng);
          synth::attach_noisy_rssi(exp.val, rng);
        }
        io::save_dataset(dir / "train.json", exp.train);
        io::save_dataset(dir / "val.json", exp.val);
      }
    } else if (*tr) {
      Dataset train_set;
      Dataset val_set;
      if (!tr_split.empty()) {
        const auto samples = tr_train.samples();
        auto split = train::split_by_time(samples, io::parse_timestamp(tr_split), tr_train.threshold);
        train_set = std::move(split.first);
        val_set = std::move(split.second);
        for (const auto& path : tr_val.datasets) {
          for (auto& s : io::load_dataset(path).samples) val_set.samples.push_back(std::move(s));
        }
      } else {
        train_set = tr_train.dataset();
        val_set = tr_val.dataset();
      }
      if (train_set.empty() || val_set.empty()) {
        throw Error(ErrorKind::EmptyDataset, "training and validation sets must be non-empty");
      }
      const auto spec = tr_model.spec();
      const auto config = tr_opts.config(seed);
      ad::Rng init(seed);
      auto model = models::make_model(spec, init);
      const auto result = train::train(*model, train_set, val_set, config);
      io::CheckpointMetadata meta;
      meta.seed = seed;
      meta.config_digest = io::config_digest(config);
      meta.source_network_id = train_set.samples.front().network_id;
      io::save_checkpoint(dir / "checkpoint.json", *model, meta);
      write_csv(dir / "loss.csv", [&](std::ostream& os) { io::write_loss_history_csv(os, result); });
      if (!quiet) {
        std::cout << "best epoch " << result.best_epoch << ", validation MSE "
                  << io::format_double(result.best_val_loss) << "\n";
      }
    } else if (*ev) {
      if (ev_checkpoint.empty() == ev_baseline.empty()) {
        throw Error(ErrorKind::InvalidArgument, "pass exactly one of --checkpoint and --baseline");
      }
      const Dataset data = ev_data.dataset();
      train::Evaluation result;
      if (!ev_baseline.empty()) {
        result = train::evaluate(train::baseline_predictor(baselines::parse_estimator(ev_baseline)), data,
                                 ev_high_load, ev_threshold);
      } else {
        const auto ck = io::load_checkpoint(ev_checkpoint);
        result = ev_transfer
                     ? train::transfer_evaluate(*ck.model, ck.metadata.source_network_id, data, ev_threshold)
                     : train::evaluate(train::model_predictor(*ck.model), data, ev_high_load, ev_threshold);
      }
      io::write_file(dir / "metrics.json", io::metrics_to_json(result.report));
      write_csv(dir / "node_errors.csv", [&](std::ostream& os) { io::write_node_errors_csv(os, result.errors); });
      if (!quiet) std::cout << "MAE " << io::format_double(result.report.mae) << "\n";
    } else if (*sk) {
      synth::KSweepConfig config;
      config.synth = sk_synth.config(seed);
      auto spec_opts = sk_model;
      if (spec_opts.max_n == models::kDefaultMaxN) spec_opts.max_n = sk_synth.n;
      spec_opts.node_ids = spec_opts.node_ids || sk_synth.node_ids;
      config.model = spec_opts.spec();
      config.k_values = sk_k;
      config.repetitions = sk_reps;
      config.train = sk_opts.config(seed);
      config.seed = seed;
      const auto rows = synth::run_k_sweep(config, [&](std::size_t k, std::size_t rep, double mse) {
        if (!quiet) std::cerr << "k=" << k << " rep=" << rep << " mse=" << io::format_double(mse) << "\n";
      });
      write_csv(dir / "k_sweep.csv", [&](std::ostream& os) { io::write_k_sweep_csv(os, rows); });
    } else if (*st) {
      const auto samples = st_data.samples();
      const auto thresholds = baselines::default_sweep_thresholds(st_from, st_to, st_step);
      const auto rows = baselines::threshold_sweep(samples, thresholds,
                                                   baselines::telemetry_estimator(baselines::parse_estimator(st_estimator)));
      write_csv(dir / "threshold_sweep.csv", [&](std::ostream& os) { io::write_threshold_sweep_csv(os, rows); });
    } else if (*ab) {
      auto spec = models::ModelSpec::gcn(ab_max_n ? ab_max_n : ab_synth.n);
      const auto train_config = ab_opts.config(seed);
      std::ostringstream os;
      os << "run,seed,mae_two_kernels,mae_three_kernels,ratio\n";
      for (std::size_t run = 0; run < ab_runs; ++run) {
        const std::uint64_t run_seed = seed + run;
        synth::Rng rng(run_seed);
        auto exp = synth::build_k_topology_experiment(ab_synth.config(run_seed), rng);
        synth::attach_noisy_rssi(exp.train, rng);
        synth::attach_noisy_rssi(exp.val, rng);
        auto tc = train_config;
        tc.seed = run_seed;
        const auto r = train::kernel_ablation(exp.train, exp.val, spec, tc);
        os << run << ',' << run_seed << ',' << io::format_double(r.mae_two_kernels) << ','
           << io::format_double(r.mae_three_kernels) << ',' << io::format_double(r.ratio()) << '\n';
        if (!quiet) std::cerr << "run " << run << " ratio " << io::format_double(r.ratio()) << "\n";
      }
      io::write_file(dir / "ablation.csv", os.str());
    } else if (*hm) {
      const auto samples = hm_data.samples();
      const auto map = train::pearson_heatmap(samples, baselines::telemetry_estimator(baselines::parse_estimator(hm_estimator)),
                                              hm_data.threshold);
      write_csv(dir / "heatmap.csv", [&](std::ostream& os) { io::write_heatmap_csv(os, map); });
    } else if (*pr) {
      const auto ck = io::load_checkpoint(pr_checkpoint);
      const auto scenario = io::scenario_from_json(io::read_file(pr_scenario));
      const auto result = io::whatif_predict(ck, scenario);
      write_csv(dir / "whatif.csv", [&](std::ostream& os) { io::write_whatif_csv(os, result); });
      if (!quiet) io::write_whatif_csv(std::cout, result);
    }
  } catch (const Error& e) {
    print_json_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_json_error("internal", e.what());
    return 1;
  }
  return 0;
}
