#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "airtime/synth.hpp"
#include "airtime/train_eval.hpp"

using namespace airtime;
using namespace airtime::train;

namespace {

LabeledSample labeled(std::initializer_list<double> labels) {
  LabeledSample s;
  const auto n = static_cast<Eigen::Index>(labels.size());
  s.features = Matrix::Zero(n, 1);
  s.topology = Topology(static_cast<std::size_t>(n));
  s.labels = Vector(n);
  Eigen::Index i = 0;
  for (double v : labels) s.labels(i++) = v;
  s.real_nodes = static_cast<std::size_t>(n);
  return s;
}

synth::KTopologyExperiment small_experiment(std::size_t train_size, std::size_t val_size, std::uint64_t seed,
                                            std::size_t k = 3) {
  synth::SynthConfig c;
  c.k = k;
  c.train_size = train_size;
  c.val_size = val_size;
  synth::Rng rng(seed);
  return synth::build_k_topology_experiment(c, rng);
}

Predictor constant_predictor(std::vector<Vector> values) {
  return [values](std::span<const LabeledSample* const> samples) {
    return std::vector<Vector>(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(samples.size()));
  };
}

TelemetrySample snapshot(int hour, double measured_a, double load_b) {
  TelemetrySample s;
  s.network_id = "net";
  s.timestamp = Timestamp{std::chrono::hours(hour)};
  s.ap_ids = {"a", "b"};
  s.tx_time = Vector{{0.1, load_b}};
  s.rx_time = Vector::Zero(2);
  s.interference = Vector{{measured_a, 0.1}};
  s.rssi = Matrix::Constant(2, 2, -60.0);
  return s;
}

}  // namespace

TEST_CASE("oversampling multiplies high-load samples only") {
  Dataset d;
  for (int i = 0; i < 3; ++i) d.samples.push_back(labeled({0.2, 0.0}));
  for (int i = 0; i < 5; ++i) d.samples.push_back(labeled({0.01, 0.0}));
  CHECK(oversample_high_load(d, 10, 0.10, 1).size() == 35);
  CHECK(oversample_high_load(d, 1, 0.10, 1).size() == 8);
  Dataset low;
  for (int i = 0; i < 4; ++i) low.samples.push_back(labeled({0.01}));
  CHECK(oversample_high_load(low, 10, 0.10, 1).size() == 4);
  CHECK_THROWS_AS(oversample_high_load(d, 0, 0.10, 1), Error);
}

TEST_CASE("oversampling preserves the set of distinct samples") {
  Dataset d;
  for (int i = 0; i < 12; ++i) d.samples.push_back(labeled({0.02 * i, 0.0}));
  const Dataset o = oversample_high_load(d, 4, 0.10, 9);
  std::map<double, int> counts;
  for (const auto& s : o.samples) counts[s.labels[0]]++;
  CHECK(counts.size() == 12);
  for (const auto& [label, c] : counts) CHECK(c == (label >= 0.10 ? 4 : 1));
}

TEST_CASE("a tiny GCN run overfits 50 samples") {
  const auto exp = small_experiment(50, 20, 1, 1);
  ad::Rng init(1);
  auto model = models::make_model(models::ModelSpec::gcn(10), init);
  TrainConfig c;
  c.epochs = 500;
  c.batch_size = 10;
  c.oversample_factor = 1;
  c.patience = 0;
  const auto r = train::train(*model, exp.train, exp.train, c);
  CHECK(r.train_loss.size() == 500);
  CHECK(r.val_loss.size() == 500);
  CHECK(validation_mse(*model, exp.train) < 1e-3);
}

TEST_CASE("loss history length equals epochs run; identical seeds reproduce histories") {
  const auto exp = small_experiment(120, 40, 2);
  auto run = [&](std::uint64_t seed) {
    ad::Rng init(seed);
    auto model = models::make_model(models::ModelSpec::gcn(10), init);
    TrainConfig c;
    c.epochs = 4;
    c.seed = seed;
    c.oversample_factor = 1;
    return train::train(*model, exp.train, exp.val, c);
  };
  const auto a = run(5);
  const auto b = run(5);
  CHECK(a.val_loss.size() == 4);
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.val_loss == b.val_loss);
  CHECK(run(6).train_loss != a.train_loss);
}

TEST_CASE("early stopping halts after `patience` stale epochs and restores the best weights") {
  const auto exp = small_experiment(60, 30, 3);
  ad::Rng init(3);
  auto model = models::make_model(models::ModelSpec::gcn(10), init);
  TrainConfig c;
  c.epochs = 50;
  c.oversample_factor = 1;
  c.patience = 2;
  // A zero learning rate never improves after the first epoch.
  c.optimizer.kind = ad::OptimizerConfig::Kind::GradientDescent;
  c.optimizer.learning_rate = 0.0;
  const auto r = train::train(*model, exp.train, exp.val, c);
  CHECK(r.val_loss.size() == 3);
  CHECK(r.best_epoch == 0);
  CHECK(validation_mse(*model, exp.val) == r.best_val_loss);
}

TEST_CASE("oversample factor 1 trains on the raw dataset") {
  const auto exp = small_experiment(80, 20, 4);
  auto run = [&](const Dataset& d) {
    ad::Rng init(4);
    auto model = models::make_model(models::ModelSpec::gcn(10), init);
    TrainConfig c;
    c.epochs = 2;
    c.oversample_factor = 1;
    return train::train(*model, d, exp.val, c).train_loss;
  };
  Dataset copy = exp.train;
  CHECK(run(exp.train) == run(copy));
}

TEST_CASE("non-finite losses abort training") {
  auto exp = small_experiment(20, 10, 5);
  ad::Rng init(5);
  auto model = models::make_model(models::ModelSpec::gcn(10), init);
  TrainConfig c;
  c.epochs = 3;
  c.oversample_factor = 1;
  c.optimizer.kind = ad::OptimizerConfig::Kind::GradientDescent;
  c.optimizer.learning_rate = 1e200;
  CHECK_THROWS_AS(train::train(*model, exp.train, exp.val, c), Error);
  CHECK_THROWS_AS(train::train(*model, Dataset{}, exp.val, c), Error);
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.oversample_factor = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.high_load_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(TrainConfig{}.epochs == 100);
  CHECK(TrainConfig{}.batch_size == 32);
  CHECK(TrainConfig{}.oversample_factor == 10);
}

TEST_CASE("evaluate: perfect predictions, hand-averaged errors, empty filter") {
  Dataset d;
  d.samples.push_back(labeled({0.2, 0.4}));
  const auto perfect = evaluate(constant_predictor({Vector{{0.2, 0.4}}}), d, false);
  CHECK(perfect.report.mae == 0.0);
  for (double p : perfect.report.abs_error_percentiles) CHECK(p == 0.0);

  const auto off = evaluate(constant_predictor({Vector{{0.3, 0.1}}}), d, false);
  CHECK(off.report.mae == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(off.report.node_count == 2);
  CHECK(off.report.sample_count == 1);
  REQUIRE(off.errors.size() == 2);
  CHECK(off.errors[1].abs_error == doctest::Approx(0.3));

  Dataset low;
  low.samples.push_back(labeled({0.01, 0.02}));
  CHECK_THROWS_AS(evaluate(constant_predictor({Vector{{0, 0}}}), low, true), Error);
}

TEST_CASE("reported MAE equals a recomputation from the dumped errors") {
  const auto exp = small_experiment(10, 200, 6);
  const auto ev = evaluate(baseline_predictor(baselines::EstimatorKind::UniformSuperposition), exp.val, false);
  double total = 0.0;
  for (const auto& e : ev.errors) {
    CHECK(e.abs_error == std::abs(e.prediction - e.label));
    total += std::abs(e.prediction - e.label);
  }
  CHECK(std::abs(total / static_cast<double>(ev.errors.size()) - ev.report.mae) < 1e-12);
  const auto& p = ev.report.abs_error_percentiles;
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i - 1] <= p[i]);
}

TEST_CASE("superposition beats simple sum against slot-simulated groundtruth") {
  synth::Rng rng(7);
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    const Topology t = synth::gen_erdos_renyi(8, 0.4, rng);
    const Vector l = synth::gen_loads(8, rng) * 0.6;
    LabeledSample s;
    s.features = l;
    s.topology = t;
    s.real_nodes = 8;
    s.labels = Vector(8);
    for (std::size_t a = 0; a < 8; ++a) {
      std::vector<double> nb;
      for (std::size_t b : t.neighbors(a)) nb.push_back(l(static_cast<Eigen::Index>(b)));
      s.labels(static_cast<Eigen::Index>(a)) = baselines::monte_carlo_superposition(nb, 20000, 100 * i + a);
    }
    d.samples.push_back(s);
  }
  const double us = evaluate(baseline_predictor(baselines::EstimatorKind::UniformSuperposition), d, false).report.mae;
  const double ss = evaluate(baseline_predictor(baselines::EstimatorKind::SimpleSum), d, false).report.mae;
  CHECK(us <= ss);
}

TEST_CASE("transfer evaluation on the source network equals evaluate on high-load samples") {
  const auto exp = small_experiment(10, 100, 8);
  ad::Rng init(8);
  auto model = models::make_model(models::ModelSpec::gcn(16), init);
  const auto a = transfer_evaluate(*model, "synthetic", exp.val);
  const auto b = evaluate(model_predictor(*model), exp.val, true);
  CHECK(a.report.mae == b.report.mae);
  CHECK(a.errors.size() == b.errors.size());

  synth::SynthConfig big;
  big.n = 20;
  big.train_size = 1;
  big.val_size = 5;
  synth::Rng rng(9);
  const auto far = synth::build_k_topology_experiment(big, rng);
  CHECK_THROWS_AS(transfer_evaluate(*model, "synthetic", far.val), Error);
}

TEST_CASE("transfer zeroes node IDs of foreign networks") {
  synth::SynthConfig c;
  c.node_ids = true;
  c.train_size = 1;
  c.val_size = 30;
  synth::Rng rng(10);
  auto exp = synth::build_k_topology_experiment(c, rng);
  ad::Rng init(10);
  auto model = models::make_model(models::ModelSpec::gcn(10, true), init);
  const auto same = transfer_evaluate(*model, "synthetic", exp.val);
  const auto foreign = transfer_evaluate(*model, "elsewhere", exp.val);
  Dataset stripped = exp.val;
  for (auto& s : stripped.samples) s.features.rightCols(10).setZero();
  const auto oracle = evaluate(model_predictor(*model), stripped, true);
  CHECK(foreign.report.mae == oracle.report.mae);
  CHECK(same.report.mae != foreign.report.mae);
}

TEST_CASE("pearson heatmap: passthrough, negation, affine invariance") {
  std::vector<TelemetrySample> samples;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int day = 0; day < 5; ++day) {
    for (int hour = 0; hour < 24; ++hour) samples.push_back(snapshot(24 * day + hour, u(rng), u(rng)));
  }
  const auto truth = pearson_heatmap(samples, baselines::groundtruth_estimator());
  const auto neg = pearson_heatmap(samples, [](const TelemetrySample& s, const Topology&) -> Vector {
    return -s.interference;
  });
  const auto est = baselines::telemetry_estimator(baselines::EstimatorKind::SimpleSum);
  const auto base = pearson_heatmap(samples, est);
  const auto affine = pearson_heatmap(samples, [&](const TelemetrySample& s, const Topology& t) -> Vector {
    return (3.0 * est(s, t)).array() + 0.7;
  });
  CHECK(truth.ap_ids == std::vector<std::string>{"a", "b"});
  CHECK(truth.r.cols() == 24);
  for (Eigen::Index h = 0; h < 24; ++h) {
    CHECK(truth.count(0, h) == 5);
    REQUIRE(truth.defined(0, h));
    CHECK(truth.r(0, h) == doctest::Approx(1.0));
    CHECK(neg.r(0, h) == doctest::Approx(-1.0));
    CHECK_FALSE(truth.defined(1, h));  // constant measured interference
    CHECK(base.defined(0, h) == affine.defined(0, h));
    if (base.defined(0, h)) CHECK(std::abs(base.r(0, h) - affine.r(0, h)) < 1e-12);
  }
}

TEST_CASE("time split and kernel ablation contracts") {
  std::vector<TelemetrySample> samples{snapshot(0, 0.2, 0.1), snapshot(1, 0.3, 0.2), snapshot(2, 0.1, 0.3)};
  const auto [tr, va] = split_by_time(samples, Timestamp{std::chrono::hours(2)});
  CHECK(tr.size() == 2);
  CHECK(va.size() == 1);

  auto exp = small_experiment(40, 20, 12);
  models::ModelSpec spec = models::ModelSpec::gcn(10);
  spec.hidden = {8, 8};
  TrainConfig c;
  c.epochs = 2;
  c.oversample_factor = 1;
  CHECK_THROWS_AS(kernel_ablation(exp.train, exp.val, spec, c), Error);
  synth::Rng rng(12);
  synth::attach_noisy_rssi(exp.train, rng);
  synth::attach_noisy_rssi(exp.val, rng);
  const auto a = kernel_ablation(exp.train, exp.val, spec, c);
  const auto b = kernel_ablation(exp.train, exp.val, spec, c);
  CHECK(a.mae_two_kernels >= 0.0);
  CHECK(a.mae_three_kernels >= 0.0);
  CHECK(a.mae_two_kernels == b.mae_two_kernels);
  CHECK(a.mae_three_kernels == b.mae_three_kernels);
}
