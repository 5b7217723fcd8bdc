#include "airtime/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "airtime/stats.hpp"

namespace airtime::train {

using models::Model;

void TrainConfig::validate() const {
  if (epochs == 0) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (oversample_factor == 0) throw Error(ErrorKind::InvalidArgument, "oversample_factor must be >= 1");
  if (!(high_load_threshold >= 0.0 && high_load_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "high_load_threshold must lie in [0,1]");
  }
}

std::pair<Dataset, Dataset> split_by_time(std::span<const TelemetrySample> samples, Timestamp boundary,
                                          double threshold_dbm) {
  std::pair<Dataset, Dataset> out;
  out.first.role = DatasetRole::Train;
  out.second.role = DatasetRole::Validation;
  for (const auto& s : samples) {
    (s.timestamp < boundary ? out.first : out.second).samples.push_back(labeled_from_telemetry(s, threshold_dbm));
  }
  return out;
}

Dataset oversample_high_load(const Dataset& dataset, std::size_t factor, double threshold,
                             std::uint64_t seed) {
  if (factor == 0) throw Error(ErrorKind::InvalidArgument, "oversample factor must be >= 1");
  Dataset out;
  out.role = dataset.role;
  for (const auto& s : dataset.samples) {
    const std::size_t copies = is_high_load(s, threshold) ? factor : 1;
    for (std::size_t c = 0; c < copies; ++c) out.samples.push_back(s);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(out.samples.begin(), out.samples.end(), rng);
  return out;
}

namespace {

std::vector<LabeledSample> padded(const Dataset& dataset, std::size_t max_n) {
  std::vector<LabeledSample> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.push_back(models::pad_inputs(s, max_n));
  return out;
}

std::vector<const LabeledSample*> pointers(const std::vector<LabeledSample>& samples) {
  std::vector<const LabeledSample*> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

/// Sum of masked squared errors and the number of scored entries.
std::pair<double, double> masked_sse(const Model& model, std::span<const LabeledSample* const> samples) {
  constexpr std::size_t kChunk = 128;
  double sse = 0.0;
  double count = 0.0;
  ad::Rng unused(0);
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const auto chunk = samples.subspan(start, std::min(kChunk, samples.size() - start));
    const models::Batch batch = model.make_batch(chunk);
    ad::Tape tape;
    const ad::Tensor pred = model.forward(tape, batch, false, unused);
    sse += (pred.value() - batch.targets).cwiseProduct(batch.mask).squaredNorm();
    count += batch.mask.sum();
  }
  return {sse, count};
}

}  // namespace

double validation_mse(const Model& model, const Dataset& dataset) {
  const auto samples = padded(dataset, model.max_n());
  const auto ptrs = pointers(samples);
  const auto [sse, count] = masked_sse(model, ptrs);
  if (count <= 0.0) throw Error(ErrorKind::EmptyDataset, "empty dataset");
  return sse / count;
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw Error(ErrorKind::EmptyDataset, "empty dataset");

  const Dataset source = config.oversample_factor > 1
                             ? oversample_high_load(train_set, config.oversample_factor,
                                                    config.high_load_threshold, config.seed)
                             : train_set;
  const auto train_samples = padded(source, model.max_n());
  const auto val_samples = padded(val_set, model.max_n());
  const auto val_ptrs = pointers(val_samples);

  std::mt19937_64 rng(config.seed);
  ad::Optimizer optimizer(model.parameters(), config.optimizer);
  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::vector<Matrix> best = model.snapshot();
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::vector<const LabeledSample*> batch_ptrs;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sse = 0.0;
    double count = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch_ptrs.clear();
      for (std::size_t i = start; i < end; ++i) batch_ptrs.push_back(&train_samples[order[i]]);
      const models::Batch batch = model.make_batch(batch_ptrs);
      ad::Tape tape;
      const ad::Tensor pred = model.forward(tape, batch, /*training=*/true, rng);
      const ad::Tensor loss = ad::masked_mse_loss(tape, pred, batch.targets, batch.mask);
      if (!std::isfinite(loss.scalar())) {
        std::ostringstream os;
        os << "non-finite training loss at epoch " << epoch << ", batch starting at " << start;
        throw Error(ErrorKind::Numerical, os.str());
      }
      tape.backward(loss);
      optimizer.step();
      const double entries = batch.mask.sum();
      sse += loss.scalar() * entries;
      count += entries;
    }
    result.train_loss.push_back(sse / count);

    const auto [val_sse, val_count] = masked_sse(model, val_ptrs);
    const double val = val_sse / val_count;
    if (!std::isfinite(val)) throw Error(ErrorKind::Numerical, "non-finite validation loss");
    result.val_loss.push_back(val);
    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      best = model.snapshot();
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  model.restore(best);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

Predictor model_predictor(const Model& model) {
  return [&model](std::span<const LabeledSample* const> samples) {
    std::vector<LabeledSample> padded_samples;
    padded_samples.reserve(samples.size());
    for (const auto* s : samples) padded_samples.push_back(models::pad_inputs(*s, model.max_n()));
    const auto ptrs = pointers(padded_samples);
    return model.predict(ptrs);
  };
}

Predictor baseline_predictor(baselines::EstimatorKind kind) {
  return [kind](std::span<const LabeledSample* const> samples) {
    std::vector<Vector> out;
    out.reserve(samples.size());
    for (const auto* s : samples) {
      const auto real = static_cast<Eigen::Index>(s->real_nodes);
      const Vector est = baselines::estimate(kind, LoadVector{s->loads()}, s->topology).estimates;
      out.push_back(est.head(real));
    }
    return out;
  };
}

Evaluation evaluate(const Predictor& predictor, const Dataset& dataset, bool high_load_only,
                    double high_load_threshold) {
  std::vector<const LabeledSample*> selected;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (!high_load_only || is_high_load(s, high_load_threshold)) {
      selected.push_back(&s);
      index.push_back(i);
    }
  }
  if (selected.empty()) throw Error(ErrorKind::EmptyDataset, "no samples left to evaluate");

  const std::vector<Vector> predictions = predictor(selected);
  Evaluation ev;
  std::vector<double> abs_errors;
  double sse = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& s = *selected[i];
    const Vector& pred = predictions[i];
    if (static_cast<std::size_t>(pred.size()) != s.real_nodes) {
      throw Error(ErrorKind::ShapeMismatch, "predictor returned the wrong number of nodes");
    }
    for (std::size_t a = 0; a < s.real_nodes; ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      const double err = pred(ai) - s.labels(ai);
      ev.errors.push_back({index[i], a, pred(ai), s.labels(ai), std::fabs(err)});
      abs_errors.push_back(std::fabs(err));
      sse += err * err;
    }
  }
  ev.report.node_count = abs_errors.size();
  ev.report.sample_count = selected.size();
  ev.report.mae = stats::mean(abs_errors);
  ev.report.mse = sse / static_cast<double>(abs_errors.size());
  ev.report.abs_error_percentiles = stats::box_percentiles(abs_errors);
  return ev;
}

Evaluation transfer_evaluate(const Model& model, const std::string& source_network_id,
                             const Dataset& dataset, double high_load_threshold) {
  Dataset prepared;
  prepared.role = dataset.role;
  prepared.samples.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    LabeledSample p = models::pad_inputs(s, model.max_n());
    if (p.network_id != source_network_id && p.features.cols() > 1) {
      p.features.rightCols(p.features.cols() - 1).setZero();
    }
    prepared.samples.push_back(std::move(p));
  }
  return evaluate(model_predictor(model), prepared, /*high_load_only=*/true, high_load_threshold);
}

// ---------------------------------------------------------------------------
// Heatmap

namespace {

int utc_hour(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  return static_cast<int>(std::chrono::duration_cast<std::chrono::hours>(t - day).count());
}

}  // namespace

Heatmap pearson_heatmap(std::span<const TelemetrySample> samples,
                        const baselines::TelemetryEstimator& estimator, double threshold_dbm) {
  if (samples.empty()) throw Error(ErrorKind::EmptyDataset, "empty dataset");
  const std::size_t n = samples.front().ap_count();
  // measured/estimated series per (ap, hour)
  std::vector<std::vector<double>> measured(n * Heatmap::kHours);
  std::vector<std::vector<double>> estimated(n * Heatmap::kHours);
  for (const auto& s : samples) {
    if (s.ap_count() != n) throw Error(ErrorKind::ShapeMismatch, "samples disagree on AP count");
    const Topology topo = derive_adjacency(symmetrize_rssi(s.rssi), threshold_dbm);
    const Vector est = estimator(s, topo);
    const auto hour = static_cast<std::size_t>(utc_hour(s.timestamp));
    for (std::size_t a = 0; a < n; ++a) {
      measured[a * Heatmap::kHours + hour].push_back(s.interference(static_cast<Eigen::Index>(a)));
      estimated[a * Heatmap::kHours + hour].push_back(est(static_cast<Eigen::Index>(a)));
    }
  }
  Heatmap map;
  map.ap_ids = samples.front().ap_ids;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(Heatmap::kHours);
  map.r = Matrix::Zero(rows, cols);
  map.p_value = Matrix::Ones(rows, cols);
  map.count = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows, cols);
  map.defined = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t h = 0; h < Heatmap::kHours; ++h) {
      const auto& x = measured[a * Heatmap::kHours + h];
      const auto& y = estimated[a * Heatmap::kHours + h];
      const auto ai = static_cast<Eigen::Index>(a);
      const auto hi = static_cast<Eigen::Index>(h);
      map.count(ai, hi) = static_cast<int>(x.size());
      const stats::Correlation c = stats::pearson(x, y);
      map.defined(ai, hi) = c.defined;
      if (c.defined) {
        map.r(ai, hi) = c.r;
        map.p_value(ai, hi) = c.p_value;
      }
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Kernel ablation

AblationResult kernel_ablation(const Dataset& train_set, const Dataset& val_set,
                               const models::ModelSpec& base_spec, const TrainConfig& config) {
  auto require_rssi = [](const Dataset& d) {
    for (const auto& s : d.samples) {
      if (!s.rssi) throw Error(ErrorKind::InvalidArgument, "kernel ablation needs RSSI matrices on every sample");
    }
  };
  require_rssi(train_set);
  require_rssi(val_set);

  auto run = [&](std::size_t kernel_count) {
    models::ModelSpec spec = base_spec;
    spec.kind = models::ModelKind::Gcn;
    spec.kernel_count = kernel_count;
    ad::Rng init(config.seed);
    models::GcnModel model(spec, init);
    train(model, train_set, val_set, config);
    return evaluate(model_predictor(model), val_set, /*high_load_only=*/false).report.mae;
  };
  AblationResult result;
  result.mae_two_kernels = run(2);
  result.mae_three_kernels = run(3);
  return result;
}

}  // namespace airtime::train
