#include "airtime/k_sweep.hpp"

#include "airtime/stats.hpp"

namespace airtime::synth {

std::vector<KSweepRow> run_k_sweep(const KSweepConfig& config, const SweepProgress& progress) {
  if (config.repetitions == 0) throw Error(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  if (config.model.max_n < config.synth.n) {
    throw Error(ErrorKind::Capacity, "network exceeds model capacity");
  }
  std::vector<KSweepRow> rows;
  for (std::size_t k : config.k_values) {
    KSweepRow row;
    row.k = k;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      const std::uint64_t seed = config.seed + rep;
      SynthConfig synth = config.synth;
      synth.k = k;
      synth.seed = seed;
      Rng data_rng(seed);
      const KTopologyExperiment exp = build_k_topology_experiment(synth, data_rng);

      ad::Rng init_rng(seed);
      auto model = models::make_model(config.model, init_rng);
      train::TrainConfig tc = config.train;
      tc.seed = seed;
      train::train(*model, exp.train, exp.val, tc);

      const auto ev = train::evaluate(train::model_predictor(*model), exp.val, /*high_load_only=*/false);
      row.repetition_mse.push_back(ev.report.mse);
      if (synth.label_kind == LabelKind::SingleFailure) {
        double sse = 0.0;
        std::size_t count = 0;
        for (const auto& e : ev.errors) {
          if (e.node == synth.failure_index) {
            sse += e.abs_error * e.abs_error;
            ++count;
          }
        }
        row.repetition_failure_mse.push_back(count ? sse / static_cast<double>(count) : 0.0);
      }
      if (progress) progress(k, rep, ev.report.mse);
    }
    row.mean_mse = stats::mean(row.repetition_mse);
    row.std_mse = stats::stddev(row.repetition_mse);
    if (!row.repetition_failure_mse.empty()) {
      row.mean_failure_mse = stats::mean(row.repetition_failure_mse);
      row.std_failure_mse = stats::stddev(row.repetition_failure_mse);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace airtime::synth
