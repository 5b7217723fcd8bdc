#pragma once

// Neural interference estimators: MLP, bidirectional LSTM and the
// multi-kernel GCN, plus kernel construction and input padding.

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "airtime/autodiff.hpp"
#include "airtime/domain.hpp"

namespace airtime::models {

enum class ModelKind { Mlp, Lstm, Gcn };

const char* to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

inline constexpr std::size_t kDefaultMaxN = 128;

/// Architecture descriptor shared by all three kinds. `hidden` holds the GCN
/// layer widths, the MLP block widths, or the LSTM units per direction per layer.
struct ModelSpec {
  ModelKind kind = ModelKind::Gcn;
  std::size_t max_n = kDefaultMaxN;
  bool node_ids = false;
  std::size_t kernel_count = 2;  // GCN only: 2 = {I, RSSI}, 3 = {I, RSSI, adjacency}
  std::vector<std::size_t> hidden;
  double dropout = 0.0;

  /// d(0): 1, or 1 + max_n with node IDs.
  std::size_t input_width() const noexcept { return node_ids ? 1 + max_n : 1; }
  void validate() const;

  static ModelSpec gcn(std::size_t max_n, bool node_ids = false, std::size_t kernel_count = 2);
  static ModelSpec mlp(std::size_t max_n);
  static ModelSpec lstm(std::size_t max_n);
  static ModelSpec defaults(ModelKind kind, std::size_t max_n);
};

// ---------------------------------------------------------------------------
// Kernels

struct KernelSet {
  std::vector<Matrix> kernels;

  std::size_t count() const noexcept { return kernels.size(); }
};

/// Affine clamp of [-100, -40] dBm onto [0, 1].
double rssi_to_weight(double dbm);

/// D^-1/2 M D^-1/2 with D the row sums of M; zero-degree rows stay zero.
Matrix normalize_symmetric(const Matrix& m);

/// Stand-in RSSI when none is measured: -40 dBm on edges, -100 dBm elsewhere,
/// so the RSSI kernel reduces to the normalized adjacency kernel.
Matrix surrogate_rssi(const Topology& topo);

/// T1 = I; T2 = normalized RSSI weights with unit self-weights; T3 (optional) =
/// normalized adjacency + I. Throws on an asymmetric RSSI matrix.
KernelSet build_kernels(const std::optional<Matrix>& rssi, const Topology& adjacency,
                        bool include_adjacency_kernel);

// ---------------------------------------------------------------------------
// Padding

/// Zero-pads loads, adjacency, RSSI (sentinel), and labels up to max_n nodes and
/// rebuilds any node-ID block at width max_n. `real_nodes` is preserved so the
/// mask excludes pad nodes.
LabeledSample pad_inputs(const LabeledSample& sample, std::size_t max_n);

// ---------------------------------------------------------------------------
// Models

/// Model-specific stacking of a mini-batch. `targets` and `mask` have the shape
/// of the forward output; `positions[i]` lists the row-major output indices of
/// sample i's real nodes in node order.
struct Batch {
  Matrix inputs;
  std::vector<KernelSet> kernels;
  std::vector<Eigen::Index> offsets;
  Matrix targets;
  Matrix mask;
  std::vector<std::vector<Eigen::Index>> positions;
};

class Model {
 public:
  virtual ~Model() = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  ModelKind kind() const noexcept { return spec_.kind; }
  std::size_t max_n() const noexcept { return spec_.max_n; }

  virtual Batch make_batch(std::span<const LabeledSample* const> samples) const = 0;
  virtual ad::Tensor forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const = 0;

  /// Trainable tensors in a fixed order, paired with parameter_names().
  const std::vector<ad::Tensor>& parameters() const noexcept { return params_; }
  const std::vector<std::string>& parameter_names() const noexcept { return names_; }

  std::vector<Matrix> snapshot() const;
  void restore(std::span<const Matrix> values);

  /// Inference (dropout off); one vector per sample over its real nodes.
  std::vector<Vector> predict(std::span<const LabeledSample* const> samples) const;
  Vector predict(const LabeledSample& sample) const;

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  ad::Tensor& add_parameter(std::string name, ad::Tensor t);

  ModelSpec spec_;
  std::vector<ad::Tensor> params_;
  std::vector<std::string> names_;
};

/// Graph convolution stack: per layer I = [T1 H ... Tk H], H' = ReLU(I W + b);
/// the last layer is linear with one output column.
class GcnModel final : public Model {
 public:
  GcnModel(ModelSpec spec, ad::Rng& rng);

  Batch make_batch(std::span<const LabeledSample* const> samples) const override;
  ad::Tensor forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const override;

  /// Single graph with explicit kernels; returns the per-node output column.
  Vector forward(const KernelSet& kernels, const Matrix& features) const;

  std::size_t layer_count() const noexcept { return weights_.size(); }
  ad::Tensor& weight(std::size_t layer) { return params_[weights_[layer]]; }
  ad::Tensor& bias(std::size_t layer) { return params_[biases_[layer]]; }

 private:
  ad::Tensor propagate(ad::Tape& tape, ad::Tensor h, std::span<const KernelSet> kernels,
                       std::span<const Eigen::Index> offsets) const;

  std::vector<std::size_t> weights_;
  std::vector<std::size_t> biases_;
};

/// Dense blocks (ReLU + dropout) over [loads, flattened adjacency], linear
/// output of width max_n.
class MlpModel final : public Model {
 public:
  MlpModel(ModelSpec spec, ad::Rng& rng);

  Batch make_batch(std::span<const LabeledSample* const> samples) const override;
  ad::Tensor forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const override;

  /// Padded inputs only: loads has max_n entries, adjacency is max_n x max_n.
  Vector forward(const Vector& loads, const Matrix& adjacency, bool training, ad::Rng& rng) const;

  std::size_t input_width() const noexcept { return spec_.max_n + spec_.max_n * spec_.max_n; }
};

/// Stacked bidirectional LSTM over one timestep per node; timestep i sees
/// [all loads, adjacency row i]. Per-timestep dense head to one output.
class LstmModel final : public Model {
 public:
  LstmModel(ModelSpec spec, ad::Rng& rng);

  Batch make_batch(std::span<const LabeledSample* const> samples) const override;
  ad::Tensor forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const override;

  Vector forward(const Vector& loads, const Matrix& adjacency, bool training, ad::Rng& rng) const;

  std::size_t layer_output_width(std::size_t layer) const { return 2 * spec_.hidden.at(layer); }

 private:
  struct Direction {
    std::size_t input_weight;
    std::size_t recurrent_weight;
    std::size_t bias;
  };
  ad::Tensor run_direction(ad::Tape& tape, const ad::Tensor& projected, const Direction& dir,
                           std::size_t units, Eigen::Index timesteps, Eigen::Index batch,
                           bool reverse, std::vector<ad::Tensor>& outputs) const;

  std::vector<std::array<Direction, 2>> layers_;
  std::size_t head_weight_ = 0;
  std::size_t head_bias_ = 0;
};

std::unique_ptr<Model> make_model(const ModelSpec& spec, ad::Rng& rng);

}  // namespace airtime::models
