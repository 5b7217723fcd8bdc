#include "airtime/models.hpp"

#include <algorithm>
#include <cmath>


namespace airtime::models {

using ad::Tape;
using ad::Tensor;

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Gcn: return "gcn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "lstm") return ModelKind::Lstm;
  if (name == "gcn") return ModelKind::Gcn;
  throw Error(ErrorKind::InvalidArgument, "unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (max_n == 0) throw Error(ErrorKind::InvalidArgument, "max_n must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout must be in [0,1)");
  if (kind == ModelKind::Gcn && (kernel_count < 1 || kernel_count > 3)) {
    throw Error(ErrorKind::InvalidArgument, "kernel_count must be 1, 2 or 3");
  }
  if (kind != ModelKind::Gcn && hidden.empty()) {
    throw Error(ErrorKind::InvalidArgument, "mlp/lstm need at least one hidden layer");
  }
  if (std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
    throw Error(ErrorKind::InvalidArgument, "hidden widths must be positive");
  }
}

ModelSpec ModelSpec::gcn(std::size_t max_n, bool node_ids, std::size_t kernel_count) {
  return {ModelKind::Gcn, max_n, node_ids, kernel_count, {100, 100, 100, 100}, 0.0};
}

ModelSpec ModelSpec::mlp(std::size_t max_n) {
  return {ModelKind::Mlp, max_n, false, 0, {3000, 3000, 3000}, 0.5};
}

ModelSpec ModelSpec::lstm(std::size_t max_n) {
  return {ModelKind::Lstm, max_n, false, 0, {40, 40, 40}, 0.5};
}

ModelSpec ModelSpec::defaults(ModelKind kind, std::size_t max_n) {
  switch (kind) {
    case ModelKind::Mlp: return mlp(max_n);
    case ModelKind::Lstm: return lstm(max_n);
    case ModelKind::Gcn: break;
  }
  return gcn(max_n);
}

// ---------------------------------------------------------------------------
// Kernels

double rssi_to_weight(double dbm) {
  return std::clamp((dbm - kMinThresholdDbm) / (kMaxThresholdDbm - kMinThresholdDbm), 0.0, 1.0);
}

Matrix normalize_symmetric(const Matrix& m) {
  const Vector degree = m.rowwise().sum();
  Vector inv_sqrt(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  return inv_sqrt.asDiagonal() * m * inv_sqrt.asDiagonal();
}

Matrix surrogate_rssi(const Topology& topo) {
  const auto n = static_cast<Eigen::Index>(topo.size());
  Matrix rssi = Matrix::Constant(n, n, kMissingRssiDbm);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (topo.connected(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) {
        rssi(a, b) = kMaxThresholdDbm;
      }
    }
  }
  return rssi;
}

KernelSet build_kernels(const std::optional<Matrix>& rssi, const Topology& adjacency,
                        bool include_adjacency_kernel) {
  const auto n = static_cast<Eigen::Index>(adjacency.size());
  const Matrix levels = rssi ? *rssi : surrogate_rssi(adjacency);
  if (levels.rows() != n || levels.cols() != n) {
    throw Error(ErrorKind::ShapeMismatch, "rssi matrix does not match topology size");
  }
  Matrix weights(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a != b && levels(a, b) != levels(b, a)) {
        throw Error(ErrorKind::InvalidArgument, "rssi matrix is not symmetric");
      }
      weights(a, b) = a == b ? 1.0 : rssi_to_weight(levels(a, b));
    }
  }
  KernelSet set;
  set.kernels.push_back(Matrix::Identity(n, n));
  set.kernels.push_back(normalize_symmetric(weights));
  if (include_adjacency_kernel) {
    set.kernels.push_back(normalize_symmetric(adjacency.to_matrix() + Matrix::Identity(n, n)));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Padding

LabeledSample pad_inputs(const LabeledSample& sample, std::size_t max_n) {
  const std::size_t n = sample.size();
  if (n > max_n || sample.real_nodes > max_n) {
    throw Error(ErrorKind::Capacity, "network exceeds model capacity");
  }
  if (n == max_n) return sample;
  const auto m = static_cast<Eigen::Index>(max_n);
  const auto real = static_cast<Eigen::Index>(sample.real_nodes);

  LabeledSample out;
  const bool has_ids = sample.features.cols() > 1;
  out.features = Matrix::Zero(m, has_ids ? 1 + m : 1);
  out.features.col(0).head(real) = sample.features.col(0).head(real);
  if (has_ids) {
    const Eigen::Index width = std::min<Eigen::Index>(sample.features.cols() - 1, m);
    out.features.block(0, 1, real, width) = sample.features.block(0, 1, real, width);
  }
  out.topology = Topology(max_n);
  for (std::size_t a = 0; a < sample.real_nodes; ++a) {
    for (std::size_t b = a + 1; b < sample.real_nodes; ++b) {
      if (sample.topology.connected(a, b)) out.topology.connect(a, b);
    }
  }
  if (sample.rssi) {
    Matrix rssi = Matrix::Constant(m, m, kMissingRssiDbm);
    rssi.topLeftCorner(real, real) = sample.rssi->topLeftCorner(real, real);
    out.rssi = std::move(rssi);
  }
  out.labels = Vector::Zero(m);
  out.labels.head(real) = sample.labels.head(real);
  out.real_nodes = sample.real_nodes;
  out.network_id = sample.network_id;
  return out;
}

// ---------------------------------------------------------------------------
// Model base

Tensor& Model::add_parameter(std::string name, Tensor t) {
  names_.push_back(std::move(name));
  params_.push_back(std::move(t));
  return params_.back();
}

std::vector<Matrix> Model::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value());
  return out;
}

void Model::restore(std::span<const Matrix> values) {
  if (values.size() != params_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "parameter count mismatch on restore");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != params_[i].rows() || values[i].cols() != params_[i].cols()) {
      throw Error(ErrorKind::ShapeMismatch, "parameter '" + names_[i] + "' has the wrong shape");
    }
    params_[i].mutable_value() = values[i];
  }
}

std::vector<Vector> Model::predict(std::span<const LabeledSample* const> samples) const {
  constexpr std::size_t kChunk = 64;
  std::vector<Vector> out;
  out.reserve(samples.size());
  ad::Rng unused(0);
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const auto chunk = samples.subspan(start, std::min(kChunk, samples.size() - start));
    const Batch batch = make_batch(chunk);
    Tape tape;
    const Tensor pred = forward(tape, batch, /*training=*/false, unused);
    for (const auto& pos : batch.positions) {
      Vector v(static_cast<Eigen::Index>(pos.size()));
      for (std::size_t a = 0; a < pos.size(); ++a) v(static_cast<Eigen::Index>(a)) = pred.value().data()[pos[a]];
      out.push_back(std::move(v));
    }
  }
  return out;
}

Vector Model::predict(const LabeledSample& sample) const {
  const LabeledSample* ptr = &sample;
  return predict(std::span<const LabeledSample* const>(&ptr, 1)).front();
}

namespace {

void require_padded(const LabeledSample& s, std::size_t max_n) {
  if (s.size() != max_n) {
    throw Error(ErrorKind::ShapeMismatch, "unpadded input: sample has " + std::to_string(s.size()) +
                                              " nodes, model expects " + std::to_string(max_n));
  }
}

Tensor dense(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  return ad::add_row(tape, ad::matmul(tape, x, w), b);
}

}  // namespace

// ---------------------------------------------------------------------------
// GCN

GcnModel::GcnModel(ModelSpec spec, ad::Rng& rng) : Model(std::move(spec)) {
  spec_.validate();
  std::vector<std::size_t> dims{spec_.input_width()};
  dims.insert(dims.end(), spec_.hidden.begin(), spec_.hidden.end());
  dims.push_back(1);
  const auto k = static_cast<Eigen::Index>(spec_.kernel_count);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = k * static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    weights_.push_back(params_.size());
    add_parameter("W" + std::to_string(l), Tensor::glorot(in, out, rng));
    biases_.push_back(params_.size());
    add_parameter("b" + std::to_string(l), Tensor::zeros(1, out, true));
  }
}

Batch GcnModel::make_batch(std::span<const LabeledSample* const> samples) const {
  Batch batch;
  Eigen::Index rows = 0;
  for (const auto* s : samples) rows += static_cast<Eigen::Index>(s->real_nodes);
  const auto width = static_cast<Eigen::Index>(spec_.input_width());
  batch.inputs.resize(rows, width);
  batch.targets.resize(rows, 1);
  batch.mask = Matrix::Ones(rows, 1);
  Eigen::Index offset = 0;
  for (const auto* s : samples) {
    const auto real = static_cast<Eigen::Index>(s->real_nodes);
    if (s->features.cols() != width) {
      throw Error(ErrorKind::ShapeMismatch, "feature width " + std::to_string(s->features.cols()) +
                                                " does not match d(0) = " + std::to_string(width));
    }
    batch.inputs.middleRows(offset, real) = s->features.topRows(real);
    batch.targets.middleRows(offset, real) = s->labels.head(real);
    // Pad nodes are isolated, so cropping the full kernels leaves real rows unchanged.
    KernelSet ks = build_kernels(s->rssi, s->topology, spec_.kernel_count >= 3);
    ks.kernels.resize(spec_.kernel_count);
    if (real != static_cast<Eigen::Index>(s->size())) {
      for (auto& t : ks.kernels) t = Matrix(t.topLeftCorner(real, real));
    }
    batch.kernels.push_back(std::move(ks));
    batch.offsets.push_back(offset);
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(real));
    for (Eigen::Index a = 0; a < real; ++a) pos[static_cast<std::size_t>(a)] = offset + a;
    batch.positions.push_back(std::move(pos));
    offset += real;
  }
  return batch;
}

Tensor GcnModel::propagate(Tape& tape, Tensor h, std::span<const KernelSet> kernels,
                           std::span<const Eigen::Index> offsets) const {
  std::vector<Tensor> parts{h};
  for (std::size_t j = 1; j < spec_.kernel_count; ++j) {
    std::vector<const Matrix*> blocks;
    blocks.reserve(kernels.size());
    for (const auto& ks : kernels) blocks.push_back(&ks.kernels.at(j));
    parts.push_back(ad::block_propagate(tape, blocks, offsets, h));
  }
  return parts.size() == 1 ? parts.front() : ad::concat_columns(tape, parts);
}

Tensor GcnModel::forward(Tape& tape, const Batch& batch, bool /*training*/, ad::Rng& /*rng*/) const {
  for (const auto& ks : batch.kernels) {
    if (ks.count() != spec_.kernel_count) {
      throw Error(ErrorKind::ShapeMismatch, "kernel count does not match the model");
    }
    // T1 is applied implicitly; make sure it is the identity it claims to be.
    if (!ks.kernels.front().isIdentity()) {
      throw Error(ErrorKind::InvalidArgument, "first kernel must be the identity");
    }
  }
  Tensor h = Tensor::from_op(batch.inputs, false);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Tensor mixed = propagate(tape, h, batch.kernels, batch.offsets);
    h = dense(tape, mixed, params_[weights_[l]], params_[biases_[l]]);
    if (l + 1 < weights_.size()) h = ad::relu(tape, h);
  }
  return h;
}

Vector GcnModel::forward(const KernelSet& kernels, const Matrix& features) const {
  if (static_cast<std::size_t>(features.cols()) != spec_.input_width()) {
    throw Error(ErrorKind::ShapeMismatch, "feature width does not match d(0)");
  }
  for (const auto& t : kernels.kernels) {
    if (t.rows() != features.rows() || t.cols() != features.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "kernel size does not match node count");
    }
  }
  Batch batch;
  batch.inputs = features;
  batch.kernels.push_back(kernels);
  batch.offsets.push_back(0);
  Tape tape;
  ad::Rng unused(0);
  return forward(tape, batch, false, unused).value().col(0);
}

// ---------------------------------------------------------------------------
// MLP

MlpModel::MlpModel(ModelSpec spec, ad::Rng& rng) : Model(std::move(spec)) {
  spec_.validate();
  auto in = static_cast<Eigen::Index>(input_width());
  for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(spec_.hidden[l]);
    add_parameter("W" + std::to_string(l), Tensor::glorot(in, out, rng));
    add_parameter("b" + std::to_string(l), Tensor::zeros(1, out, true));
    in = out;
  }
  const auto out = static_cast<Eigen::Index>(spec_.max_n);
  add_parameter("W_out", Tensor::glorot(in, out, rng));
  add_parameter("b_out", Tensor::zeros(1, out, true));
}

Batch MlpModel::make_batch(std::span<const LabeledSample* const> samples) const {
  const auto m = static_cast<Eigen::Index>(spec_.max_n);
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Batch batch;
  batch.inputs.resize(rows, static_cast<Eigen::Index>(input_width()));
  batch.targets.resize(rows, m);
  batch.mask.resize(rows, m);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& s = *samples[static_cast<std::size_t>(i)];
    require_padded(s, spec_.max_n);
    batch.inputs.row(i).head(m) = s.features.col(0).transpose();
    const Matrix adj = s.topology.to_matrix();
    batch.inputs.row(i).tail(m * m) = Eigen::Map<const Eigen::RowVectorXd>(adj.data(), m * m);
    batch.targets.row(i) = s.labels.transpose();
    batch.mask.row(i) = s.mask().transpose();
    std::vector<Eigen::Index> pos(s.real_nodes);
    for (std::size_t a = 0; a < s.real_nodes; ++a) pos[a] = i * m + static_cast<Eigen::Index>(a);
    batch.positions.push_back(std::move(pos));
  }
  return batch;
}

Tensor MlpModel::forward(Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const {
  Tensor h = Tensor::from_op(batch.inputs, false);
  const std::size_t blocks = spec_.hidden.size();
  for (std::size_t l = 0; l < blocks; ++l) {
    h = ad::relu(tape, dense(tape, h, params_[2 * l], params_[2 * l + 1]));
    h = ad::dropout(tape, h, spec_.dropout, training, rng);
  }
  return dense(tape, h, params_[2 * blocks], params_[2 * blocks + 1]);
}

Vector MlpModel::forward(const Vector& loads, const Matrix& adjacency, bool training, ad::Rng& rng) const {
  const auto m = static_cast<Eigen::Index>(spec_.max_n);
  if (loads.size() != m || adjacency.rows() != m || adjacency.cols() != m) {
    throw Error(ErrorKind::ShapeMismatch, "unpadded input");
  }
  Batch batch;
  batch.inputs.resize(1, static_cast<Eigen::Index>(input_width()));
  batch.inputs.row(0).head(m) = loads.transpose();
  batch.inputs.row(0).tail(m * m) = Eigen::Map<const Eigen::RowVectorXd>(adjacency.data(), m * m);
  Tape tape;
  return forward(tape, batch, training, rng).value().row(0).transpose();
}

// ---------------------------------------------------------------------------
// LSTM

LstmModel::LstmModel(ModelSpec spec, ad::Rng& rng) : Model(std::move(spec)) {
  spec_.validate();
  auto in = static_cast<Eigen::Index>(2 * spec_.max_n);
  for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
    const auto units = static_cast<Eigen::Index>(spec_.hidden[l]);
    std::array<Direction, 2> dirs{};
    for (int d = 0; d < 2; ++d) {
      const std::string tag = std::to_string(l) + (d == 0 ? "_fwd" : "_bwd");
      dirs[d].input_weight = params_.size();
      add_parameter("Wx" + tag, Tensor::glorot(in, 4 * units, rng));
      dirs[d].recurrent_weight = params_.size();
      add_parameter("Wh" + tag, Tensor::glorot(units, 4 * units, rng));
      dirs[d].bias = params_.size();
      Matrix bias = Matrix::Zero(1, 4 * units);
      bias.middleCols(units, units).setOnes();  // forget gate starts open
      add_parameter("b" + tag, Tensor::from_op(std::move(bias), true));
    }
    layers_.push_back(dirs);
    in = 2 * units;
  }
  head_weight_ = params_.size();
  add_parameter("W_out", Tensor::glorot(in, 1, rng));
  head_bias_ = params_.size();
  add_parameter("b_out", Tensor::zeros(1, 1, true));
}

Batch LstmModel::make_batch(std::span<const LabeledSample* const> samples) const {
  const auto m = static_cast<Eigen::Index>(spec_.max_n);
  const auto b = static_cast<Eigen::Index>(samples.size());
  Batch batch;
  batch.inputs.resize(m * b, 2 * m);
  batch.targets.resize(m * b, 1);
  batch.mask.resize(m * b, 1);
  for (Eigen::Index s = 0; s < b; ++s) {
    const auto& sample = *samples[static_cast<std::size_t>(s)];
    require_padded(sample, spec_.max_n);
    const Matrix adj = sample.topology.to_matrix();
    const Vector mask = sample.mask();
    for (Eigen::Index t = 0; t < m; ++t) {
      const Eigen::Index row = t * b + s;
      batch.inputs.row(row).head(m) = sample.features.col(0).transpose();
      batch.inputs.row(row).tail(m) = adj.row(t);
      batch.targets(row, 0) = sample.labels(t);
      batch.mask(row, 0) = mask(t);
    }
    std::vector<Eigen::Index> pos(sample.real_nodes);
    for (std::size_t a = 0; a < sample.real_nodes; ++a) pos[a] = static_cast<Eigen::Index>(a) * b + s;
    batch.positions.push_back(std::move(pos));
  }
  return batch;
}

Tensor LstmModel::run_direction(Tape& tape, const Tensor& projected, const Direction& dir,
                                std::size_t units, Eigen::Index timesteps, Eigen::Index batch,
                                bool reverse, std::vector<Tensor>& outputs) const {
  const auto u = static_cast<Eigen::Index>(units);
  const Tensor& recurrent = params_[dir.recurrent_weight];
  Tensor h = Tensor::zeros(batch, u);
  Tensor c = Tensor::zeros(batch, u);
  outputs.assign(static_cast<std::size_t>(timesteps), Tensor{});
  for (Eigen::Index step = 0; step < timesteps; ++step) {
    const Eigen::Index t = reverse ? timesteps - 1 - step : step;
    Tensor gates = ad::slice_rows(tape, projected, t * batch, batch);
    if (step > 0) gates = ad::add(tape, gates, ad::matmul(tape, h, recurrent));
    const Tensor in_gate = ad::sigmoid(tape, ad::slice_columns(tape, gates, 0, u));
    const Tensor forget_gate = ad::sigmoid(tape, ad::slice_columns(tape, gates, u, u));
    const Tensor candidate = ad::tanh(tape, ad::slice_columns(tape, gates, 2 * u, u));
    const Tensor out_gate = ad::sigmoid(tape, ad::slice_columns(tape, gates, 3 * u, u));
    const Tensor fresh = ad::mul(tape, in_gate, candidate);
    c = step > 0 ? ad::add(tape, ad::mul(tape, forget_gate, c), fresh) : fresh;
    h = ad::mul(tape, out_gate, ad::tanh(tape, c));
    outputs[static_cast<std::size_t>(t)] = h;
  }
  return h;
}

Tensor LstmModel::forward(Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const {
  const auto timesteps = static_cast<Eigen::Index>(spec_.max_n);
  const Eigen::Index b = batch.inputs.rows() / timesteps;
  Tensor x = Tensor::from_op(batch.inputs, false);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    std::array<std::vector<Tensor>, 2> outs;
    for (int d = 0; d < 2; ++d) {
      const Direction& dir = layers_[l][static_cast<std::size_t>(d)];
      const Tensor projected = dense(tape, x, params_[dir.input_weight], params_[dir.bias]);
      run_direction(tape, projected, dir, spec_.hidden[l], timesteps, b, d == 1, outs[static_cast<std::size_t>(d)]);
    }
    std::vector<Tensor> steps;
    steps.reserve(static_cast<std::size_t>(timesteps));
    for (Eigen::Index t = 0; t < timesteps; ++t) {
      const std::array<Tensor, 2> pair{outs[0][static_cast<std::size_t>(t)], outs[1][static_cast<std::size_t>(t)]};
      steps.push_back(ad::concat_columns(tape, pair));
    }
    x = ad::dropout(tape, ad::concat_rows(tape, steps), spec_.dropout, training, rng);
  }
  return dense(tape, x, params_[head_weight_], params_[head_bias_]);
}

Vector LstmModel::forward(const Vector& loads, const Matrix& adjacency, bool training, ad::Rng& rng) const {
  const auto m = static_cast<Eigen::Index>(spec_.max_n);
  if (loads.size() != m || adjacency.rows() != m || adjacency.cols() != m) {
    throw Error(ErrorKind::ShapeMismatch, "unpadded input");
  }
  Batch batch;
  batch.inputs.resize(m, 2 * m);
  for (Eigen::Index t = 0; t < m; ++t) {
    batch.inputs.row(t).head(m) = loads.transpose();
    batch.inputs.row(t).tail(m) = adjacency.row(t);
  }
  Tape tape;
  return forward(tape, batch, training, rng).value().col(0);
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, ad::Rng& rng) {
  switch (spec.kind) {
    case ModelKind::Mlp: return std::make_unique<MlpModel>(spec, rng);
    case ModelKind::Lstm: return std::make_unique<LstmModel>(spec, rng);
    case ModelKind::Gcn: break;
  }
  return std::make_unique<GcnModel>(spec, rng);
}

}  // namespace airtime::models
