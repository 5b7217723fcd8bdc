#pragma once

// Dense 2-D tensors with tape-based reverse-mode differentiation.
//
// A Tape records one closure per differentiable op in execution order;
// Tape::backward replays them in reverse. Tensors are shared handles, so a
// model's parameters outlive the tapes that read them and accumulate
// gradients across ops until zero_grad().

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "airtime/domain.hpp"

namespace airtime::ad {

using Rng = std::mt19937_64;

class Tensor {
 public:
  Tensor() = default;
  /// Rejects non-finite values.
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false);
  /// Uniform on +-sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng);

  bool defined() const noexcept { return static_cast<bool>(data_); }
  Eigen::Index rows() const { return data_->value.rows(); }
  Eigen::Index cols() const { return data_->value.cols(); }
  bool requires_grad() const { return data_->requires_grad; }
  const Matrix& value() const { return data_->value; }
  Matrix& mutable_value() { return data_->value; }
  /// Zeros of the value's shape until some gradient has been accumulated.
  const Matrix& grad() const;
  bool has_grad() const { return data_->grad.size() != 0; }
  void zero_grad() const { data_->grad.resize(0, 0); }
  void accumulate_grad(const Matrix& g) const;
  /// Adds `g` into the block of the gradient starting at (row, col).
  void accumulate_grad_block(Eigen::Index row, Eigen::Index col, const Matrix& g) const;
  double scalar() const;

  bool same_as(const Tensor& other) const noexcept { return data_ == other.data_; }

  /// Wraps an op result without the finiteness scan.
  static Tensor from_op(Matrix value, bool requires_grad);

 private:
  struct Data {
    Matrix value;
    mutable Matrix grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Data> data_;
};

class Tape {
 public:
  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }
  /// Seeds d(loss)/d(loss) = 1 and replays every entry once, newest first.
  /// A second call without reset() throws.
  void backward(const Tensor& loss);
  void reset();
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<std::function<void()>> entries_;
  bool consumed_ = false;
};

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
/// a + 1xc row vector broadcast over rows.
Tensor add_row(Tape& tape, const Tensor& a, const Tensor& row);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scalar_mul(Tape& tape, const Tensor& a, double s);
Tensor concat_columns(Tape& tape, std::span<const Tensor> parts);
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
Tensor slice_columns(Tape& tape, const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_rows(Tape& tape, const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);

/// Inverted dropout: zero with probability `rate`, scale survivors by 1/(1-rate).
/// Returns `x` itself when not training or when rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng);

/// Block-diagonal propagation: rows [offsets[i], offsets[i] + blocks[i].rows()) of `h`
/// are replaced by blocks[i] times those rows. Blocks are constants.
Tensor block_propagate(Tape& tape, std::span<const Matrix* const> blocks,
                       std::span<const Eigen::Index> offsets, const Tensor& h);

/// Mean of squared differences over all entries.
Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target);
/// Squared error averaged over entries where `mask` is nonzero.
Tensor masked_mse_loss(Tape& tape, const Tensor& pred, const Matrix& target, const Matrix& mask);
/// sum(a .* weights) for a constant weight matrix.
Tensor weighted_sum(Tape& tape, const Tensor& a, const Matrix& weights);

struct OptimizerConfig {
  enum class Kind { Adam, GradientDescent };
  Kind kind = Kind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  Optimizer(std::vector<Tensor> params, OptimizerConfig config);

  /// Applies one update from the accumulated gradients, then clears them.
  void step();
  void zero_grad();
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  std::vector<Tensor> params_;
  OptimizerConfig config_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  long step_count_ = 0;
};

/// Op under test: builds a tensor from the given leaves on the given tape.
using DiffOp = std::function<Tensor(Tape&, std::span<const Tensor>)>;

/// Central differences against reverse-mode gradients of sum(op(inputs) .* R) for a
/// fixed pseudo-random R. Returns max |a-b| / max(|a|, |b|, 1e-8) over input entries.
double finite_diff_check(const DiffOp& op, std::span<const Matrix> inputs, double epsilon = 1e-5,
                         std::uint64_t projection_seed = 7);

}  // namespace airtime::ad
