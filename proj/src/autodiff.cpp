#include "airtime/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace airtime::ad {

namespace {

#if defined(__GLIBC__)
// Tape temporaries are freed and reallocated every step; keeping them on the
// heap instead of mmap/munmap halves training time.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and " << b.rows()
     << "x" << b.cols();
  throw Error(ErrorKind::ShapeMismatch, os.str());
}

bool any_grad(std::span<const Tensor> ts) {
  return std::any_of(ts.begin(), ts.end(), [](const Tensor& t) { return t.requires_grad(); });
}

}  // namespace

Tensor::Tensor(Matrix value, bool requires_grad) : data_(std::make_shared<Data>()) {
  if (!value.allFinite()) throw Error(ErrorKind::Numerical, "tensor values must be finite");
  data_->value = std::move(value);
  data_->requires_grad = requires_grad;
}

Tensor Tensor::from_op(Matrix value, bool requires_grad) {
  Tensor t;
  t.data_ = std::make_shared<Data>();
  t.data_->value = std::move(value);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
  return from_op(Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return from_op(std::move(m), true);
}

const Matrix& Tensor::grad() const {
  if (data_->grad.size() == 0) data_->grad = Matrix::Zero(rows(), cols());
  return data_->grad;
}

void Tensor::accumulate_grad(const Matrix& g) const {
  if (data_->grad.size() == 0) {
    data_->grad = g;
  } else {
    data_->grad += g;
  }
}

void Tensor::accumulate_grad_block(Eigen::Index row, Eigen::Index col, const Matrix& g) const {
  if (data_->grad.size() == 0) data_->grad = Matrix::Zero(rows(), cols());
  data_->grad.block(row, col, g.rows(), g.cols()) += g;
}

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1) throw Error(ErrorKind::ShapeMismatch, "tensor is not a scalar");
  return data_->value(0, 0);
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error(ErrorKind::InvalidArgument, "backward already ran on this tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw Error(ErrorKind::ShapeMismatch, "backward requires a scalar loss");
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.accumulate_grad(Matrix::Ones(1, 1));
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix v(a.rows(), b.cols());
  v.noalias() = a.value() * b.value();
  Tensor out = Tensor::from_op(std::move(v), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const Matrix& g = out.grad();
      if (a.requires_grad()) {
        Matrix ga(a.rows(), a.cols());
        ga.noalias() = g * b.value().transpose();
        a.accumulate_grad(ga);
      }
      if (b.requires_grad()) {
        Matrix gb(b.rows(), b.cols());
        gb.noalias() = a.value().transpose() * g;
        b.accumulate_grad(gb);
      }
    });
  }
  return out;
}

namespace {

Tensor add_scaled(Tape& tape, const Tensor& a, const Tensor& b, double sign, const char* name) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(name, a, b);
  Tensor out = Tensor::from_op(a.value() + sign * b.value(), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, b, out, sign]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.accumulate_grad(out.grad());
      if (b.requires_grad()) b.accumulate_grad(sign * out.grad());
    });
  }
  return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return add_scaled(tape, a, b, 1.0, "add"); }

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return add_scaled(tape, a, b, -1.0, "sub"); }

Tensor add_row(Tape& tape, const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a, row);
  Matrix v = a.value();
  v.rowwise() += row.value().row(0);
  Tensor out = Tensor::from_op(std::move(v), a.requires_grad() || row.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, row, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.accumulate_grad(out.grad());
      if (row.requires_grad()) row.accumulate_grad(out.grad().colwise().sum());
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  Tensor out = Tensor::from_op(a.value().cwiseProduct(b.value()),
                               a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.accumulate_grad(out.grad().cwiseProduct(b.value()));
      if (b.requires_grad()) b.accumulate_grad(out.grad().cwiseProduct(a.value()));
    });
  }
  return out;
}

Tensor scalar_mul(Tape& tape, const Tensor& a, double s) {
  Tensor out = Tensor::from_op(s * a.value(), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out, s]() mutable {
      if (out.has_grad()) a.accumulate_grad(s * out.grad());
    });
  }
  return out;
}

Tensor concat_columns(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "concat_columns: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error("concat_columns", parts.front(), p);
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  Tensor out = Tensor::from_op(std::move(v), any_grad(parts));
  if (out.requires_grad()) {
    tape.record([inputs = std::vector<Tensor>(parts.begin(), parts.end()), out]() mutable {
      if (!out.has_grad()) return;
      Eigen::Index col = 0;
      for (auto& p : inputs) {
        if (p.requires_grad()) p.accumulate_grad(out.grad().middleCols(col, p.cols()));
        col += p.cols();
      }
    });
  }
  return out;
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts.front(), p);
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  Tensor out = Tensor::from_op(std::move(v), any_grad(parts));
  if (out.requires_grad()) {
    tape.record([inputs = std::vector<Tensor>(parts.begin(), parts.end()), out]() mutable {
      if (!out.has_grad()) return;
      Eigen::Index row = 0;
      for (auto& p : inputs) {
        if (p.requires_grad()) p.accumulate_grad(out.grad().middleRows(row, p.rows()));
        row += p.rows();
      }
    });
  }
  return out;
}

Tensor slice_columns(Tape& tape, const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "slice_columns: range out of bounds");
  }
  Tensor out = Tensor::from_op(a.value().middleCols(start, count), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out, start]() mutable {
      if (out.has_grad()) a.accumulate_grad_block(0, start, out.grad());
    });
  }
  return out;
}

Tensor slice_rows(Tape& tape, const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "slice_rows: range out of bounds");
  }
  Tensor out = Tensor::from_op(a.value().middleRows(start, count), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out, start]() mutable {
      if (out.has_grad()) a.accumulate_grad_block(start, 0, out.grad());
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& a) {
  Tensor out = Tensor::from_op(a.value().cwiseMax(0.0), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      a.accumulate_grad((a.value().array() > 0.0).cast<double>().matrix().cwiseProduct(out.grad()));
    });
  }
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  Matrix v = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  Tensor out = Tensor::from_op(std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& y = out.value().array();
      a.accumulate_grad((out.grad().array() * y * (1.0 - y)).matrix());
    });
  }
  return out;
}

Tensor tanh(Tape& tape, const Tensor& a) {
  Tensor out = Tensor::from_op(a.value().array().tanh().matrix(), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& y = out.value().array();
      a.accumulate_grad((out.grad().array() * (1.0 - y * y)).matrix());
    });
  }
  return out;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = u(rng) < rate ? 0.0 : scale;
  Tensor out = Tensor::from_op(x.value().cwiseProduct(mask), x.requires_grad());
  if (out.requires_grad()) {
    tape.record([x, out, mask = std::move(mask)]() mutable {
      if (out.has_grad()) x.accumulate_grad(out.grad().cwiseProduct(mask));
    });
  }
  return out;
}

Tensor block_propagate(Tape& tape, std::span<const Matrix* const> blocks,
                       std::span<const Eigen::Index> offsets, const Tensor& h) {
  if (blocks.size() != offsets.size()) {
    throw Error(ErrorKind::InvalidArgument, "block_propagate: blocks/offsets length mismatch");
  }
  Matrix v = Matrix::Zero(h.rows(), h.cols());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Matrix& t = *blocks[i];
    if (t.rows() != t.cols() || offsets[i] < 0 || offsets[i] + t.rows() > h.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "block_propagate: block does not fit input rows");
    }
    v.middleRows(offsets[i], t.rows()).noalias() = t * h.value().middleRows(offsets[i], t.rows());
  }
  Tensor out = Tensor::from_op(std::move(v), h.requires_grad());
  if (out.requires_grad()) {
    tape.record([h, out, bl = std::vector<const Matrix*>(blocks.begin(), blocks.end()),
                 off = std::vector<Eigen::Index>(offsets.begin(), offsets.end())]() mutable {
      if (!out.has_grad()) return;
      Matrix g = Matrix::Zero(h.rows(), h.cols());
      for (std::size_t i = 0; i < bl.size(); ++i) {
        const Matrix& t = *bl[i];
        g.middleRows(off[i], t.rows()).noalias() = t.transpose() * out.grad().middleRows(off[i], t.rows());
      }
      h.accumulate_grad(g);
    });
  }
  return out;
}

Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) shape_error("mse_loss", pred, target);
  const Matrix diff = pred.value() - target.value();
  const auto count = static_cast<double>(diff.size());
  Matrix v(1, 1);
  v(0, 0) = diff.squaredNorm() / count;
  Tensor out = Tensor::from_op(std::move(v), pred.requires_grad() || target.requires_grad());
  if (out.requires_grad()) {
    tape.record([pred, target, out, diff, count]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()(0, 0);
      if (pred.requires_grad()) pred.accumulate_grad((2.0 * g / count) * diff);
      if (target.requires_grad()) target.accumulate_grad((-2.0 * g / count) * diff);
    });
  }
  return out;
}

Tensor masked_mse_loss(Tape& tape, const Tensor& pred, const Matrix& target, const Matrix& mask) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || mask.rows() != target.rows() ||
      mask.cols() != target.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "masked_mse_loss: prediction, target and mask shapes differ");
  }
  const double count = mask.sum();
  if (count <= 0.0) throw Error(ErrorKind::InvalidArgument, "masked_mse_loss: mask selects no entries");
  const Matrix diff = (pred.value() - target).cwiseProduct(mask);
  Matrix v(1, 1);
  v(0, 0) = diff.squaredNorm() / count;
  Tensor out = Tensor::from_op(std::move(v), pred.requires_grad());
  if (out.requires_grad()) {
    tape.record([pred, out, diff, count]() mutable {
      if (out.has_grad()) pred.accumulate_grad((2.0 * out.grad()(0, 0) / count) * diff);
    });
  }
  return out;
}

Tensor weighted_sum(Tape& tape, const Tensor& a, const Matrix& weights) {
  if (a.rows() != weights.rows() || a.cols() != weights.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "weighted_sum: weight shape differs from input");
  }
  Matrix v(1, 1);
  v(0, 0) = a.value().cwiseProduct(weights).sum();
  Tensor out = Tensor::from_op(std::move(v), a.requires_grad());
  if (out.requires_grad()) {
    tape.record([a, out, weights]() mutable {
      if (out.has_grad()) a.accumulate_grad(out.grad()(0, 0) * weights);
    });
  }
  return out;
}

Optimizer::Optimizer(std::vector<Tensor> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    first_moment_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_moment_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Optimizer::step() {
  ++step_count_;
  const double lr = config_.learning_rate;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const Matrix& g = p.grad();
    if (config_.kind == OptimizerConfig::Kind::GradientDescent) {
      p.mutable_value() -= lr * g;
    } else {
      first_moment_[i] = config_.beta1 * first_moment_[i] + (1.0 - config_.beta1) * g;
      second_moment_[i] = config_.beta2 * second_moment_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
      p.mutable_value().array() -= lr * (first_moment_[i].array() / bias1) /
                                   ((second_moment_[i].array() / bias2).sqrt() + config_.epsilon);
    }
  }
  zero_grad();
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double finite_diff_check(const DiffOp& op, std::span<const Matrix> inputs, double epsilon,
                         std::uint64_t projection_seed) {
  auto leaves_from = [&](std::span<const Matrix> values, bool grad) {
    std::vector<Tensor> leaves;
    for (const auto& m : values) leaves.emplace_back(m, grad);
    return leaves;
  };

  std::vector<Tensor> leaves = leaves_from(inputs, true);
  Tape tape;
  const Tensor out = op(tape, leaves);
  Rng rng(projection_seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix projection(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = u(rng);
  const Tensor loss = weighted_sum(tape, out, projection);
  tape.backward(loss);

  auto evaluate = [&](const std::vector<Matrix>& values) {
    Tape t;
    const auto ls = leaves_from(values, false);
    return op(t, ls).value().cwiseProduct(projection).sum();
  };

  double worst = 0.0;
  std::vector<Matrix> probe(inputs.begin(), inputs.end());
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const Matrix& analytic = leaves[k].grad();
    for (Eigen::Index i = 0; i < probe[k].size(); ++i) {
      const double orig = probe[k].data()[i];
      probe[k].data()[i] = orig + epsilon;
      const double up = evaluate(probe);
      probe[k].data()[i] = orig - epsilon;
      const double down = evaluate(probe);
      probe[k].data()[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic.data()[i];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace airtime::ad
