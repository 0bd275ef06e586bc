#include "mstem/autodiff.hpp"

#include <cmath>
#include <utility>

namespace mstem::ad {

const Matrix& Var::value() const { return tape->node(id).value; }
const Matrix& Var::grad() const { return tape->node(id).grad; }

Matrix& grad_of(Var v) { return const_cast<Matrix&>(v.grad()); }

Var Tape::push(Matrix value, std::function<void()> pull) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<Index>(nodes_.size()) - 1};
}

Var Tape::input(Matrix value) { return push(std::move(value), {}); }

Var Tape::constant(Matrix value) { return push(std::move(value), {}); }

Var Tape::leaf(Parameter& param) {
  Var v = push(param.value, {});
  node(v.id).param = &param;
  return v;
}

void Tape::set_pull(Var v, std::function<void()> pull) { node(v.id).pull = std::move(pull); }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss lives on a different tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_str(loss.value()));
  }
  node(loss.id).grad(0, 0) = 1.0;
  for (Index i = loss.id; i >= 0; --i) {
    Node& n = node(i);
    if (n.pull) n.pull();
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

void Tape::reset() { nodes_.clear(); }

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw ContractError(std::string(op) + ": operands on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) throw dimension_mismatch("matmul", a.value(), b.value());
  Var r = a.tape->input(a.value() * b.value());
  a.tape->set_pull(r, [a, b, r]() {
    grad_of(a).noalias() += r.grad() * b.value().transpose();
    grad_of(b).noalias() += a.value().transpose() * r.grad();
  });
  return r;
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw dimension_mismatch("add", a.value(), b.value());
  }
  Var r = a.tape->input(a.value() + b.value());
  a.tape->set_pull(r, [a, b, r]() {
    grad_of(a) += r.grad();
    grad_of(b) += r.grad();
  });
  return r;
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw dimension_mismatch("sub", a.value(), b.value());
  }
  Var r = a.tape->input(a.value() - b.value());
  a.tape->set_pull(r, [a, b, r]() {
    grad_of(a) += r.grad();
    grad_of(b) -= r.grad();
  });
  return r;
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b, "hadamard");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw dimension_mismatch("hadamard", a.value(), b.value());
  }
  Var r = a.tape->input(a.value().cwiseProduct(b.value()));
  a.tape->set_pull(r, [a, b, r]() {
    grad_of(a) += r.grad().cwiseProduct(b.value());
    grad_of(b) += r.grad().cwiseProduct(a.value());
  });
  return r;
}

Var scale(Var x, Scalar c) {
  Var r = x.tape->input(x.value() * c);
  x.tape->set_pull(r, [x, c, r]() { grad_of(x) += r.grad() * c; });
  return r;
}

Var transpose(Var x) {
  Var r = x.tape->input(x.value().transpose());
  x.tape->set_pull(r, [x, r]() { grad_of(x) += r.grad().transpose(); });
  return r;
}

Var sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, r]() { grad_of(x).array() += r.grad()(0, 0); });
  return r;
}

Var add_row_broadcast(Var x, Var bias) {
  require_same_tape(x, bias, "add_row_broadcast");
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw dimension_mismatch("add_row_broadcast", x.value(), bias.value());
  }
  Matrix out = x.value().rowwise() + bias.value().row(0);
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, bias, r]() {
    grad_of(x) += r.grad();
    grad_of(bias).row(0) += r.grad().colwise().sum();
  });
  return r;
}

Var activation(Var x, Activation kind) {
  Matrix out;
  switch (kind) {
    case Activation::Relu:
      out = x.value().cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      out = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
      break;
    case Activation::Tanh:
      out = x.value().array().tanh().matrix();
      break;
  }
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, kind, r]() {
    switch (kind) {
      case Activation::Relu:
        grad_of(x).array() += r.grad().array() * (x.value().array() > 0.0).cast<Scalar>();
        break;
      case Activation::Sigmoid: {
        const auto s = r.value().array();
        grad_of(x).array() += r.grad().array() * s * (1.0 - s);
        break;
      }
      case Activation::Tanh: {
        const auto t = r.value().array();
        grad_of(x).array() += r.grad().array() * (1.0 - t * t);
        break;
      }
    }
  });
  return r;
}

Var relu(Var x) { return activation(x, Activation::Relu); }
Var sigmoid(Var x) { return activation(x, Activation::Sigmoid); }
Var tanh_op(Var x) { return activation(x, Activation::Tanh); }

Var select_rows(Var x, const std::vector<Index>& indices) {
  const Index n = static_cast<Index>(indices.size());
  Matrix out = Matrix::Zero(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    const Index src = indices[static_cast<std::size_t>(i)];
    if (src < 0) continue;  // sentinel: zero row
    if (src >= x.rows()) throw ParameterError("select_rows: index out of range");
    out.row(i) = x.value().row(src);
  }
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, indices, r]() {
    for (Index i = 0; i < r.rows(); ++i) {
      const Index src = indices[static_cast<std::size_t>(i)];
      if (src >= 0) grad_of(x).row(src) += r.grad().row(i);
    }
  });
  return r;
}

Var hstack(Var a, Var b) {
  require_same_tape(a, b, "hstack");
  if (a.rows() != b.rows()) throw dimension_mismatch("hstack", a.value(), b.value());
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  Var r = a.tape->input(std::move(out));
  a.tape->set_pull(r, [a, b, r]() {
    grad_of(a) += r.grad().leftCols(a.cols());
    grad_of(b) += r.grad().rightCols(b.cols());
  });
  return r;
}

Var block_left_multiply(Var m, Var x, Index block_rows) {
  require_same_tape(m, x, "block_left_multiply");
  if (block_rows < 1 || x.rows() % block_rows != 0) {
    throw DimensionError("block_left_multiply: stack of " + std::to_string(x.rows()) +
                         " rows is not a multiple of block height " + std::to_string(block_rows));
  }
  if (m.cols() != block_rows) throw dimension_mismatch("block_left_multiply", m.value(), x.value());
  const Index blocks = x.rows() / block_rows;
  const Index out_rows = m.rows();
  Matrix out(blocks * out_rows, x.cols());
  for (Index b = 0; b < blocks; ++b) {
    out.middleRows(b * out_rows, out_rows).noalias() =
        m.value() * x.value().middleRows(b * block_rows, block_rows);
  }
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [m, x, block_rows, blocks, out_rows, r]() {
    for (Index b = 0; b < blocks; ++b) {
      const auto dy = r.grad().middleRows(b * out_rows, out_rows);
      grad_of(m).noalias() += dy * x.value().middleRows(b * block_rows, block_rows).transpose();
      grad_of(x).middleRows(b * block_rows, block_rows).noalias() += m.value().transpose() * dy;
    }
  });
  return r;
}

Var transpose_blocks(Var x, Index block_rows) {
  if (block_rows < 1 || x.rows() % block_rows != 0) {
    throw DimensionError("transpose_blocks: stack of " + std::to_string(x.rows()) +
                         " rows is not a multiple of block height " + std::to_string(block_rows));
  }
  const Index blocks = x.rows() / block_rows;
  const Index c = x.cols();
  Matrix out(blocks * c, block_rows);
  for (Index b = 0; b < blocks; ++b) {
    out.middleRows(b * c, c) = x.value().middleRows(b * block_rows, block_rows).transpose();
  }
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, block_rows, blocks, c, r]() {
    for (Index b = 0; b < blocks; ++b) {
      grad_of(x).middleRows(b * block_rows, block_rows) +=
          r.grad().middleRows(b * c, c).transpose();
    }
  });
  return r;
}

Var rows_to_blocks(Var x, Index block_rows, Index block_cols) {
  if (x.cols() != block_rows * block_cols) {
    throw DimensionError("rows_to_blocks: row length " + std::to_string(x.cols()) +
                         " does not factor into " + shape_str(block_rows, block_cols));
  }
  const Index blocks = x.rows();
  Matrix out(blocks * block_rows, block_cols);
  for (Index b = 0; b < blocks; ++b) {
    for (Index i = 0; i < block_rows; ++i) {
      for (Index j = 0; j < block_cols; ++j) {
        out(b * block_rows + i, j) = x.value()(b, i * block_cols + j);
      }
    }
  }
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, block_rows, block_cols, blocks, r]() {
    for (Index b = 0; b < blocks; ++b) {
      for (Index i = 0; i < block_rows; ++i) {
        for (Index j = 0; j < block_cols; ++j) {
          grad_of(x)(b, i * block_cols + j) += r.grad()(b * block_rows + i, j);
        }
      }
    }
  });
  return r;
}

Var huber_loss(Var pred, const Matrix& target, Scalar delta) {
  if (delta <= 0.0) throw ParameterError("huber_loss: delta must be positive");
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw dimension_mismatch("huber_loss", pred.value(), target);
  }
  const Matrix err = pred.value() - target;
  const Scalar count = static_cast<Scalar>(err.size());
  Scalar total = 0.0;
  for (Index j = 0; j < err.cols(); ++j) {
    for (Index i = 0; i < err.rows(); ++i) {
      const Scalar a = std::abs(err(i, j));
      total += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total / count;
  Var r = pred.tape->input(std::move(out));
  pred.tape->set_pull(r, [pred, err, delta, count, r]() {
    const Scalar g = r.grad()(0, 0) / count;
    grad_of(pred).array() += g * err.array().min(delta).max(-delta);
  });
  return r;
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool train, Scalar eps,
               Scalar momentum) {
  require_same_tape(x, gamma, "batch_norm");
  const Index f = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != f || beta.rows() != 1 || beta.cols() != f) {
    throw dimension_mismatch("batch_norm", x.value(), gamma.value());
  }
  if (state.running_mean.cols() != f) {
    throw ContractError("batch_norm: running stats have " +
                        std::to_string(state.running_mean.cols()) + " features, input has " +
                        std::to_string(f));
  }
  const Index n = x.rows();
  if (n < 1) throw ContractError("batch_norm: empty batch");

  Matrix mean, inv_std, xhat;
  if (train) {
    mean = x.value().colwise().mean();
    Matrix centered = x.value().rowwise() - mean.row(0);
    Matrix var = centered.array().square().colwise().mean().matrix();
    inv_std = (var.array() + eps).rsqrt().matrix();
    xhat = centered.array().rowwise() * inv_std.row(0).array();
    state.running_mean = (1.0 - momentum) * state.running_mean + momentum * mean;
    state.running_var = (1.0 - momentum) * state.running_var + momentum * var;
  } else {
    mean = state.running_mean;
    inv_std = (state.running_var.array() + eps).rsqrt().matrix();
    xhat = (x.value().rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array();
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix().rowwise() +
               beta.value().row(0);
  Var r = x.tape->input(std::move(out));
  x.tape->set_pull(r, [x, gamma, beta, xhat, inv_std, train, n, r]() {
    const auto& dy = r.grad();
    grad_of(beta).row(0) += dy.colwise().sum();
    grad_of(gamma).row(0) += dy.cwiseProduct(xhat).colwise().sum();
    Matrix dxhat = dy.array().rowwise() * gamma.value().row(0).array();
    if (!train) {
      grad_of(x) += (dxhat.array().rowwise() * inv_std.row(0).array()).matrix();
      return;
    }
    const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
    Matrix sum_dxhat = dxhat.colwise().sum();
    Matrix sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
    Matrix dx = dxhat * static_cast<Scalar>(n);
    dx.rowwise() -= sum_dxhat.row(0);
    dx -= (xhat.array().rowwise() * sum_dxhat_xhat.row(0).array()).matrix();
    dx = ((dx.array().rowwise() * inv_std.row(0).array()) * inv_n).matrix();
    grad_of(x) += dx;
  });
  return r;
}

Var dropout(Var x, Scalar p, bool train, std::mt19937_64& gen) {
  if (p < 0.0 || p >= 1.0) {
    throw ParameterError("dropout: rate must be in [0,1), got " + std::to_string(p));
  }
  if (!train || p == 0.0) {
    Var r = x.tape->input(x.value());
    x.tape->set_pull(r, [x, r]() { grad_of(x) += r.grad(); });
    return r;
  }
  const Scalar keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index j = 0; j < mask.cols(); ++j) {
    for (Index i = 0; i < mask.rows(); ++i) {
      mask(i, j) = uniform01(gen) < p ? 0.0 : keep_scale;
    }
  }
  Var r = x.tape->input(x.value().cwiseProduct(mask));
  x.tape->set_pull(r, [x, mask, r]() { grad_of(x) += r.grad().cwiseProduct(mask); });
  return r;
}

}  // namespace mstem::ad
