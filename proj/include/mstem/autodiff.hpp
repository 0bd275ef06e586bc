#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mstem/common.hpp"

namespace mstem::ad {

// A trainable tensor that outlives any single tape: holds the current value
// and the gradient accumulated by the most recent backward pass.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  Index id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

// Running statistics for batch normalization; part of the model state and
// saved alongside the parameters.
struct BatchNormState {
  Matrix running_mean;  // 1 x f
  Matrix running_var;   // 1 x f, starts at 1 so eval mode works untrained

  explicit BatchNormState(Index features = 0)
      : running_mean(Matrix::Zero(1, features)), running_var(Matrix::Ones(1, features)) {}
};

enum class Activation { Relu, Sigmoid, Tanh };

// Records a forward pass as an ordered list of nodes and replays it in exact
// reverse order on backward(). One tape per forward pass; reset() between
// passes leaves no stale entries.
class Tape {
 public:
  // Differentiable input: gradient stays on the node (read via Var::grad()).
  Var input(Matrix value);
  // Non-differentiable value; backward never propagates into it.
  Var constant(Matrix value);
  // Leaf bound to a Parameter: backward accumulates into param.grad.
  Var leaf(Parameter& param);

  // Seeds d(loss)/d(loss) = 1 and pulls gradients through every recorded
  // operation in reverse execution order. loss must be 1x1.
  void backward(Var loss);

  // Attaches the backward closure of an op to its output node.
  void set_pull(Var v, std::function<void()> pull);

  void reset();
  std::size_t size() const { return nodes_.size(); }

 private:
  friend struct Var;

  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> pull;  // empty for leaves/constants/inputs
    Parameter* param = nullptr;
  };

  Var push(Matrix value, std::function<void()> pull);
  Node& node(Index id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(Index id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
};

// Gradient accumulation target for op backward closures.
Matrix& grad_of(Var v);

// ---------------------------------------------------------------------------
// Operations. Forward values are computed eagerly; each op records a pull
// closure that accumulates input gradients from the output gradient.
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var x, Scalar c);
Var transpose(Var x);
Var sum(Var x);  // 1x1
// bias is 1xF, added to every row of x (NxF).
Var add_row_broadcast(Var x, Var bias);
Var activation(Var x, Activation kind);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh_op(Var x);

// Row gather; an index of -1 produces a zero row. Backward scatter-adds into
// the gathered rows only.
Var select_rows(Var x, const std::vector<Index>& indices);
// [a b] side by side; rows must match.
Var hstack(Var a, Var b);

// Batched block operations. A stacked matrix holds B equally sized blocks of
// consecutive rows; these apply a per-block transform so a whole window batch
// runs through one tape node.
//
// out_b = M * X_b for every block b; m is p x q, blocks are q rows tall.
Var block_left_multiply(Var m, Var x, Index block_rows);
// Each block of block_rows rows is transposed in place in the stack.
Var transpose_blocks(Var x, Index block_rows);
// Each row of x (length r*c) becomes an r x c block, row-major.
Var rows_to_blocks(Var x, Index block_rows, Index block_cols);

// Mean over elements of the Huber penalty; gradient is clipped-error / count.
Var huber_loss(Var pred, const Matrix& target, Scalar delta);

// Train mode normalizes by batch mean / population variance and updates the
// running stats (momentum 0.1); eval mode uses the running stats. gamma and
// beta are 1xF.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool train,
               Scalar eps = 1e-5, Scalar momentum = 0.1);

// Inverted dropout: train mode zeroes with probability p and scales survivors
// by 1/(1-p); eval mode is the identity.
Var dropout(Var x, Scalar p, bool train, std::mt19937_64& gen);

}  // namespace mstem::ad
