#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation as a node holding its forward value and a
// closure that pushes the node's gradient into its parents. Nodes are
// appended in evaluation order, so walking the tape backwards is a valid
// topological order. Learnable weights live in Parameter objects owned by
// the caller; Tape::param() creates a leaf bound to one, and backward()
// accumulates the leaf gradient into Parameter::grad.
//
// A tape is single-use: backward() may be called once. A second call throws
// ContractViolation rather than silently accumulating twice.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gial/matrix.hpp"

namespace gial {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Weight matrices take part in l2 regularization; biases and PReLU slopes do not.
  bool decay = true;
  /// Set by Tape::backward when a tape that referenced this parameter ran.
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool d = true)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()), decay(d) {}

  void zero_grad() {
    grad = Matrix(value.rows(), value.cols());
    has_grad = false;
  }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Scalar value of a 1×1 node.
  double item() const;

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1×1.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient of the last backward() w.r.t. a node; zero matrix if it never received one.
  Matrix grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Number of log arguments clamped by log_clamped() on this tape.
  std::size_t saturated_logs() const noexcept { return saturated_logs_; }
  void note_saturation(std::size_t count) { saturated_logs_ += count; }

  // Used by operation implementations.
  Var push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
  /// Gradient buffer for a node, allocated as zeros on first access.
  Matrix& grad_buffer(std::size_t id);
  const Matrix& output_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::size_t saturated_logs_ = 0;
  bool consumed_ = false;
};

// Operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
/// Elementwise product.
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// s·a + c elementwise.
Var affine(Var a, double s, double c);
/// Adds a 1×m row to every row of an n×m matrix.
Var add_row(Var x, Var row);
Var transpose(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> rows);
/// x for x ≥ 0, slope·x otherwise; `slope` is a 1×1 node and is differentiated.
Var prelu(Var x, Var slope);
Var leaky_relu(Var x, double slope);
Var sigmoid(Var x);
Var softmax_rows(Var x);
/// Row softmax restricted to entries where mask != 0; masked entries are 0.
/// Every row must keep at least one unmasked entry.
Var masked_softmax_rows(Var x, const Matrix& mask);
/// out(i,j) = col(i,0) + row(0,j).
Var outer_sum(Var col, Var row);
/// 1×m row of column means.
Var column_mean(Var x);
Var sum(Var x);
Var mean(Var x);
Var square(Var x);
/// log(max(x, eps)); clamped entries pass no gradient and are counted on the tape.
Var log_clamped(Var x, double eps = 1e-12);
/// Constant copy of a node's value; gradient does not flow through.
Var detach(Var x);

}  // namespace gial
