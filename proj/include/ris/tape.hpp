#ifndef RIS_TAPE_HPP_
#define RIS_TAPE_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "ris/tensor.hpp"

namespace ris::autodiff {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run reverse-mode tape. Every value is a dense matrix; scalars are
// 1x1. A graph is built for one loss evaluation and discarded afterwards.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf whose gradient can be read back with grad() after backward().
  Var variable(Matrix value);
  // Leaf bound to a parameter. When `trainable`, backward() accumulates into
  // param.grad; otherwise the parameter acts as a constant.
  Var parameter(Parameter& param, bool trainable = true);

  // Reverse sweep from a 1x1 loss. Node gradients are recomputed on every call;
  // parameter gradients accumulate until the caller resets them.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of the last backward() with respect to a node (zeros if unreached).
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  // Op plumbing.
  Var push(Matrix value, bool requires_grad, BackwardFn backward);
  void accumulate(std::size_t id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(std::size_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
};

// Linear algebra.
Var matmul(Var a, Var b);
// a (R x C) plus a 1 x C row broadcast over rows.
Var add_row(Var a, Var row);

// Elementwise binary ops on same-shape operands.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var maximum(Var a, Var b);
// Multiplies by a constant matrix of the same shape, or an R x 1 column broadcast.
Var mul_const(Var a, const Matrix& c);

Var scale(Var a, double c);
Var shift(Var a, double c);
Var neg(Var a);

// Elementwise unary ops.
Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
Var square(Var a);
Var atanh(Var a);
// Gradient is zero where the input lies outside [lo, hi].
Var clamp(Var a, double lo, double hi);

// Shape ops.
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
// Each row repeated `times` times consecutively.
Var repeat_rows(Var a, Eigen::Index times);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);

// Reductions.
Var row_sum(Var a);
Var sum(Var a);
Var mean(Var a);
// Row-wise log((1/K) * sum_k exp(a_rk) + eps), max-shifted. Output is R x 1.
Var log_mean_exp_eps(Var a, double eps);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator+(Var a, double c) { return shift(a, c); }
inline Var operator-(Var a, double c) { return shift(a, -c); }

}  // namespace ris::autodiff

#endif  // RIS_TAPE_HPP_
