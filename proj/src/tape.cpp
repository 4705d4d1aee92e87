#include "ris/tape.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ris/errors.hpp"

namespace ris::autodiff {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + dims(a.value()) + " vs " + dims(b.value()));
  }
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands belong to different tapes");
}

// Shared plumbing for elementwise unary ops: `local` maps (input, output) to
// the elementwise derivative.
template <typename Forward, typename Local>
Var unary(Var a, Forward forward, Local local) {
  Tape& t = a.tape();
  Matrix out = forward(a.value());
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    const std::size_t ia = a.id();
    const std::size_t self = t.size();
    fn = [ia, self, local](Tape& tape, const Matrix& g) {
      Matrix d = local(tape.value(ia), tape.value(self));
      tape.accumulate_expr(ia, (g.array() * d.array()).matrix());
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::variable(Matrix value) { return push(std::move(value), true, {}); }

Var Tape::parameter(Parameter& param, bool trainable) {
  Matrix v = param.value.matrix();
  Var out = push(std::move(v), trainable, {});
  if (trainable) nodes_[out.id()].param = &param;
  return out;
}

Var Tape::push(Matrix value, bool requires_grad, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward), nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw UsageError("backward: loss belongs to a different tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw UsageError("backward: loss must be a scalar, got " + dims(lv));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      // The closure only touches other nodes' gradients, so this reference stays valid.
      n.backward(*this, n.grad);
    }
    if (n.param != nullptr) n.param->grad.matrix() += n.grad;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: inner dimension mismatch " + dims(a.value()) + " * " + dims(b.value()));
  }
  Tape& t = a.tape();
  Matrix out = a.value() * b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ib = b.id()](Tape& tape, const Matrix& g) {
      if (tape.requires_grad(ia)) tape.accumulate_expr(ia, g * tape.value(ib).transpose());
      if (tape.requires_grad(ib)) tape.accumulate_expr(ib, tape.value(ia).transpose() * g);
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ConfigError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " + dims(row.value()));
  }
  Tape& t = a.tape();
  Matrix out = a.value().rowwise() + row.value().row(0);
  const bool rg = a.requires_grad() || row.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ir = row.id()](Tape& tape, const Matrix& g) {
      tape.accumulate_expr(ia, g);
      if (tape.requires_grad(ir)) tape.accumulate_expr(ir, g.colwise().sum());
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Tape& t = a.tape();
  Matrix out = a.value() + b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ib = b.id()](Tape& tape, const Matrix& g) {
      tape.accumulate_expr(ia, g);
      tape.accumulate_expr(ib, g);
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tape& t = a.tape();
  Matrix out = a.value() - b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ib = b.id()](Tape& tape, const Matrix& g) {
      tape.accumulate_expr(ia, g);
      tape.accumulate_expr(ib, -g);
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tape& t = a.tape();
  Matrix out = a.value().cwiseProduct(b.value());
  const bool rg = a.requires_grad() || b.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ib = b.id()](Tape& tape, const Matrix& g) {
      if (tape.requires_grad(ia)) tape.accumulate_expr(ia, g.cwiseProduct(tape.value(ib)));
      if (tape.requires_grad(ib)) tape.accumulate_expr(ib, g.cwiseProduct(tape.value(ia)));
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

namespace {

// Shared by minimum/maximum: routes the gradient to whichever operand was
// selected; ties go to `a`.
template <typename Pick>
Var select_binary(Var a, Var b, const char* op, Pick pick_a) {
  require_same_tape(a, b);
  require_same_shape(a, b, op);
  Tape& t = a.tape();
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  Matrix out(va.rows(), va.cols());
  Matrix mask(va.rows(), va.cols());
  for (Eigen::Index i = 0; i < va.size(); ++i) {
    const bool take_a = pick_a(va.data()[i], vb.data()[i]);
    out.data()[i] = take_a ? va.data()[i] : vb.data()[i];
    mask.data()[i] = take_a ? 1.0 : 0.0;
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), ib = b.id(), mask = std::move(mask)](Tape& tape, const Matrix& g) {
      if (tape.requires_grad(ia)) tape.accumulate_expr(ia, g.cwiseProduct(mask));
      if (tape.requires_grad(ib)) {
        tape.accumulate_expr(ib, (g.array() * (1.0 - mask.array())).matrix());
      }
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

}  // namespace

Var minimum(Var a, Var b) {
  return select_binary(a, b, "minimum", [](double x, double y) { return x <= y; });
}

Var maximum(Var a, Var b) {
  return select_binary(a, b, "maximum", [](double x, double y) { return x >= y; });
}

Var mul_const(Var a, const Matrix& c) {
  Tape& t = a.tape();
  const bool column = c.cols() == 1 && a.cols() != 1 && c.rows() == a.rows();
  if (!column && (c.rows() != a.rows() || c.cols() != a.cols())) {
    throw ConfigError("mul_const: shape mismatch " + dims(a.value()) + " vs " + dims(c));
  }
  Matrix out = column ? Matrix(a.value().array().colwise() * c.col(0).array())
                      : Matrix(a.value().cwiseProduct(c));
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), c, column](Tape& tape, const Matrix& g) {
      if (column) {
        tape.accumulate_expr(ia, Matrix(g.array().colwise() * c.col(0).array()));
      } else {
        tape.accumulate_expr(ia, g.cwiseProduct(c));
      }
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var scale(Var a, double c) {
  Tape& t = a.tape();
  Matrix out = a.value() * c;
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), c](Tape& tape, const Matrix& g) { tape.accumulate_expr(ia, g * c); };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var shift(Var a, double c) {
  Tape& t = a.tape();
  Matrix out = (a.value().array() + c).matrix();
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id()](Tape& tape, const Matrix& g) { tape.accumulate_expr(ia, g); };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.cwiseMax(0.0)); },
      [](const Matrix& x, const Matrix&) { return Matrix((x.array() > 0.0).cast<double>()); });
}

Var tanh(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.array().tanh()); },
      [](const Matrix&, const Matrix& y) { return Matrix(1.0 - y.array().square()); });
}

Var exp(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.array().exp()); },
      [](const Matrix&, const Matrix& y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.array().log()); },
      [](const Matrix& x, const Matrix&) { return Matrix(x.array().inverse()); });
}

Var abs(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.array().abs()); },
      [](const Matrix& x, const Matrix&) {
        return Matrix(x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }));
      });
}

Var square(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.array().square()); },
      [](const Matrix& x, const Matrix&) { return Matrix(2.0 * x.array()); });
}

Var atanh(Var a) {
  return unary(
      a, [](const Matrix& x) { return Matrix(x.unaryExpr([](double v) { return std::atanh(v); })); },
      [](const Matrix& x, const Matrix&) { return Matrix((1.0 - x.array().square()).inverse()); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](const Matrix& x) { return Matrix(x.cwiseMax(lo).cwiseMin(hi)); },
      [lo, hi](const Matrix& x, const Matrix&) {
        return Matrix(((x.array() >= lo) && (x.array() <= hi)).cast<double>());
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no operands");
  Tape& t = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw ConfigError("concat_cols: row mismatch " + dims(parts.front().value()) + " vs " + dims(p.value()));
    }
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), p.cols());
    offset += p.cols();
  }
  Tape::BackwardFn fn;
  if (rg) {
    fn = [layout = std::move(layout)](Tape& tape, const Matrix& g) {
      Eigen::Index off = 0;
      for (const auto& [id, width] : layout) {
        if (tape.requires_grad(id)) tape.accumulate_expr(id, Matrix(g.middleCols(off, width)));
        off += width;
      }
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw ConfigError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                      ") out of " + dims(a.value()));
  }
  Tape& t = a.tape();
  Matrix out = a.value().middleCols(begin, count);
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), begin, count](Tape& tape, const Matrix& g) {
      const Matrix& v = tape.value(ia);
      Matrix full = Matrix::Zero(v.rows(), v.cols());
      full.middleCols(begin, count) = g;
      tape.accumulate_expr(ia, full);
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var repeat_rows(Var a, Eigen::Index times) {
  if (times < 1) throw UsageError("repeat_rows: times must be >= 1");
  Tape& t = a.tape();
  const Matrix& v = a.value();
  Matrix out(v.rows() * times, v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index k = 0; k < times; ++k) out.row(r * times + k) = v.row(r);
  }
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), times](Tape& tape, const Matrix& g) {
      const Eigen::Index rows = g.rows() / times;
      Matrix acc = Matrix::Zero(rows, g.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index k = 0; k < times; ++k) acc.row(r) += g.row(r * times + k);
      }
      tape.accumulate_expr(ia, acc);
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) {
    throw ConfigError("reshape: cannot view " + dims(a.value()) + " as " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  Tape& t = a.tape();
  Matrix out = ConstMatrixMap(a.value().data(), rows, cols);
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id()](Tape& tape, const Matrix& g) {
      const Matrix& v = tape.value(ia);
      tape.accumulate_expr(ia, Matrix(ConstMatrixMap(g.data(), v.rows(), v.cols())));
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var row_sum(Var a) {
  Tape& t = a.tape();
  Matrix out = a.value().rowwise().sum();
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id()](Tape& tape, const Matrix& g) {
      const Matrix& v = tape.value(ia);
      tape.accumulate_expr(ia, Matrix(g.col(0).replicate(1, v.cols())));
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var sum(Var a) {
  Tape& t = a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id()](Tape& tape, const Matrix& g) {
      const Matrix& v = tape.value(ia);
      tape.accumulate_expr(ia, Matrix::Constant(v.rows(), v.cols(), g(0, 0)));
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw UsageError("mean: empty operand");
  return scale(sum(a), 1.0 / n);
}

Var log_mean_exp_eps(Var a, double eps) {
  if (!(eps >= 0.0)) throw UsageError("log_mean_exp_eps: eps must be >= 0");
  Tape& t = a.tape();
  const Matrix& v = a.value();
  const Eigen::Index k = v.cols();
  const double log_k = std::log(static_cast<double>(k));
  const double log_eps = eps > 0.0 ? std::log(eps) : -std::numeric_limits<double>::infinity();
  Matrix out(v.rows(), 1);
  // Row weights d out / d a_rk = exp(a_rk) / (K * (mean_exp + eps)).
  Matrix weights(v.rows(), k);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = std::max(v.row(r).maxCoeff() - log_k, log_eps);
    const auto shifted = (v.row(r).array() - log_k - m).exp();
    const double total = shifted.sum() + std::exp(log_eps - m);
    out(r, 0) = m + std::log(total);
    weights.row(r) = shifted / total;
  }
  const bool rg = a.requires_grad();
  Tape::BackwardFn fn;
  if (rg) {
    fn = [ia = a.id(), weights = std::move(weights)](Tape& tape, const Matrix& g) {
      tape.accumulate_expr(ia, Matrix(weights.array().colwise() * g.col(0).array()));
    };
  }
  return t.push(std::move(out), rg, std::move(fn));
}

}  // namespace ris::autodiff
