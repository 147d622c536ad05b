#include "gial/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gial/error.hpp"

namespace gial {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractViolation("Var::item on non-scalar node of shape " + v.shape_string());
  }
  return v[0];
}

Var Tape::constant(Matrix value) { return push(std::move(value), {}, nullptr); }

Var Tape::param(Parameter& p) {
  Node node;
  node.value = p.value;
  node.param = &p;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad =
      std::any_of(parents.begin(), parents.end(), [&](std::size_t p) { return nodes_[p].requires_grad; });
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractViolation("backward: loss belongs to another tape");
  if (consumed_) throw ContractViolation("backward: tape already consumed; build a new tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractViolation("backward: loss must be 1x1, got " + lv.shape_string());
  }
  consumed_ = true;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr) continue;
    if (!n.grad.empty()) n.param->grad += n.grad;
    n.param->has_grad = true;
  }
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractViolation(std::string(op) + ": operands on different tapes");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Tape& t = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ia)) t.grad_buffer(ia) += matmul_nt(g, t.value(ib));
    if (t.requires_grad(ib)) t.grad_buffer(ib) += matmul_tn(t.value(ia), g);
  });
}

Var operator+(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g;
    if (t.requires_grad(ib)) t.grad_buffer(ib) += g;
  });
}

Var operator-(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  out -= b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ia)) t.grad_buffer(ia) += g;
    if (t.requires_grad(ib)) t.grad_buffer(ib) -= g;
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b, "hadamard");
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ia)) {
      Matrix& ga = t.grad_buffer(ia);
      const Matrix& vb = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_buffer(ib);
      const Matrix& va = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double s, double c) {
  Matrix out = a.value();
  for (double& v : out.values()) v = s * v + c;
  const std::size_t ia = a.id();
  return a.tape().push(std::move(out), {ia}, [ia, s](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_row(Var x, Var row) {
  require_same_tape(x, row, "add_row");
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw DimensionError("add_row: " + xv.shape_string() + " + row " + rv.shape_string());
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv[c];
  const std::size_t ix = x.id(), ir = row.id();
  return x.tape().push(std::move(out), {ix, ir}, [ix, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ix)) t.grad_buffer(ix) += g;
    if (t.requires_grad(ir)) {
      Matrix& gr = t.grad_buffer(ir);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().transposed(), {ia}, [ia](Tape& t, std::size_t self) {
    t.grad_buffer(ia) += t.output_grad(self).transposed();
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no operands");
  Tape& tape = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
                           std::to_string(rows));
    }
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  std::vector<std::size_t> parents = ids;
  return tape.push(std::move(out), std::move(parents),
                   [ids, widths](Tape& t, std::size_t self) {
                     const Matrix& g = t.output_grad(self);
                     std::size_t offset = 0;
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (t.requires_grad(ids[k])) {
                         Matrix& gp = t.grad_buffer(ids[k]);
                         for (std::size_t r = 0; r < g.rows(); ++r)
                           for (std::size_t c = 0; c < widths[k]; ++c) gp(r, c) += g(r, offset + c);
                       }
                       offset += widths[k];
                     }
                   });
}

Var concat_rows(std::span<const Var> parts) {
  std::vector<Var> transposed;
  transposed.reserve(parts.size());
  for (const Var& p : parts) transposed.push_back(transpose(p));
  return transpose(concat_cols(transposed));
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Matrix& v = a.value();
  Matrix out(rows.size(), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= v.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(rows[k]) + " out of " +
                           std::to_string(v.rows()));
    }
    for (std::size_t c = 0; c < v.cols(); ++c) out(k, c) = v(rows[k], c);
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.tape().push(std::move(out), {ia}, [ia, idx](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(idx[k], c) += g(k, c);
  });
}

Var prelu(Var x, Var slope) {
  require_same_tape(x, slope, "prelu");
  if (slope.rows() != 1 || slope.cols() != 1) {
    throw DimensionError("prelu: slope must be 1x1, got " + slope.value().shape_string());
  }
  const double a = slope.value()[0];
  Matrix out = x.value();
  for (double& v : out.values())
    if (v < 0.0) v *= a;
  const std::size_t ix = x.id(), is = slope.id();
  return x.tape().push(std::move(out), {ix, is}, [ix, is](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    const Matrix& xv = t.value(ix);
    const double a = t.value(is)[0];
    if (t.requires_grad(ix)) {
      Matrix& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] < 0.0 ? a * g[i] : g[i];
    }
    if (t.requires_grad(is)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] < 0.0) acc += xv[i] * g[i];
      t.grad_buffer(is)[0] += acc;
    }
  });
}

Var leaky_relu(Var x, double slope) {
  Matrix out = x.value();
  for (double& v : out.values())
    if (v < 0.0) v *= slope;
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), {ix}, [ix, slope](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    const Matrix& xv = t.value(ix);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] < 0.0 ? slope * g[i] : g[i];
  });
}

namespace {

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Var sigmoid(Var x) {
  Matrix out = x.value();
  for (double& v : out.values()) v = stable_sigmoid(v);
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    const Matrix& y = t.value(self);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

namespace {

// Shared by softmax_rows and masked_softmax_rows: given y = softmax(x) per row,
// dx_j = y_j (g_j − Σ_k g_k y_k). Masked entries have y = 0 and receive nothing.
void softmax_backward(Tape& t, std::size_t self, std::size_t ix) {
  const Matrix& g = t.output_grad(self);
  const Matrix& y = t.value(self);
  Matrix& gx = t.grad_buffer(ix);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
    for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - dot);
  }
}

}  // namespace

Var softmax_rows(Var x) {
  return masked_softmax_rows(x, Matrix(x.rows(), x.cols(), 1.0));
}

Var masked_softmax_rows(Var x, const Matrix& mask) {
  const Matrix& xv = x.value();
  require_same_shape(xv, mask, "masked_softmax_rows");
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols(); ++c)
      if (mask(r, c) != 0.0) mx = std::max(mx, xv(r, c));
    if (!std::isfinite(mx)) {
      throw ContractViolation("masked_softmax_rows: row " + std::to_string(r) + " fully masked");
    }
    double z = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      if (mask(r, c) == 0.0) continue;
      out(r, c) = std::exp(xv(r, c) - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) /= z;
  }
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), {ix},
                       [ix](Tape& t, std::size_t self) { softmax_backward(t, self, ix); });
}

Var outer_sum(Var col, Var row) {
  require_same_tape(col, row, "outer_sum");
  const Matrix& cv = col.value();
  const Matrix& rv = row.value();
  if (cv.cols() != 1 || rv.rows() != 1) {
    throw DimensionError("outer_sum: expects n×1 and 1×m, got " + cv.shape_string() + " and " +
                         rv.shape_string());
  }
  Matrix out(cv.rows(), rv.cols());
  for (std::size_t i = 0; i < cv.rows(); ++i)
    for (std::size_t j = 0; j < rv.cols(); ++j) out(i, j) = cv[i] + rv[j];
  const std::size_t ic = col.id(), ir = row.id();
  return col.tape().push(std::move(out), {ic, ir}, [ic, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    if (t.requires_grad(ic)) {
      Matrix& gc = t.grad_buffer(ic);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gc[i] += g(i, j);
    }
    if (t.requires_grad(ir)) {
      Matrix& gr = t.grad_buffer(ir);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
    }
  });
}

Var column_mean(Var x) {
  const Matrix& xv = x.value();
  if (xv.rows() == 0) throw ContractViolation("column_mean: empty input");
  Matrix out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows());
  out *= inv;
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), {ix}, [ix, inv](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += inv * g[c];
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const std::size_t ix = x.id();
  return x.tape().push(Matrix(1, 1, acc), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.output_grad(self)[0];
    for (double& v : t.grad_buffer(ix).values()) v += g;
  });
}

Var mean(Var x) {
  if (x.value().empty()) throw ContractViolation("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var square(Var x) { return hadamard(x, x); }

Var log_clamped(Var x, double eps) {
  Matrix out = x.value();
  std::size_t clamped = 0;
  for (double& v : out.values()) {
    if (v < eps) {
      v = eps;
      ++clamped;
    }
    v = std::log(v);
  }
  x.tape().note_saturation(clamped);
  const std::size_t ix = x.id();
  return x.tape().push(std::move(out), {ix}, [ix, eps](Tape& t, std::size_t self) {
    const Matrix& g = t.output_grad(self);
    const Matrix& xv = t.value(ix);
    Matrix& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] >= eps) gx[i] += g[i] / xv[i];
  });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

}  // namespace gial
