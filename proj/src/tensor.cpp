// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/tensor.hpp"

#include "mivae/error.hpp"

#include <cmath>
#include <string>

namespace mivae {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(Var a, Var b, const char* op) {
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(va) + " vs " + shape_str(vb));
  if (a.graph != b.graph) throw ContractError(std::string(op) + ": operands belong to different graphs");
}

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Unary elementwise op given f(x) and f'(x, f(x)).
template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Matrix out = a.value().unaryExpr(f);
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia, df](Graph& g, std::size_t self) {
    const Matrix& x = g.value(Var{&g, ia});
    const Matrix& y = g.value(Var{&g, self});
    Matrix d = x.binaryExpr(y, df);
    g.grad_buffer(ia).array() += g.grad_buffer(self).array() * d.array();
  });
}

}  // namespace

const Matrix& Var::value() const { return graph->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("scalar(): value is " + shape_str(v));
  return v(0, 0);
}

Var Graph::parameter(Tensor& t, bool trainable) {
  Node n;
  n.ref = &t.data;
  n.requires_grad = trainable;
  n.param = trainable ? &t : nullptr;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Graph::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Graph::emit(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) {
    if (in.graph != this) throw ContractError("emit: input from another graph");
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Matrix& Graph::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.ref ? *n.ref : n.value;
}

Matrix Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  const Matrix& val = value(v);
  return Matrix::Zero(val.rows(), val.cols());
}

Matrix& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Matrix& val = n.ref ? *n.ref : n.value;
    n.grad.setZero(val.rows(), val.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
  const Matrix& lv = value(loss);
  if (lv.size() != 1) throw ContractError("backward: loss must be a scalar, got " + shape_str(lv));
  for (Node& n : nodes_) n.has_grad = false;
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->emit(a.value() + b.value(), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    if (g.requires_grad(Var{&g, ia})) g.grad_buffer(ia) += d;
    if (g.requires_grad(Var{&g, ib})) g.grad_buffer(ib) += g.grad_buffer(self);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->emit(a.value() - b.value(), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    if (g.requires_grad(Var{&g, ia})) g.grad_buffer(ia) += g.grad_buffer(self);
    if (g.requires_grad(Var{&g, ib})) g.grad_buffer(ib) -= g.grad_buffer(self);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const std::size_t ia = a.id, ib = b.id;
  Matrix out = a.value().cwiseProduct(b.value());
  return a.graph->emit(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    Var va{&g, ia}, vb{&g, ib};
    if (g.requires_grad(va)) g.grad_buffer(ia).array() += g.grad_buffer(self).array() * vb.value().array();
    if (g.requires_grad(vb)) g.grad_buffer(ib).array() += g.grad_buffer(self).array() * va.value().array();
  });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id;
  return a.graph->emit(a.value() * s, {a}, [ia, s](Graph& g, std::size_t self) {
    g.grad_buffer(ia) += s * g.grad_buffer(self);
  });
}

Var add_scalar(Var a, double s) {
  const std::size_t ia = a.id;
  Matrix out = a.value().array() + s;
  return a.graph->emit(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    g.grad_buffer(ia) += g.grad_buffer(self);
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

// d|x|/dx taken as 0 at the kink.
Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
  return unary(a, softplus_value, [](double x, double) { return sigmoid_value(x); });
}

Var matmul_nt(Var x, Var w) {
  const Matrix& vx = x.value();
  const Matrix& vw = w.value();
  if (vx.cols() != vw.cols())
    throw DimensionError("matmul_nt: input " + shape_str(vx) + " does not match weight " + shape_str(vw));
  Matrix out(vx.rows(), vw.rows());
  out.noalias() = vx * vw.transpose();
  const std::size_t ix = x.id, iw = w.id;
  return x.graph->emit(std::move(out), {x, w}, [ix, iw](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    Var vx{&g, ix}, vw{&g, iw};
    if (g.requires_grad(vx)) g.grad_buffer(ix).noalias() += d * vw.value();
    if (g.requires_grad(vw)) g.grad_buffer(iw).noalias() += d.transpose() * vx.value();
  });
}

Var add_row(Var x, Var b) {
  const Matrix& vx = x.value();
  const Matrix& vb = b.value();
  if (vb.rows() != 1 || vb.cols() != vx.cols())
    throw DimensionError("add_row: bias " + shape_str(vb) + " does not match " + shape_str(vx));
  Matrix out = vx.rowwise() + vb.row(0);
  const std::size_t ix = x.id, ib = b.id;
  return x.graph->emit(std::move(out), {x, b}, [ix, ib](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    if (g.requires_grad(Var{&g, ix})) g.grad_buffer(ix) += d;
    if (g.requires_grad(Var{&g, ib})) g.grad_buffer(ib) += d.colwise().sum();
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    g.grad_buffer(ia).array() += g.grad_buffer(self)(0, 0);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw DimensionError("mean: empty operand");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Matrix out = a.value().rowwise().sum();
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    g.grad_buffer(ia).colwise() += d.col(0);
  });
}

Var slice_cols(Var a, Index begin, Index count) {
  const Matrix& va = a.value();
  if (begin < 0 || count < 0 || begin + count > va.cols())
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of " + shape_str(va));
  Matrix out = va.middleCols(begin, count);
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia, begin, count](Graph& g, std::size_t self) {
    g.grad_buffer(ia).middleCols(begin, count) += g.grad_buffer(self);
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  if (va.rows() != vb.rows())
    throw DimensionError("concat_cols: row mismatch " + shape_str(va) + " vs " + shape_str(vb));
  Matrix out(va.rows(), va.cols() + vb.cols());
  out << va, vb;
  const std::size_t ia = a.id, ib = b.id;
  const Index ca = va.cols(), cb = vb.cols();
  return a.graph->emit(std::move(out), {a, b}, [ia, ib, ca, cb](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    if (g.requires_grad(Var{&g, ia})) g.grad_buffer(ia) += d.leftCols(ca);
    if (g.requires_grad(Var{&g, ib})) g.grad_buffer(ib) += d.rightCols(cb);
  });
}

Var gather_cols(Var a, std::span<const std::size_t> cols) {
  const Matrix& va = a.value();
  std::vector<Index> idx(cols.begin(), cols.end());
  Matrix out(va.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= va.cols())
      throw DimensionError("gather_cols: column " + std::to_string(idx[j]) + " out of " + shape_str(va));
    out.col(static_cast<Index>(j)) = va.col(idx[j]);
  }
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia, idx](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    Matrix& da = g.grad_buffer(ia);
    for (std::size_t j = 0; j < idx.size(); ++j) da.col(idx[j]) += d.col(static_cast<Index>(j));
  });
}

Var softmax(Var a) {
  const Matrix& va = a.value();
  Matrix out(va.rows(), va.cols());
  for (Index r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    out.row(r) = (va.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Matrix& y = g.value(Var{&g, self});
    const Matrix& d = g.grad_buffer(self);
    Matrix& da = g.grad_buffer(ia);
    for (Index r = 0; r < y.rows(); ++r) {
      const double dot = d.row(r).dot(y.row(r));
      da.row(r).array() += y.row(r).array() * (d.row(r).array() - dot);
    }
  });
}

Var log_softmax(Var a) {
  const Matrix& va = a.value();
  Matrix out(va.rows(), va.cols());
  for (Index r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    const double lse = m + std::log((va.row(r).array() - m).exp().sum());
    out.row(r) = va.row(r).array() - lse;
  }
  const std::size_t ia = a.id;
  return a.graph->emit(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Matrix& y = g.value(Var{&g, self});
    const Matrix& d = g.grad_buffer(self);
    Matrix& da = g.grad_buffer(ia);
    for (Index r = 0; r < y.rows(); ++r) {
      const double total = d.row(r).sum();
      da.row(r).array() += d.row(r).array() - y.row(r).array().exp() * total;
    }
  });
}

}  // namespace mivae
