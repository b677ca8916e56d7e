// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mivae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Dense row-major value with a same-shaped gradient buffer.
///
/// Everything in the library is at most rank 2: batches are [rows x features]
/// and vectors are single rows.
struct Tensor {
  Matrix data;
  Matrix grad;

  Tensor() = default;
  Tensor(Index rows, Index cols) : data(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
  explicit Tensor(Matrix value) : data(std::move(value)), grad(Matrix::Zero(data.rows(), data.cols())) {}

  std::vector<std::size_t> shape() const {
    return {static_cast<std::size_t>(data.rows()), static_cast<std::size_t>(data.cols())};
  }
  std::size_t size() const { return static_cast<std::size_t>(data.size()); }
  void zero_grad() { grad.setZero(data.rows(), data.cols()); }
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
};

/// Reverse-mode tape. Each forward op appends a node holding its value and a
/// closure that pushes the node's gradient to its inputs. `backward` walks the
/// tape in reverse and accumulates leaf gradients into bound parameters.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf bound to a parameter tensor. When `trainable` is false the node is a
  /// constant view and backward never touches `t.grad`.
  Var parameter(Tensor& t, bool trainable = true);
  /// Leaf with no parameter binding that still collects a gradient (read it
  /// with `grad`). Used for inputs whose sensitivity is of interest.
  Var variable(Matrix value);
  Var constant(Matrix value);

  /// Appends an interior node. `inputs` decide whether it requires a gradient.
  Var emit(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient accumulated into `v` by the last backward pass (zeros if none).
  Matrix grad(Var v) const;
  /// Mutable gradient buffer of node `id`, allocated on first use.
  Matrix& grad_buffer(std::size_t id);

  /// Fills every reachable bound parameter's grad with d loss / d param.
  /// Throws ContractError unless `loss` is 1x1.
  void backward(Var loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Tensor* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

// Elementwise and structural ops. Shapes must agree exactly unless noted.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var abs(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var softplus(Var a);

/// x[B x in] * w[out x in]^T.
Var matmul_nt(Var x, Var w);
/// x[B x n] + b[1 x n] broadcast over rows.
Var add_row(Var x, Var b);
/// Sum of all entries, 1x1.
Var sum(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
/// Per-row sum, [B x 1].
Var row_sum(Var a);
Var slice_cols(Var a, Index begin, Index count);
Var concat_cols(Var a, Var b);
Var gather_cols(Var a, std::span<const std::size_t> cols);
/// Row-wise softmax / log-softmax.
Var softmax(Var a);
Var log_softmax(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace mivae
