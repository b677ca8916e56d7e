// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/layers.hpp"

#include "mivae/error.hpp"

#include <cmath>

namespace mivae {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softplus") return Activation::softplus;
  throw ContractError("unknown activation '" + name + "'");
}

DenseLayer::DenseLayer(Index in, Index out, Activation act) : weight(out, in), bias(1, out), activation(act) {}

void DenseLayer::init_uniform(std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
  // Uniform draws from raw 53-bit words so the stream is identical across
  // standard library implementations.
  for (Index i = 0; i < weight.data.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    weight.data.data()[i] = (2.0 * u - 1.0) * limit;
  }
  bias.data.setZero();
  weight.zero_grad();
  bias.zero_grad();
}

Var apply_activation(Var x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::tanh: return tanh(x);
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::softplus: return softplus(x);
  }
  return x;
}

void apply_activation_inplace(Matrix& x, Activation act) {
  switch (act) {
    case Activation::identity: break;
    case Activation::tanh: x = x.array().tanh(); break;
    case Activation::relu: x = x.cwiseMax(0.0); break;
    case Activation::sigmoid:
      x = x.unaryExpr([](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
      break;
    case Activation::softplus:
      x = x.unaryExpr([](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); });
      break;
  }
}

Var dense_forward(Var input, DenseLayer& layer, bool trainable) {
  if (input.cols() != layer.in_dim())
    throw DimensionError("dense_forward: input width " + std::to_string(input.cols()) + ", layer expects " +
                         std::to_string(layer.in_dim()));
  Graph& g = *input.graph;
  Var w = g.parameter(layer.weight, trainable);
  Var b = g.parameter(layer.bias, trainable);
  return apply_activation(add_row(matmul_nt(input, w), b), layer.activation);
}

Matrix dense_forward(const Matrix& input, const DenseLayer& layer) {
  if (input.cols() != layer.in_dim())
    throw DimensionError("dense_forward: input width " + std::to_string(input.cols()) + ", layer expects " +
                         std::to_string(layer.in_dim()));
  Matrix out(input.rows(), layer.out_dim());
  out.noalias() = input * layer.weight.data.transpose();
  out.rowwise() += layer.bias.data.row(0);
  apply_activation_inplace(out, layer.activation);
  return out;
}

Mlp::Mlp(const std::vector<Index>& widths, Activation hidden, Activation output, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ContractError("Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    layers.emplace_back(widths[i], widths[i + 1], last ? output : hidden);
    layers.back().init_uniform(rng);
  }
}

Var Mlp::forward(Var x, bool trainable) {
  for (DenseLayer& l : layers) x = dense_forward(x, l, trainable);
  return x;
}

Matrix Mlp::forward(const Matrix& x) const {
  Matrix h = x;
  for (const DenseLayer& l : layers) h = dense_forward(h, l);
  return h;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (DenseLayer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const DenseLayer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

}  // namespace mivae
