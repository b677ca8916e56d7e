// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mivae {

enum class Activation : std::uint8_t { identity, tanh, relu, sigmoid, softplus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected layer: activation(x * W^T + b), W is [out x in].
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(Index in, Index out, Activation act);

  Index in_dim() const { return weight.data.cols(); }
  Index out_dim() const { return weight.data.rows(); }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias.
  void init_uniform(std::mt19937_64& rng);
};

/// Records the layer on the tape. Throws DimensionError if `input.cols()`
/// differs from the layer's input width.
Var dense_forward(Var input, DenseLayer& layer, bool trainable = true);
/// Value-only evaluation (no tape).
Matrix dense_forward(const Matrix& input, const DenseLayer& layer);

Var apply_activation(Var x, Activation act);
void apply_activation_inplace(Matrix& x, Activation act);

/// Stack of dense layers; hidden layers share one activation.
struct Mlp {
  std::vector<DenseLayer> layers;

  Mlp() = default;
  /// widths = {in, h1, ..., out}.
  Mlp(const std::vector<Index>& widths, Activation hidden, Activation output, std::mt19937_64& rng);

  Index in_dim() const { return layers.front().in_dim(); }
  Index out_dim() const { return layers.back().out_dim(); }

  Var forward(Var x, bool trainable = true);
  Matrix forward(const Matrix& x) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
};

}  // namespace mivae
