// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mivae {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment descent. Minimizes: callers maximizing an objective feed
/// the gradient of its negation.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  /// Applies one update to `params` from their grads, then zeroes the grads.
  /// The parameter list must be the same (in order and shape) on every call.
  /// Throws NumericError if any gradient entry is NaN or infinite; nothing is
  /// modified in that case.
  void step(std::span<Tensor* const> params);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }

  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Global L2 norm over all grads.
double grad_norm(std::span<Tensor* const> params);
/// Rescales grads so their global norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_grad_norm(std::span<Tensor* const> params, double max_norm);
void zero_grads(std::span<Tensor* const> params);

}  // namespace mivae
