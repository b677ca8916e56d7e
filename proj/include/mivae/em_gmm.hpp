// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mivae {

/// Diagonal-covariance Gaussian mixture. Row k of `means` / `variances` is
/// component k.
struct GmmParams {
  std::vector<double> weights;
  Matrix means;
  Matrix variances;

  Index k() const { return means.rows(); }
  Index dim() const { return means.cols(); }
  /// Throws on shape mismatch, weights off the simplex or variances <= 0.
  void validate() const;
};

inline constexpr double kVarianceFloor = 1e-6;

/// log sum_k pi_k N(x; mu_k, diag var_k) for one point.
double gmm_point_loglik(const GmmParams& p, std::span<const double> x);
/// Sum of per-point log-likelihoods over the rows of `x`.
double gmm_loglik(const GmmParams& p, const Matrix& x);

/// Responsibilities [N x K]; rows sum to 1.
Matrix em_e_step(const GmmParams& p, const Matrix& x);
/// Weighted maximum-likelihood update. Components with no responsibility get
/// weight 0 and the global moments.
GmmParams em_m_step(const Matrix& resp, const Matrix& x, double variance_floor = kVarianceFloor);

/// k-means++ seeded means; weights and variances from the hard nearest-seed
/// assignment.
GmmParams gmm_init(const Matrix& x, Index k, std::uint64_t seed);

struct EmFit {
  GmmParams params;
  /// Total log-likelihood before the first iteration and after each one.
  std::vector<double> trace;
};

EmFit em_fit(const Matrix& x, Index k, int iters, std::uint64_t seed);

}  // namespace mivae
