// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/models.hpp"
#include "mivae/optim.hpp"
#include "mivae/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mivae {

/// Joint probability table p(x = i, z = j); rows index x, columns index z.
struct DiscreteJoint {
  Matrix table;

  /// Throws ContractError unless entries are >= 0 and sum to 1 within 1e-12.
  void validate() const;
  Index nx() const { return table.rows(); }
  Index nz() const { return table.cols(); }
  std::vector<double> px() const;
  std::vector<double> pz() const;
  /// Row x holds p(z | x); rows with p(x) = 0 are left uniform.
  Matrix z_given_x() const;
  /// Row z holds p(x | z); rows with p(z) = 0 are left uniform.
  Matrix x_given_z() const;
};

/// I(x; z) by enumeration, nats. Zero-probability cells are skipped.
double brute_force_mi(const DiscreteJoint& j);

struct Lemma1Result {
  double lhs = 0.0;
  double rhs = 0.0;
  double diff = 0.0;
};

/// lhs = E_{x,y}[f(x, y)], rhs = E_{x, y|x, x'|y}[f(x', y)], both by
/// enumeration over the joint of (x, y). `f` has the table's shape.
Lemma1Result lemma1_check(const DiscreteJoint& j, const Matrix& f);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct MiReport {
  Estimate lower;
  Estimate upper;
  /// Batch objective of the fresh Q at every training step.
  std::vector<double> q_training_curve;
};

struct MiEvalConfig {
  int budget = 2000;  // Q training steps
  int batch_size = 128;
  int eval_passes = 10;
  double tau = 0.67;
  std::uint64_t seed = 0;
  AdamConfig optimizer;
  std::vector<Index> aux_hidden{256};
  Activation hidden_activation = Activation::tanh;
  double clip_norm = 5.0;

  void validate() const;
};

/// Trains a fresh Q on `train_x` against the frozen model and scores it on
/// `eval_x` (mean log Q(target | x') + H). The SE is over `eval_passes`
/// passes with distinct noise seeds. Throws ContractError for budget 0.
MiReport mi_lower_bound(const VaeModel& m, const Matrix& train_x, const Matrix& eval_x, const MiEvalConfig& cfg);

/// Dataset mean of the analytic KL(q(target | x) || prior), SE over samples.
Estimate kl_upper_bound(const VaeModel& m, const Matrix& x);

/// Lower bound (fresh Q) and KL upper bound together.
MiReport evaluate_mi(const VaeModel& m, const Matrix& train_x, const Matrix& eval_x, const MiEvalConfig& cfg);

// ---- categorical diagnostics -----------------------------------------------

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Counts of every per-class probability over `bins` equal bins of [0, 1].
std::vector<long> prob_histogram(const Matrix& probs, int bins);
std::vector<long> categorical_prob_histogram(const VaeModel& m, const Matrix& x, int bins);

/// argmax category per row.
std::vector<std::size_t> argmax_rows(const Matrix& probs);
std::vector<std::size_t> categorical_assignments(const VaeModel& m, const Matrix& x);

/// K x L counts: cell (c, l) = samples of label l assigned to category c.
CountMatrix label_counts(std::span<const std::size_t> assignment, std::span<const int> labels, Index k, Index n_labels);
CountMatrix onehot_label_counts(const VaeModel& m, const Matrix& x, std::span<const int> labels, Index n_labels);

/// Majority label per category; ties and empty categories go to the lowest label.
std::vector<int> majority_mapping(const CountMatrix& counts);

double assignment_accuracy(std::span<const std::size_t> train_assign, std::span<const int> train_labels,
                           std::span<const std::size_t> test_assign, std::span<const int> test_labels, Index k,
                           Index n_labels);
/// Maps each category to its majority train label and scores argmax
/// predictions on the test set.
double categorical_accuracy(const VaeModel& m, const Matrix& train_x, std::span<const int> train_labels,
                            const Matrix& test_x, std::span<const int> test_labels, Index n_labels);

// ---- enumerable toy models -------------------------------------------------

/// Discrete latent z, discrete observation x. The encoder is the exact
/// posterior of `joint`; the decoder is p(x | z).
struct ToyModel {
  DiscreteJoint joint;
  Matrix encoder;  // [nx x nz], row x = q(z | x)
  Matrix decoder;  // [nz x nx], row z = p(x | z)

  std::vector<double> prior() const { return joint.pz(); }
};

ToyModel toy_from_joint(const DiscreteJoint& j);

/// Entropy of the toy's latent marginal (the H constant of the bound).
double toy_entropy_constant(const ToyModel& t);

struct ToyMiConfig {
  int budget = 2000;
  int batch_size = 256;
  int eval_passes = 10;
  int eval_samples = 4000;
  std::uint64_t seed = 0;
  AdamConfig optimizer{0.05, 0.9, 0.999, 1e-8};
};

/// Tabular Q(z | x') trained on the pipeline x -> z ~ q(z|x) -> x' ~ p(x'|z).
/// `init_logits` ([nx x nz]) seeds Q; with it `budget` may be 0.
MiReport toy_mi_lower_bound(const ToyModel& t, const ToyMiConfig& cfg,
                            const std::optional<Matrix>& init_logits = std::nullopt);

/// E_x KL(q(z | x) || p(z)) with x ~ p(x), exact.
double toy_kl_upper_bound(const ToyModel& t);

}  // namespace mivae
