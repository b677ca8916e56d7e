// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mivae {

/// Lower clamp applied to Bernoulli means before taking logs.
inline constexpr double kProbClamp = 1e-7;

/// Diagonal Gaussian parametrized by mean and log-variance.
struct DiagGaussianParams {
  std::vector<double> mu;
  std::vector<double> log_var;

  std::size_t dim() const { return mu.size(); }
  void validate() const;
};

/// Categorical over K classes given by unnormalized log-probabilities, plus
/// the Gumbel-softmax relaxation temperature.
struct CategoricalParams {
  std::vector<double> logits;
  double tau = 1.0;

  std::size_t k() const { return logits.size(); }
  void validate() const;
};

/// Seeded stream of standard normal, standard Gumbel and open-interval
/// uniform draws. Identical seeds give identical streams on every platform.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Box-Muller; one normal per call, no cached pair.
  double normal();
  /// -log(-log(u)).
  double gumbel();
  std::uint64_t next_u64() { return engine_(); }

  Matrix normal(Index rows, Index cols);
  Matrix gumbel(Index rows, Index cols);

  std::mt19937_64& engine() { return engine_; }

  /// Textual engine state; `set_state(state())` resumes the exact stream.
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
};

// ---- value-level primitives ------------------------------------------------

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

/// z = mu + exp(log_var / 2) * eps.
std::vector<double> reparam_sample(const DiagGaussianParams& p, std::span<const double> eps);
/// KL(N(mu, sigma^2) || N(0, I)) in nats.
double gaussian_kl_to_std(const DiagGaussianParams& p);
/// log N(z; mu, diag(exp(log_var))).
double gaussian_logpdf(std::span<const double> z, const DiagGaussianParams& p);
/// Differential entropy of N(0, I_d): (d/2) log(2 pi e).
double std_gaussian_entropy(std::size_t dim);

/// y_i = softmax((log pi_i + g_i) / tau).
std::vector<double> gumbel_softmax_sample(const CategoricalParams& p, std::span<const double> g);

/// sum p_i log(p_i K), with 0 log 0 = 0.
double categorical_kl_to_uniform(std::span<const double> probs);
/// -sum p_i log p_i.
double entropy(std::span<const double> probs);
/// sum x_i log p_i + (1 - x_i) log(1 - p_i), p clamped to [1e-7, 1 - 1e-7].
double bernoulli_loglik(std::span<const double> x, std::span<const double> p);
/// sum y_i log probs_i. Exact log-probability for one-hot y.
double categorical_logprob(std::span<const double> probs, std::span<const double> y);

// ---- tape ops over batches (one distribution per row) -------------------

/// mu + exp(log_var / 2) * eps, eps usually a constant.
Var reparam_sample(Var mu, Var log_var, Var eps);
/// Per-row Gaussian KL to the standard normal, [B x 1].
Var gaussian_kl_to_std(Var mu, Var log_var);
/// Per-row log N(z; mu, diag(exp(log_var))), [B x 1].
Var gaussian_logpdf(Var z, Var mu, Var log_var);
/// Per-row relaxed categorical sample from logits and Gumbel noise.
Var gumbel_softmax_sample(Var logits, Var gumbel, double tau);
/// Per-row KL(softmax(logits) || uniform), [B x 1].
Var categorical_kl_to_uniform(Var logits);
/// Per-row sum y_i log softmax(logits)_i, [B x 1].
Var categorical_logprob(Var logits, Var y);
/// Per-row Bernoulli log-likelihood of targets x under means p (clamped).
Var bernoulli_loglik(Var x, Var p);
/// Same quantity parametrized by logits: x*l - softplus(l). Unclamped.
Var bernoulli_loglik_logits(Var x, Var logits);

}  // namespace mivae
