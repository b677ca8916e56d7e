// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/distributions.hpp"
#include "mivae/models.hpp"
#include "mivae/tensor.hpp"

#include <string>
#include <vector>

namespace mivae {

enum class ObjectiveVariant : std::uint8_t { elbo, beta, capacity };

std::string to_string(ObjectiveVariant v);
ObjectiveVariant objective_variant_from_string(const std::string& s);

struct ObjectiveConfig {
  ObjectiveVariant variant = ObjectiveVariant::elbo;
  double beta = 1.0;
  double gamma = 1.0;
  double capacity = 0.0;
  /// Weight of the MI regularizer; 0 disables the MI path entirely.
  double lambda = 0.0;
  int mc_samples = 1;

  void validate() const;
};

/// Batch-averaged objective terms, nats per sample.
struct ObjectiveBreakdown {
  double recon = 0.0;
  double kl_gauss = 0.0;
  double kl_cat = 0.0;
  double mi_term = 0.0;
  double total = 0.0;
};

/// recon - KL, recon - beta KL or recon - gamma |KL - C| depending on the variant.
double variant_total(const ObjectiveConfig& cfg, double recon, double kl_gauss, double kl_cat);
/// Variant total plus lambda * mi_term. Equals `b.total` for any breakdown
/// produced by `evaluate_objective` with the same config.
double recompose_total(const ObjectiveBreakdown& b, const ObjectiveConfig& cfg);
/// breakdown.total + lambda * mi_term.
double total_objective(const ObjectiveBreakdown& b, double mi_term, double lambda);

/// Entropy constant added to the Q log-likelihood: log K for a categorical
/// target, the standard-normal differential entropy for a Gaussian subvector.
double mi_entropy_constant(const LatentLayout& layout);

/// Exogenous noise for one minibatch: `eps[s]` is [B x G] for MC sample s,
/// `gumbel[s]` is [B x K].
struct LatentNoise {
  std::vector<Matrix> eps;
  std::vector<Matrix> gumbel;
};

LatentNoise draw_latent_noise(NoiseSource& noise, const LatentLayout& layout, Index batch, int samples);

/// Objective terms recorded on a tape; all 1x1 batch means.
struct ObjectiveTerms {
  Var recon;
  Var kl_gauss;
  Var kl_cat;
  Var variant_total;
  Var mi;     // valid iff has_mi
  Var total;  // variant_total + lambda * mi
  bool has_mi = false;
  /// Decoder means of the first MC sample (the x' fed to Q).
  Var x_prime;
  /// MI target drawn with the first MC sample.
  Var target_sample;
};

struct TapeOptions {
  bool train_vae = true;
  bool train_aux = false;
  /// Build the MI path even when lambda == 0 (evaluation).
  bool force_mi = false;
};

/// Records the full objective for batch `x`. The first MC draw is shared by
/// the reconstruction term and the MI pipeline (sample z, c from q(.|x),
/// decode to Bernoulli means x', score log Q(target | x')).
ObjectiveTerms build_objective(Graph& g, VaeModel& m, AuxModel* q, const Matrix& x, const LatentNoise& noise,
                               const ObjectiveConfig& cfg, double tau, const TapeOptions& opts = {});

/// Records only the MI pipeline: batch mean of log Q(target | x') + H.
Var build_mi_regularizer(Graph& g, VaeModel& m, AuxModel& q, const Matrix& x, const LatentNoise& noise, double tau,
                         bool train_vae, bool train_aux);

/// Values of the MI pipeline for one draw: decoder means x' and the sampled
/// target (Gaussian subvector or relaxed category), computed without a tape.
struct MiPipelineSample {
  Matrix x_prime;
  Matrix target;
};
MiPipelineSample sample_mi_pipeline(const VaeModel& m, const Matrix& x, const LatentNoise& noise, double tau);

/// Batch mean of log Q(target | x') + H for precomputed pipeline values.
Var build_aux_objective(Graph& g, AuxModel& q, const MiPipelineSample& s, const LatentLayout& layout,
                        bool train_aux = true);

/// Evaluates every term (values only).
ObjectiveBreakdown evaluate_objective(VaeModel& m, AuxModel* q, const Matrix& x, const LatentNoise& noise,
                                      const ObjectiveConfig& cfg, double tau);

ObjectiveBreakdown elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double tau = 1.0);
/// Throws ContractError for beta < 0.
ObjectiveBreakdown beta_elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double beta, double tau = 1.0);
ObjectiveBreakdown capacity_elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double gamma, double capacity,
                                 double tau = 1.0);
/// Throws ContractError if Q's target differs from the model's MI target.
double mi_regularizer(VaeModel& m, AuxModel& q, const Matrix& x, const LatentNoise& noise, double tau);

/// Monte Carlo check that KL(q(z,c|x) || p(z)p(c)) splits into the Gaussian
/// and categorical KLs.
struct KlDecomposition {
  double mc_joint_kl = 0.0;
  double mc_se = 0.0;
  double analytic_sum = 0.0;
  double gap = 0.0;  // mc_joint_kl - analytic_sum
};

/// Single posterior (row `row` of `p`); c drawn exactly by Gumbel-max.
KlDecomposition joint_kl_decomposition_check(const Posterior& p, Index row, NoiseSource& noise, std::size_t n_mc);
/// Batch average over the model's posteriors for `x`.
KlDecomposition joint_kl_decomposition_check(const VaeModel& m, const Matrix& x, NoiseSource& noise,
                                             std::size_t n_mc);

/// ELBO of a finite latent-variable model for one observation:
/// sum_z q(z) [log p(z) + log p(x|z) - log q(z)].
/// `prior` is p(z), `likelihood_x` holds p(x|z) for the observed x.
double discrete_elbo(std::span<const double> prior, std::span<const double> likelihood_x,
                     std::span<const double> q);

}  // namespace mivae
