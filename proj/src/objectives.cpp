// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/objectives.hpp"

#include "mivae/error.hpp"

#include <cmath>

namespace mivae {

std::string to_string(ObjectiveVariant v) {
  switch (v) {
    case ObjectiveVariant::elbo: return "elbo";
    case ObjectiveVariant::beta: return "beta";
    case ObjectiveVariant::capacity: return "capacity";
  }
  return "elbo";
}

ObjectiveVariant objective_variant_from_string(const std::string& s) {
  if (s == "elbo") return ObjectiveVariant::elbo;
  if (s == "beta") return ObjectiveVariant::beta;
  if (s == "capacity") return ObjectiveVariant::capacity;
  throw ContractError("unknown objective variant '" + s + "'");
}

void ObjectiveConfig::validate() const {
  if (!(beta >= 0.0)) throw ContractError("objective: beta must be >= 0");
  if (!(gamma >= 0.0)) throw ContractError("objective: gamma must be >= 0");
  if (!(capacity >= 0.0)) throw ContractError("objective: capacity must be >= 0");
  if (!(lambda >= 0.0)) throw ContractError("objective: lambda must be >= 0");
  if (mc_samples < 1) throw ContractError("objective: mc_samples must be >= 1");
}

double variant_total(const ObjectiveConfig& cfg, double recon, double kl_gauss, double kl_cat) {
  const double kl = kl_gauss + kl_cat;
  switch (cfg.variant) {
    case ObjectiveVariant::elbo: return recon - kl_gauss - kl_cat;
    case ObjectiveVariant::beta: return recon - cfg.beta * kl;
    case ObjectiveVariant::capacity: return recon - cfg.gamma * std::abs(kl - cfg.capacity);
  }
  return recon - kl;
}

double recompose_total(const ObjectiveBreakdown& b, const ObjectiveConfig& cfg) {
  return variant_total(cfg, b.recon, b.kl_gauss, b.kl_cat) + cfg.lambda * b.mi_term;
}

double total_objective(const ObjectiveBreakdown& b, double mi_term, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("total_objective: lambda must be >= 0");
  return b.total + lambda * mi_term;
}

double mi_entropy_constant(const LatentLayout& layout) {
  if (layout.mi_target.kind == MiTarget::Kind::categorical)
    return std::log(static_cast<double>(layout.categorical_k));
  return std_gaussian_entropy(layout.mi_target.indices.size());
}

LatentNoise draw_latent_noise(NoiseSource& noise, const LatentLayout& layout, Index batch, int samples) {
  LatentNoise n;
  const auto g = static_cast<Index>(layout.gaussian_dim);
  const auto k = static_cast<Index>(layout.categorical_k);
  for (int s = 0; s < samples; ++s) {
    n.eps.push_back(noise.normal(batch, g));
    n.gumbel.push_back(noise.gumbel(batch, k));
  }
  return n;
}

namespace {

// Samples z, c for MC draw `s` and returns decoder logits.
struct Draw {
  std::optional<Var> z;
  std::optional<Var> c;
  Var logits;
};

Draw draw_and_decode(Graph& g, VaeModel& m, const PosteriorVars& post, const LatentNoise& noise, std::size_t s,
                     double tau, bool train_vae) {
  Draw d;
  if (post.has_gaussian) {
    const Matrix& eps = noise.eps.at(s);
    if (eps.rows() != post.mu.rows() || eps.cols() != post.mu.cols())
      throw DimensionError("latent noise: eps shape does not match posterior");
    d.z = reparam_sample(post.mu, post.log_var, g.constant(eps));
  }
  if (post.has_categorical) {
    const Matrix& gum = noise.gumbel.at(s);
    if (gum.rows() != post.logits.rows() || gum.cols() != post.logits.cols())
      throw DimensionError("latent noise: gumbel shape does not match posterior");
    d.c = gumbel_softmax_sample(post.logits, g.constant(gum), tau);
  }
  d.logits = decode_logits(m, d.z, d.c, train_vae);
  return d;
}

void check_target(const VaeModel& m, const AuxModel& q) {
  if (!(q.target == m.layout.mi_target))
    throw ContractError("MI target mismatch: model targets '" + to_string(m.layout.mi_target) + "', Q targets '" +
                        to_string(q.target) + "'");
  if (q.net.in_dim() != m.data_dim) throw DimensionError("Q input width does not match data dimension");
}

Var target_of(const VaeModel& m, const Draw& d) {
  if (m.layout.mi_target.kind == MiTarget::Kind::categorical) return *d.c;
  return gather_cols(*d.z, m.layout.mi_target.indices);
}

}  // namespace

ObjectiveTerms build_objective(Graph& g, VaeModel& m, AuxModel* q, const Matrix& x, const LatentNoise& noise,
                               const ObjectiveConfig& cfg, double tau, const TapeOptions& opts) {
  cfg.validate();
  if (static_cast<int>(noise.eps.size()) < cfg.mc_samples || static_cast<int>(noise.gumbel.size()) < cfg.mc_samples)
    throw DimensionError("latent noise has fewer draws than mc_samples");
  const bool with_mi = cfg.lambda > 0.0 || opts.force_mi;
  if (with_mi && q == nullptr) throw ContractError("MI term requested without an auxiliary model");
  if (with_mi) check_target(m, *q);

  Var xv = g.constant(x);
  PosteriorVars post = encode(m, xv, opts.train_vae);
  const double inv_b = 1.0 / static_cast<double>(x.rows());

  ObjectiveTerms t;
  Var recon_sum;
  for (int s = 0; s < cfg.mc_samples; ++s) {
    Draw d = draw_and_decode(g, m, post, noise, static_cast<std::size_t>(s), tau, opts.train_vae);
    Var r = sum(bernoulli_loglik_logits(xv, d.logits));
    recon_sum = s == 0 ? r : add(recon_sum, r);
    if (s == 0) {
      t.x_prime = sigmoid(d.logits);
      t.target_sample = target_of(m, d);
    }
  }
  t.recon = scale(recon_sum, inv_b / cfg.mc_samples);
  t.kl_gauss = post.has_gaussian ? scale(sum(gaussian_kl_to_std(post.mu, post.log_var)), inv_b) : g.constant(Matrix::Zero(1, 1));
  t.kl_cat = post.has_categorical ? scale(sum(categorical_kl_to_uniform(post.logits)), inv_b) : g.constant(Matrix::Zero(1, 1));

  Var kl = add(t.kl_gauss, t.kl_cat);
  switch (cfg.variant) {
    case ObjectiveVariant::elbo: t.variant_total = sub(sub(t.recon, t.kl_gauss), t.kl_cat); break;
    case ObjectiveVariant::beta: t.variant_total = sub(t.recon, scale(kl, cfg.beta)); break;
    case ObjectiveVariant::capacity:
      t.variant_total = sub(t.recon, scale(abs(add_scalar(kl, -cfg.capacity)), cfg.gamma));
      break;
  }

  t.total = t.variant_total;
  if (with_mi) {
    AuxVars qo = q_infer(*q, t.x_prime, opts.train_aux);
    Var ll = aux_log_likelihood(*q, qo, t.target_sample);
    t.mi = add_scalar(scale(sum(ll), inv_b), mi_entropy_constant(m.layout));
    t.has_mi = true;
    if (cfg.lambda > 0.0) t.total = add(t.variant_total, scale(t.mi, cfg.lambda));
  }
  return t;
}

Var build_mi_regularizer(Graph& g, VaeModel& m, AuxModel& q, const Matrix& x, const LatentNoise& noise, double tau,
                         bool train_vae, bool train_aux) {
  check_target(m, q);
  Var xv = g.constant(x);
  PosteriorVars post = encode(m, xv, train_vae);
  Draw d = draw_and_decode(g, m, post, noise, 0, tau, train_vae);
  AuxVars qo = q_infer(q, sigmoid(d.logits), train_aux);
  Var ll = aux_log_likelihood(q, qo, target_of(m, d));
  return add_scalar(scale(sum(ll), 1.0 / static_cast<double>(x.rows())), mi_entropy_constant(m.layout));
}

MiPipelineSample sample_mi_pipeline(const VaeModel& m, const Matrix& x, const LatentNoise& noise, double tau) {
  if (!(tau > 0.0)) throw ContractError("sample_mi_pipeline: temperature must be positive");
  const Posterior post = encode(m, x);
  const Index g = static_cast<Index>(m.layout.gaussian_dim);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  Matrix z(x.rows(), g);
  Matrix c(x.rows(), k);
  if (g > 0) {
    const Matrix& eps = noise.eps.at(0);
    if (eps.rows() != x.rows() || eps.cols() != g) throw DimensionError("latent noise: eps shape mismatch");
    z = post.mu.array() + (0.5 * post.log_var.array()).exp() * eps.array();
  }
  if (k > 0) {
    const Matrix& gum = noise.gumbel.at(0);
    if (gum.rows() != x.rows() || gum.cols() != k) throw DimensionError("latent noise: gumbel shape mismatch");
    for (Index r = 0; r < x.rows(); ++r) {
      const std::vector<double> y = gumbel_softmax_sample(
          post.categorical(r, tau), std::span<const double>(gum.row(r).data(), static_cast<std::size_t>(k)));
      for (Index j = 0; j < k; ++j) c(r, j) = y[static_cast<std::size_t>(j)];
    }
  }
  MiPipelineSample s;
  s.x_prime = decode(m, z, k > 0 ? &c : nullptr);
  if (m.layout.mi_target.kind == MiTarget::Kind::categorical) {
    s.target = std::move(c);
  } else {
    const auto& idx = m.layout.mi_target.indices;
    s.target.resize(x.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) s.target.col(static_cast<Index>(j)) = z.col(static_cast<Index>(idx[j]));
  }
  return s;
}

Var build_aux_objective(Graph& g, AuxModel& q, const MiPipelineSample& s, const LatentLayout& layout, bool train_aux) {
  if (!(q.target == layout.mi_target)) throw ContractError("MI target mismatch between Q and layout");
  AuxVars qo = q_infer(q, g.constant(s.x_prime), train_aux);
  Var ll = aux_log_likelihood(q, qo, g.constant(s.target));
  return add_scalar(scale(sum(ll), 1.0 / static_cast<double>(s.x_prime.rows())), mi_entropy_constant(layout));
}

ObjectiveBreakdown evaluate_objective(VaeModel& m, AuxModel* q, const Matrix& x, const LatentNoise& noise,
                                      const ObjectiveConfig& cfg, double tau) {
  Graph g;
  TapeOptions opts{false, false, q != nullptr};
  ObjectiveTerms t = build_objective(g, m, q, x, noise, cfg, tau, opts);
  ObjectiveBreakdown b;
  b.recon = t.recon.scalar();
  b.kl_gauss = t.kl_gauss.scalar();
  b.kl_cat = t.kl_cat.scalar();
  b.mi_term = t.has_mi ? t.mi.scalar() : 0.0;
  b.total = t.total.scalar();
  return b;
}

ObjectiveBreakdown elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double tau) {
  ObjectiveConfig cfg;
  cfg.mc_samples = static_cast<int>(noise.eps.size());
  return evaluate_objective(m, nullptr, x, noise, cfg, tau);
}

ObjectiveBreakdown beta_elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double beta, double tau) {
  if (!(beta >= 0.0)) throw ContractError("beta_elbo: beta must be >= 0");
  ObjectiveConfig cfg;
  cfg.variant = ObjectiveVariant::beta;
  cfg.beta = beta;
  cfg.mc_samples = static_cast<int>(noise.eps.size());
  return evaluate_objective(m, nullptr, x, noise, cfg, tau);
}

ObjectiveBreakdown capacity_elbo(VaeModel& m, const Matrix& x, const LatentNoise& noise, double gamma, double capacity,
                                 double tau) {
  ObjectiveConfig cfg;
  cfg.variant = ObjectiveVariant::capacity;
  cfg.gamma = gamma;
  cfg.capacity = capacity;
  cfg.mc_samples = static_cast<int>(noise.eps.size());
  return evaluate_objective(m, nullptr, x, noise, cfg, tau);
}

double mi_regularizer(VaeModel& m, AuxModel& q, const Matrix& x, const LatentNoise& noise, double tau) {
  Graph g;
  return build_mi_regularizer(g, m, q, x, noise, tau, false, false).scalar();
}

KlDecomposition joint_kl_decomposition_check(const Posterior& p, Index row, NoiseSource& noise, std::size_t n_mc) {
  if (n_mc < 2) throw ContractError("joint_kl_decomposition_check: need at least 2 samples");
  const Index g = p.mu.cols();
  const Index k = p.logits.cols();
  const DiagGaussianParams gp = p.gaussian(row);
  std::vector<double> log_probs;
  if (k > 0) log_probs = log_softmax(std::span<const double>(p.logits.row(row).data(), static_cast<std::size_t>(k)));
  const double log_k = k > 0 ? std::log(static_cast<double>(k)) : 0.0;
  const DiagGaussianParams prior{std::vector<double>(static_cast<std::size_t>(g), 0.0),
                                 std::vector<double>(static_cast<std::size_t>(g), 0.0)};

  double mean = 0.0, m2 = 0.0;
  std::vector<double> eps(static_cast<std::size_t>(g));
  for (std::size_t n = 0; n < n_mc; ++n) {
    for (double& e : eps) e = noise.normal();
    const std::vector<double> z = g > 0 ? reparam_sample(gp, eps) : std::vector<double>{};
    std::size_t c = 0;
    if (k > 0) {
      double best = -INFINITY;
      for (Index j = 0; j < k; ++j) {
        const double v = log_probs[static_cast<std::size_t>(j)] + noise.gumbel();
        if (v > best) best = v, c = static_cast<std::size_t>(j);
      }
    }
    const double log_q = joint_posterior_logprob(p, row, z, c);
    const double log_prior = (g > 0 ? gaussian_logpdf(z, prior) : 0.0) - log_k;
    const double v = log_q - log_prior;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n + 1);
    m2 += delta * (v - mean);
  }
  KlDecomposition out;
  out.mc_joint_kl = mean;
  out.mc_se = std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  out.analytic_sum = (g > 0 ? gaussian_kl_to_std(gp) : 0.0);
  if (k > 0) out.analytic_sum += categorical_kl_to_uniform(softmax(log_probs));
  out.gap = out.mc_joint_kl - out.analytic_sum;
  return out;
}

KlDecomposition joint_kl_decomposition_check(const VaeModel& m, const Matrix& x, NoiseSource& noise,
                                             std::size_t n_mc) {
  const Posterior p = encode(m, x);
  KlDecomposition acc;
  double var = 0.0;
  const double b = static_cast<double>(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const KlDecomposition k = joint_kl_decomposition_check(p, r, noise, n_mc);
    acc.mc_joint_kl += k.mc_joint_kl / b;
    acc.analytic_sum += k.analytic_sum / b;
    var += k.mc_se * k.mc_se;
  }
  acc.mc_se = std::sqrt(var) / b;
  acc.gap = acc.mc_joint_kl - acc.analytic_sum;
  return acc;
}

double discrete_elbo(std::span<const double> prior, std::span<const double> likelihood_x, std::span<const double> q) {
  if (prior.size() != likelihood_x.size() || prior.size() != q.size())
    throw DimensionError("discrete_elbo: length mismatch");
  double e = 0.0;
  for (std::size_t z = 0; z < q.size(); ++z) {
    if (q[z] < 0.0) throw ContractError("discrete_elbo: negative q");
    if (q[z] == 0.0) continue;
    e += q[z] * (std::log(prior[z]) + std::log(likelihood_x[z]) - std::log(q[z]));
  }
  return e;
}

}  // namespace mivae
