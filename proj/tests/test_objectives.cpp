// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "mivae/error.hpp"
#include "mivae/objectives.hpp"

using namespace mivae;
using namespace mivae::test;

namespace {

Architecture tiny_arch() {
  Architecture a;
  a.encoder_hidden = {5};
  a.decoder_hidden = {5};
  a.aux_hidden = {4};
  return a;
}

LatentLayout layout(std::size_t g, std::size_t k, MiTarget t) {
  LatentLayout l;
  l.gaussian_dim = g;
  l.categorical_k = k;
  l.mi_target = std::move(t);
  return l;
}

Matrix binary_batch(Index b, Index d, std::mt19937_64& rng) {
  Matrix x(b, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(rng() % 2);
  return x;
}

std::vector<Tensor*> all_params(VaeModel& m, AuxModel* q) {
  std::vector<Tensor*> ps = m.parameters();
  if (q)
    for (Tensor* t : q->parameters()) ps.push_back(t);
  return ps;
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("prior-matching encoder has zero Gaussian KL") {
  VaeModel m = VaeModel::create(6, layout(2, 0, MiTarget::gaussian_subvector({0})), tiny_arch(), 1);
  for (Tensor* t : m.encoder_parameters()) t->data.setZero();
  std::mt19937_64 rng(2);
  NoiseSource ns(3);
  const Matrix x = binary_batch(4, 6, rng);
  const ObjectiveBreakdown b = elbo(m, x, draw_latent_noise(ns, m.layout, 4, 1));
  CHECK(b.kl_gauss == 0.0);
  CHECK(b.kl_cat == 0.0);
  CHECK(b.total == b.recon);
}

TEST_CASE("discrete ELBO is bounded by the exact log marginal") {
  // Two latent states, four observables.
  const std::vector<double> prior{0.3, 0.7};
  const Matrix lik = (Matrix(2, 4) << 0.1, 0.2, 0.3, 0.4, 0.5, 0.25, 0.15, 0.1).finished();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (Index x = 0; x < 4; ++x) {
    const std::vector<double> lx{lik(0, x), lik(1, x)};
    const double px = prior[0] * lx[0] + prior[1] * lx[1];
    const std::vector<double> post{prior[0] * lx[0] / px, prior[1] * lx[1] / px};
    CHECK(std::abs(discrete_elbo(prior, lx, post) - std::log(px)) < 1e-12);
    for (int t = 0; t < 20; ++t) {
      const double a = u(rng);
      const std::vector<double> q{a, 1 - a};
      CHECK(discrete_elbo(prior, lx, q) <= std::log(px) + 1e-15);
      if (std::abs(a - post[0]) > 1e-6) CHECK(discrete_elbo(prior, lx, q) < std::log(px));
    }
  }
}

TEST_CASE("property: ELBO below log marginal on random enumerable models") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng() % 7;
    std::vector<double> prior(k), lx(k), q(k);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < k; ++i) {
      prior[i] = u(rng), lx[i] = u(rng), q[i] = u(rng);
      sp += prior[i], sq += q[i];
    }
    double px = 0;
    for (std::size_t i = 0; i < k; ++i) {
      prior[i] /= sp, q[i] /= sq;
      px += prior[i] * lx[i];
    }
    CHECK(discrete_elbo(prior, lx, q) < std::log(px));
  }
}

TEST_CASE("linear-Gaussian ELBO at the exact posterior equals the analytic marginal") {
  // z ~ N(0, 1), x | z ~ N(a z, s^2).
  const double a = 1.7, s2 = 0.4, x = 0.9;
  const double log_px = -0.5 * std::log(2 * M_PI * (a * a + s2)) - 0.5 * x * x / (a * a + s2);
  const DiagGaussianParams post{{a * x / (a * a + s2)}, {std::log(s2 / (a * a + s2))}};
  const DiagGaussianParams prior{{0.0}, {0.0}};
  auto elbo_mc = [&](const DiagGaussianParams& q, double& se) {
    NoiseSource ns(6);
    const int n = 10000;
    double mean = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
      const auto z = reparam_sample(q, std::vector<double>{ns.normal()});
      const double lik = gaussian_logpdf(std::vector<double>{x}, {{a * z[0]}, {std::log(s2)}});
      const double v = gaussian_logpdf(z, prior) + lik - gaussian_logpdf(z, q);
      const double d = v - mean;
      mean += d / (i + 1);
      m2 += d * (v - mean);
    }
    se = std::sqrt(m2 / (n - 1) / n);
    return mean;
  };
  double se = 0;
  const double exact = elbo_mc(post, se);
  CHECK(std::abs(exact - log_px) <= 3 * se + 1e-12);
  const double off = elbo_mc({{post.mu[0] + 0.5}, {post.log_var[0]}}, se);
  CHECK(off < log_px);
}

TEST_CASE("beta and capacity variants") {
  VaeModel m = VaeModel::create(6, layout(2, 3, MiTarget::categorical()), tiny_arch(), 7);
  std::mt19937_64 rng(8);
  NoiseSource ns(9);
  const Matrix x = binary_batch(5, 6, rng);
  const LatentNoise noise = draw_latent_noise(ns, m.layout, 5, 1);
  const ObjectiveBreakdown e = elbo(m, x, noise, 0.67), b1 = beta_elbo(m, x, noise, 1.0, 0.67);
  CHECK(e.total == b1.total);
  CHECK(e.recon == b1.recon);
  CHECK(beta_elbo(m, x, noise, 0.0, 0.67).total == e.recon);
  CHECK_THROWS_AS(beta_elbo(m, x, noise, -1.0), ContractError);
  const double kl = e.kl_gauss + e.kl_cat;
  CHECK(capacity_elbo(m, x, noise, 0.0, 2.0, 0.67).total == e.recon);
  CHECK(std::abs(capacity_elbo(m, x, noise, 3.0, kl, 0.67).total - e.recon) < 1e-12);

  ObjectiveConfig beta;
  beta.variant = ObjectiveVariant::beta;
  beta.beta = 4.0;
  CHECK(variant_total(beta, -100.0, 6.0, 4.0) == -140.0);
  ObjectiveConfig cap;
  cap.variant = ObjectiveVariant::capacity;
  cap.gamma = 1.0;
  cap.capacity = 3.0;
  CHECK(variant_total(cap, -80.0, 5.0, 0.0) == -82.0);
}

TEST_CASE("total objective arithmetic") {
  ObjectiveBreakdown b;
  b.total = -120.0;
  CHECK(total_objective(b, 2.0, 0.0) == -120.0);
  CHECK(total_objective(b, 2.0, 1.0) == -118.0);
  CHECK(total_objective(b, 3.0, 0.5) > total_objective(b, 2.0, 0.5));
  CHECK_THROWS_AS(total_objective(b, 2.0, -1.0), ContractError);
}

TEST_CASE("property: breakdown total recomposes from its parts") {
  std::mt19937_64 rng(10);
  NoiseSource ns(11);
  for (ObjectiveVariant v : {ObjectiveVariant::elbo, ObjectiveVariant::beta, ObjectiveVariant::capacity})
    for (double lambda : {0.0, 0.7}) {
      const LatentLayout l = layout(2, 3, MiTarget::categorical());
      VaeModel m = VaeModel::create(6, l, tiny_arch(), rng());
      AuxModel q = AuxModel::create(6, l, tiny_arch(), rng());
      ObjectiveConfig cfg;
      cfg.variant = v;
      cfg.beta = 2.5;
      cfg.gamma = 1.5;
      cfg.capacity = 0.4;
      cfg.lambda = lambda;
      cfg.mc_samples = 2;
      const Matrix x = binary_batch(4, 6, rng);
      const ObjectiveBreakdown b = evaluate_objective(m, &q, x, draw_latent_noise(ns, l, 4, 2), cfg, 0.67);
      CHECK(std::abs(recompose_total(b, cfg) - b.total) < 1e-12);
    }
}

TEST_CASE("KL decomposition examples") {
  NoiseSource ns(12);
  Posterior prior;
  prior.mu = Matrix::Zero(1, 3);
  prior.log_var = Matrix::Zero(1, 3);
  prior.logits = Matrix::Zero(1, 4);
  const KlDecomposition z = joint_kl_decomposition_check(prior, 0, ns, 1000);
  CHECK(std::abs(z.mc_joint_kl) < 1e-12);
  CHECK(std::abs(z.analytic_sum) < 1e-12);

  Posterior cat_only;
  cat_only.mu = Matrix::Zero(1, 0);
  cat_only.log_var = Matrix::Zero(1, 0);
  cat_only.logits = (Matrix(1, 3) << 1.0, -0.5, 0.2).finished();
  const KlDecomposition c = joint_kl_decomposition_check(cat_only, 0, ns, 100000);
  const std::vector<double> lg{1.0, -0.5, 0.2};
  CHECK(c.analytic_sum == doctest::Approx(categorical_kl_to_uniform(softmax(lg))).epsilon(1e-14));
  CHECK(std::abs(c.gap) < 3 * c.mc_se);
}

TEST_CASE("KL decomposition gap within 3 SE on random posteriors") {
  std::mt19937_64 rng(13);
  NoiseSource ns(14);
  for (int t = 0; t < 5; ++t) {
    Posterior p;
    p.mu = random_matrix(1, 4, rng, -1.5, 1.5);
    p.log_var = random_matrix(1, 4, rng, -1.5, 1.0);
    p.logits = random_matrix(1, 6, rng, -2, 2);
    const KlDecomposition d = joint_kl_decomposition_check(p, 0, ns, 100000);
    CHECK(std::abs(d.gap) < 3 * d.mc_se);
  }
}

TEST_CASE("MI regularizer constants") {
  const LatentLayout cat = layout(4, 10, MiTarget::categorical());
  CHECK(mi_entropy_constant(cat) == doctest::Approx(2.302585092994046));
  CHECK(mi_entropy_constant(layout(4, 0, MiTarget::gaussian_subvector({0, 1}))) ==
        doctest::Approx(std::log(2 * M_PI * M_E)));

  // A Q that ignores its input and predicts uniform logits scores exactly
  // -log K on any simplex target.
  VaeModel m = VaeModel::create(6, cat, tiny_arch(), 15);
  AuxModel q = AuxModel::create(6, cat, tiny_arch(), 16);
  q.net.layers.back().weight.data.setZero();
  q.net.layers.back().bias.data.setZero();
  std::mt19937_64 rng(17);
  NoiseSource ns(18);
  const Matrix x = binary_batch(8, 6, rng);
  CHECK(std::abs(mi_regularizer(m, q, x, draw_latent_noise(ns, cat, 8, 1), 0.67)) < 1e-12);

  AuxModel wrong = AuxModel::create(6, layout(4, 10, MiTarget::gaussian_subvector({1})), tiny_arch(), 19);
  CHECK_THROWS_AS(mi_regularizer(m, wrong, x, draw_latent_noise(ns, cat, 8, 1), 0.67), ContractError);
}

TEST_CASE("MI regularizer matches the value-level pipeline") {
  const LatentLayout l = layout(3, 4, MiTarget::categorical());
  VaeModel m = VaeModel::create(6, l, tiny_arch(), 20);
  AuxModel q = AuxModel::create(6, l, tiny_arch(), 21);
  std::mt19937_64 rng(22);
  NoiseSource ns(23);
  const Matrix x = binary_batch(5, 6, rng);
  const LatentNoise noise = draw_latent_noise(ns, l, 5, 1);
  const MiPipelineSample s = sample_mi_pipeline(m, x, noise, 0.67);
  Graph g;
  const double via_values = build_aux_objective(g, q, s, l, false).scalar();
  CHECK(std::abs(via_values - mi_regularizer(m, q, x, noise, 0.67)) < 1e-12);
}

TEST_CASE("finite differences: end-to-end objectives through fixed noise") {
  std::mt19937_64 rng(24);
  NoiseSource ns(25);
  struct Variant {
    const char* name;
    ObjectiveVariant v;
    double lambda;
    MiTarget target;
  };
  const std::vector<Variant> variants{
      {"elbo", ObjectiveVariant::elbo, 0.0, MiTarget::categorical()},
      {"beta", ObjectiveVariant::beta, 0.0, MiTarget::categorical()},
      {"capacity", ObjectiveVariant::capacity, 0.0, MiTarget::categorical()},
      {"mi-categorical", ObjectiveVariant::beta, 1.3, MiTarget::categorical()},
      {"mi-gaussian", ObjectiveVariant::elbo, 0.8, MiTarget::gaussian_subvector({0, 2})},
  };
  int trials = 0;
  for (const Variant& var : variants)
    for (int t = 0; t < 4; ++t) {
      const LatentLayout l = layout(3, 3, var.target);
      VaeModel m = VaeModel::create(5, l, tiny_arch(), rng());
      AuxModel q = AuxModel::create(5, l, tiny_arch(), rng());
      ObjectiveConfig cfg;
      cfg.variant = var.v;
      cfg.beta = 3.0;
      cfg.gamma = 2.0;
      cfg.capacity = 0.05;
      cfg.lambda = var.lambda;
      cfg.mc_samples = 2;
      const Matrix x = binary_batch(3, 5, rng);
      const LatentNoise noise = draw_latent_noise(ns, l, 3, 2);
      AuxModel* qp = var.lambda > 0 ? &q : nullptr;
      const double err = fd_max_error_params(all_params(m, qp), [&](Graph& g) {
        return build_objective(g, m, qp, x, noise, cfg, 0.67, TapeOptions{true, qp != nullptr, false}).total;
      }, rng, 8);
      INFO(var.name);
      CHECK(err < kFdTolerance);
      ++trials;
    }
  CHECK(trials == 20);
}

TEST_CASE("objective rejects bad configs") {
  ObjectiveConfig c;
  c.mc_samples = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  CHECK_THROWS_AS(objective_variant_from_string("vamp"), ContractError);
  CHECK(objective_variant_from_string("capacity") == ObjectiveVariant::capacity);
}

}  // TEST_SUITE
