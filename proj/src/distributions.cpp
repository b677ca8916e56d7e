// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/distributions.hpp"

#include "mivae/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mivae {

namespace {

constexpr double kSimplexTol = 1e-9;

void check_simplex(std::span<const double> p, const char* op) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ContractError(std::string(op) + ": negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > kSimplexTol)
    throw ContractError(std::string(op) + ": probabilities sum to " + std::to_string(total));
}

void check_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

void DiagGaussianParams::validate() const {
  check_same_length(mu.size(), log_var.size(), "DiagGaussianParams");
  for (double v : log_var)
    if (!std::isfinite(v)) throw ContractError("DiagGaussianParams: non-finite log-variance");
}

void CategoricalParams::validate() const {
  if (logits.size() < 2) throw ContractError("CategoricalParams: need K >= 2");
  if (!(tau > 0.0)) throw ContractError("CategoricalParams: temperature must be positive");
}

double NoiseSource::uniform() {
  // (k + 0.5) / 2^53 for k in [0, 2^53) never hits 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseSource::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseSource::gumbel() { return -std::log(-std::log(uniform())); }

Matrix NoiseSource::normal(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal();
  return m;
}

Matrix NoiseSource::gumbel(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = gumbel();
  return m;
}

std::string NoiseSource::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void NoiseSource::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine_;
  if (!is) throw FormatError("NoiseSource: malformed engine state");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("log_softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::vector<double> out(logits.begin(), logits.end());
  for (double& v : out) v -= lse;
  return out;
}

std::vector<double> reparam_sample(const DiagGaussianParams& p, std::span<const double> eps) {
  p.validate();
  check_same_length(eps.size(), p.mu.size(), "reparam_sample");
  std::vector<double> z(p.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = p.mu[i] + std::exp(0.5 * p.log_var[i]) * eps[i];
  return z;
}

double gaussian_kl_to_std(const DiagGaussianParams& p) {
  p.validate();
  double kl = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i)
    kl += 0.5 * (p.mu[i] * p.mu[i] + std::exp(p.log_var[i]) - 1.0 - p.log_var[i]);
  return kl;
}

double gaussian_logpdf(std::span<const double> z, const DiagGaussianParams& p) {
  p.validate();
  check_same_length(z.size(), p.mu.size(), "gaussian_logpdf");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - p.mu[i];
    lp += -0.5 * (log2pi + p.log_var[i] + d * d * std::exp(-p.log_var[i]));
  }
  return lp;
}

double std_gaussian_entropy(std::size_t dim) {
  return 0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

std::vector<double> gumbel_softmax_sample(const CategoricalParams& p, std::span<const double> g) {
  p.validate();
  check_same_length(g.size(), p.logits.size(), "gumbel_softmax_sample");
  std::vector<double> lp = log_softmax(p.logits);
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = (lp[i] + g[i]) / p.tau;
  return softmax(lp);
}

double categorical_kl_to_uniform(std::span<const double> probs) {
  check_simplex(probs, "categorical_kl_to_uniform");
  const double k = static_cast<double>(probs.size());
  double kl = 0.0;
  for (double v : probs)
    if (v > 0.0) kl += v * std::log(v * k);
  return std::max(kl, 0.0);
}

double entropy(std::span<const double> probs) {
  check_simplex(probs, "entropy");
  double h = 0.0;
  for (double v : probs)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(h, 0.0);
}

double bernoulli_loglik(std::span<const double> x, std::span<const double> p) {
  check_same_length(x.size(), p.size(), "bernoulli_loglik");
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw ContractError("bernoulli_loglik: target outside [0, 1]");
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    ll += x[i] * std::log(q) + (1.0 - x[i]) * std::log1p(-q);
  }
  return ll;
}

double categorical_logprob(std::span<const double> probs, std::span<const double> y) {
  check_same_length(probs.size(), y.size(), "categorical_logprob");
  check_simplex(probs, "categorical_logprob");
  check_simplex(y, "categorical_logprob");
  double lp = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] > 0.0) lp += y[i] * std::log(probs[i]);
  return lp;
}

// ---- tape ops ---------------------------------------------------------------

Var reparam_sample(Var mu, Var log_var, Var eps) {
  return add(mu, mul(exp(scale(log_var, 0.5)), eps));
}

Var gaussian_kl_to_std(Var mu, Var log_var) {
  Var inner = add_scalar(sub(add(square(mu), exp(log_var)), log_var), -1.0);
  return scale(row_sum(inner), 0.5);
}

Var gaussian_logpdf(Var z, Var mu, Var log_var) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Var maha = mul(square(sub(z, mu)), exp(neg(log_var)));
  return scale(row_sum(add_scalar(add(log_var, maha), log2pi)), -0.5);
}

Var gumbel_softmax_sample(Var logits, Var gumbel, double tau) {
  if (!(tau > 0.0)) throw ContractError("gumbel_softmax_sample: temperature must be positive");
  return softmax(scale(add(log_softmax(logits), gumbel), 1.0 / tau));
}

Var categorical_kl_to_uniform(Var logits) {
  const double log_k = std::log(static_cast<double>(logits.cols()));
  Var lp = log_softmax(logits);
  return row_sum(mul(exp(lp), add_scalar(lp, log_k)));
}

Var categorical_logprob(Var logits, Var y) { return row_sum(mul(y, log_softmax(logits))); }

Var bernoulli_loglik(Var x, Var p) {
  if (x.rows() != p.rows() || x.cols() != p.cols()) throw DimensionError("bernoulli_loglik: shape mismatch");
  const Matrix& vx = x.value();
  const Matrix& vp = p.value();
  Matrix out(vx.rows(), 1);
  for (Index r = 0; r < vx.rows(); ++r) {
    double ll = 0.0;
    for (Index c = 0; c < vx.cols(); ++c) {
      const double q = std::clamp(vp(r, c), kProbClamp, 1.0 - kProbClamp);
      ll += vx(r, c) * std::log(q) + (1.0 - vx(r, c)) * std::log1p(-q);
    }
    out(r, 0) = ll;
  }
  const std::size_t ix = x.id, ip = p.id;
  return x.graph->emit(std::move(out), {x, p}, [ix, ip](Graph& g, std::size_t self) {
    const Matrix& d = g.grad_buffer(self);
    const Matrix& vx = g.value(Var{&g, ix});
    const Matrix& vp = g.value(Var{&g, ip});
    const bool gx = g.requires_grad(Var{&g, ix});
    const bool gp = g.requires_grad(Var{&g, ip});
    for (Index r = 0; r < vx.rows(); ++r) {
      for (Index c = 0; c < vx.cols(); ++c) {
        const double raw = vp(r, c);
        const double q = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
        if (gx) g.grad_buffer(ix)(r, c) += d(r, 0) * (std::log(q) - std::log1p(-q));
        if (gp && raw == q) g.grad_buffer(ip)(r, c) += d(r, 0) * (vx(r, c) / q - (1.0 - vx(r, c)) / (1.0 - q));
      }
    }
  });
}

Var bernoulli_loglik_logits(Var x, Var logits) {
  return row_sum(sub(mul(x, logits), softplus(logits)));
}

}  // namespace mivae
