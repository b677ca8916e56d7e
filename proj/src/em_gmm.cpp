// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/em_gmm.hpp"

#include "mivae/distributions.hpp"
#include "mivae/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mivae {

void GmmParams::validate() const {
  if (k() < 1) throw ContractError("gmm: need at least one component");
  if (static_cast<Index>(weights.size()) != k() || variances.rows() != k() || variances.cols() != dim())
    throw DimensionError("gmm: weights/means/variances shapes disagree");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("gmm: negative weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ContractError("gmm: weights do not sum to 1");
  if (variances.size() > 0 && !(variances.minCoeff() > 0.0)) throw ContractError("gmm: variances must be positive");
}

namespace {

// log pi_k + log N(x; mu_k, var_k) for every k.
void component_logs(const GmmParams& p, const double* x, std::vector<double>& out) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  out.resize(static_cast<std::size_t>(p.k()));
  for (Index k = 0; k < p.k(); ++k) {
    const double w = p.weights[static_cast<std::size_t>(k)];
    if (w == 0.0) {
      out[static_cast<std::size_t>(k)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double l = std::log(w);
    for (Index d = 0; d < p.dim(); ++d) {
      const double v = p.variances(k, d);
      const double diff = x[d] - p.means(k, d);
      l -= 0.5 * (log2pi + std::log(v) + diff * diff / v);
    }
    out[static_cast<std::size_t>(k)] = l;
  }
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double a : v) mx = std::max(mx, a);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double a : v) s += std::exp(a - mx);
  return mx + std::log(s);
}

}  // namespace

double gmm_point_loglik(const GmmParams& p, std::span<const double> x) {
  p.validate();
  if (static_cast<Index>(x.size()) != p.dim()) throw DimensionError("gmm_loglik: point dimension mismatch");
  std::vector<double> logs;
  component_logs(p, x.data(), logs);
  return log_sum_exp(logs);
}

double gmm_loglik(const GmmParams& p, const Matrix& x) {
  p.validate();
  if (x.cols() != p.dim()) throw DimensionError("gmm_loglik: data dimension mismatch");
  std::vector<double> logs;
  double total = 0.0;
  for (Index n = 0; n < x.rows(); ++n) {
    component_logs(p, x.row(n).data(), logs);
    total += log_sum_exp(logs);
  }
  return total;
}

Matrix em_e_step(const GmmParams& p, const Matrix& x) {
  p.validate();
  if (x.cols() != p.dim()) throw DimensionError("em_e_step: data dimension mismatch");
  Matrix r(x.rows(), p.k());
  std::vector<double> logs;
  for (Index n = 0; n < x.rows(); ++n) {
    component_logs(p, x.row(n).data(), logs);
    const double lse = log_sum_exp(logs);
    for (Index k = 0; k < p.k(); ++k) r(n, k) = std::exp(logs[static_cast<std::size_t>(k)] - lse);
    r.row(n) /= r.row(n).sum();
  }
  return r;
}

GmmParams em_m_step(const Matrix& resp, const Matrix& x, double variance_floor) {
  if (resp.rows() != x.rows()) throw DimensionError("em_m_step: responsibilities and data row counts differ");
  if (x.rows() == 0) throw ContractError("em_m_step: empty data");
  if (!(variance_floor > 0.0)) throw ContractError("em_m_step: variance floor must be positive");
  const Index kc = resp.cols(), d = x.cols();
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd gmean = x.colwise().mean();
  const Eigen::RowVectorXd gvar =
      ((x.rowwise() - gmean).array().square().colwise().sum() / n).max(variance_floor).matrix();

  GmmParams p;
  p.weights.resize(static_cast<std::size_t>(kc));
  p.means.resize(kc, d);
  p.variances.resize(kc, d);
  const Eigen::RowVectorXd nk = resp.colwise().sum();
  for (Index k = 0; k < kc; ++k) {
    p.weights[static_cast<std::size_t>(k)] = nk(k) / n;
    if (nk(k) <= 0.0) {
      p.means.row(k) = gmean;
      p.variances.row(k) = gvar;
      continue;
    }
    p.means.row(k) = (resp.col(k).transpose() * x) / nk(k);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(d);
    for (Index i = 0; i < x.rows(); ++i) v += resp(i, k) * (x.row(i) - p.means.row(k)).array().square().matrix();
    p.variances.row(k) = (v / nk(k)).array().max(variance_floor).matrix();
  }
  double s = 0.0;
  for (double w : p.weights) s += w;
  for (double& w : p.weights) w /= s;
  return p;
}

GmmParams gmm_init(const Matrix& x, Index k, std::uint64_t seed) {
  if (k < 1) throw ContractError("gmm_init: need at least one component");
  if (x.rows() < k) throw ContractError("gmm_init: fewer points than components");
  NoiseSource noise(seed);
  const Index n = x.rows();
  Matrix seeds(k, x.cols());
  seeds.row(0) = x.row(static_cast<Index>(noise.uniform() * static_cast<double>(n)));
  Eigen::VectorXd d2 = (x.rowwise() - seeds.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      const double u = noise.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(noise.uniform() * static_cast<double>(n));
    }
    seeds.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - seeds.row(c)).rowwise().squaredNorm());
  }
  // Hard nearest-seed assignment, then one M-step. Global variances merge
  // clusters when the separation is large relative to the spread.
  Matrix resp = Matrix::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    (seeds.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    resp(i, best) = 1.0;
  }
  return em_m_step(resp, x);
}

EmFit em_fit(const Matrix& x, Index k, int iters, std::uint64_t seed) {
  if (iters < 0) throw ContractError("em_fit: iters must be >= 0");
  EmFit fit{gmm_init(x, k, seed), {}};
  fit.trace.push_back(gmm_loglik(fit.params, x));
  for (int it = 0; it < iters; ++it) {
    fit.params = em_m_step(em_e_step(fit.params, x), x);
    fit.trace.push_back(gmm_loglik(fit.params, x));
  }
  return fit;
}

}  // namespace mivae
