// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/mi_eval.hpp"

#include "mivae/error.hpp"
#include "mivae/objectives.hpp"
#include "mivae/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mivae {

void DiscreteJoint::validate() const {
  if (table.size() == 0) throw ContractError("discrete joint: empty table");
  if (table.minCoeff() < 0.0) throw ContractError("discrete joint: negative probability");
  if (std::abs(table.sum() - 1.0) > 1e-12) throw ContractError("discrete joint: table does not sum to 1");
}

std::vector<double> DiscreteJoint::px() const {
  std::vector<double> p(static_cast<std::size_t>(nx()));
  for (Index i = 0; i < nx(); ++i) p[static_cast<std::size_t>(i)] = table.row(i).sum();
  return p;
}

std::vector<double> DiscreteJoint::pz() const {
  std::vector<double> p(static_cast<std::size_t>(nz()));
  for (Index j = 0; j < nz(); ++j) p[static_cast<std::size_t>(j)] = table.col(j).sum();
  return p;
}

Matrix DiscreteJoint::z_given_x() const {
  Matrix c(nx(), nz());
  for (Index i = 0; i < nx(); ++i) {
    const double s = table.row(i).sum();
    if (s > 0.0)
      c.row(i) = table.row(i) / s;
    else
      c.row(i).setConstant(1.0 / static_cast<double>(nz()));
  }
  return c;
}

Matrix DiscreteJoint::x_given_z() const {
  Matrix c(nz(), nx());
  for (Index j = 0; j < nz(); ++j) {
    const double s = table.col(j).sum();
    if (s > 0.0)
      c.row(j) = table.col(j).transpose() / s;
    else
      c.row(j).setConstant(1.0 / static_cast<double>(nx()));
  }
  return c;
}

double brute_force_mi(const DiscreteJoint& j) {
  j.validate();
  const std::vector<double> px = j.px(), pz = j.pz();
  double mi = 0.0;
  for (Index a = 0; a < j.nx(); ++a)
    for (Index b = 0; b < j.nz(); ++b) {
      const double p = j.table(a, b);
      if (p > 0.0) mi += p * std::log(p / (px[static_cast<std::size_t>(a)] * pz[static_cast<std::size_t>(b)]));
    }
  return std::max(mi, 0.0);
}

Lemma1Result lemma1_check(const DiscreteJoint& j, const Matrix& f) {
  j.validate();
  if (f.rows() != j.nx() || f.cols() != j.nz())
    throw DimensionError("lemma1_check: f is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                         ", joint is " + std::to_string(j.nx()) + "x" + std::to_string(j.nz()));
  const std::vector<double> px = j.px();
  const Matrix y_given_x = j.z_given_x();
  const Matrix x_given_y = j.x_given_z();
  Lemma1Result r;
  r.lhs = j.table.cwiseProduct(f).sum();
  for (Index x = 0; x < j.nx(); ++x) {
    if (px[static_cast<std::size_t>(x)] == 0.0) continue;
    for (Index y = 0; y < j.nz(); ++y) {
      const double pxy = px[static_cast<std::size_t>(x)] * y_given_x(x, y);
      if (pxy == 0.0) continue;
      double inner = 0.0;
      for (Index x2 = 0; x2 < j.nx(); ++x2) inner += x_given_y(y, x2) * f(x2, y);
      r.rhs += pxy * inner;
    }
  }
  r.diff = std::abs(r.lhs - r.rhs);
  return r;
}

void MiEvalConfig::validate() const {
  if (budget < 1) throw ContractError("mi_lower_bound: budget must be >= 1 training step");
  if (batch_size < 1) throw ContractError("mi_lower_bound: batch_size must be >= 1");
  if (eval_passes < 2) throw ContractError("mi_lower_bound: need at least 2 evaluation passes");
  if (!(tau > 0.0)) throw ContractError("mi_lower_bound: temperature must be positive");
}

namespace {

Estimate mean_se(const std::vector<double>& v) {
  Estimate e;
  const double n = static_cast<double>(v.size());
  e.value = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double a : v) ss += (a - e.value) * (a - e.value);
    e.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

constexpr Index kEvalChunk = 500;

}  // namespace

MiReport mi_lower_bound(const VaeModel& m, const Matrix& train_x, const Matrix& eval_x, const MiEvalConfig& cfg) {
  cfg.validate();
  if (train_x.rows() == 0 || eval_x.rows() == 0) throw ContractError("mi_lower_bound: empty data");
  if (train_x.cols() != m.data_dim || eval_x.cols() != m.data_dim)
    throw DimensionError("mi_lower_bound: data width does not match model");
  const LatentLayout& layout = m.layout;
  Architecture arch;
  arch.aux_hidden = cfg.aux_hidden;
  arch.hidden_activation = cfg.hidden_activation;
  AuxModel q = AuxModel::create(m.data_dim, layout, arch, derive_seed(cfg.seed, 10));
  Adam opt(cfg.optimizer);
  NoiseSource noise(derive_seed(cfg.seed, 11));
  std::mt19937_64 rng(derive_seed(cfg.seed, 12));

  MiReport report;
  report.q_training_curve.reserve(static_cast<std::size_t>(cfg.budget));
  const Index n = train_x.rows();
  const Index bs = std::min<Index>(cfg.batch_size, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Index cursor = n;
  Matrix batch(bs, train_x.cols());
  for (int step = 0; step < cfg.budget; ++step) {
    for (Index r = 0; r < bs; ++r) {
      if (cursor == n) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.row(r) = train_x.row(order[static_cast<std::size_t>(cursor++)]);
    }
    const LatentNoise ln = draw_latent_noise(noise, layout, bs, 1);
    const MiPipelineSample s = sample_mi_pipeline(m, batch, ln, cfg.tau);
    Graph g;
    Var obj = build_aux_objective(g, q, s, layout, true);
    if (!std::isfinite(obj.scalar())) throw NumericError("mi_lower_bound: non-finite Q objective");
    report.q_training_curve.push_back(obj.scalar());
    g.backward(neg(obj));
    std::vector<Tensor*> params = q.parameters();
    if (cfg.clip_norm > 0.0) clip_grad_norm(params, cfg.clip_norm);
    opt.step(params);
  }

  std::vector<double> passes;
  for (int p = 0; p < cfg.eval_passes; ++p) {
    NoiseSource pass_noise(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(p)));
    double acc = 0.0;
    for (Index start = 0; start < eval_x.rows(); start += kEvalChunk) {
      const Index rows = std::min(kEvalChunk, eval_x.rows() - start);
      const Matrix chunk = eval_x.middleRows(start, rows);
      const LatentNoise ln = draw_latent_noise(pass_noise, layout, rows, 1);
      const MiPipelineSample s = sample_mi_pipeline(m, chunk, ln, cfg.tau);
      Graph g;
      acc += build_aux_objective(g, q, s, layout, false).scalar() * static_cast<double>(rows);
    }
    passes.push_back(acc / static_cast<double>(eval_x.rows()));
  }
  report.lower = mean_se(passes);
  return report;
}

Estimate kl_upper_bound(const VaeModel& m, const Matrix& x) {
  if (x.rows() == 0) throw ContractError("kl_upper_bound: empty data");
  const Posterior post = encode(m, x);
  std::vector<double> per(static_cast<std::size_t>(x.rows()));
  if (m.layout.mi_target.kind == MiTarget::Kind::categorical) {
    const Matrix probs = post.probs();
    for (Index r = 0; r < x.rows(); ++r)
      per[static_cast<std::size_t>(r)] = categorical_kl_to_uniform(
          std::span<const double>(probs.row(r).data(), static_cast<std::size_t>(probs.cols())));
  } else {
    const auto& idx = m.layout.mi_target.indices;
    for (Index r = 0; r < x.rows(); ++r) {
      double kl = 0.0;
      for (std::size_t i : idx) {
        const double mu = post.mu(r, static_cast<Index>(i));
        const double lv = post.log_var(r, static_cast<Index>(i));
        kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
      }
      per[static_cast<std::size_t>(r)] = kl;
    }
  }
  Estimate e = mean_se(per);
  if (x.rows() == 1) e.se = 0.0;
  return e;
}

MiReport evaluate_mi(const VaeModel& m, const Matrix& train_x, const Matrix& eval_x, const MiEvalConfig& cfg) {
  MiReport r = mi_lower_bound(m, train_x, eval_x, cfg);
  r.upper = kl_upper_bound(m, eval_x);
  return r;
}

std::vector<long> prob_histogram(const Matrix& probs, int bins) {
  if (bins < 1) throw ContractError("prob_histogram: bins must be >= 1");
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < probs.size(); ++i) {
    const double p = probs.data()[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("prob_histogram: probability outside [0, 1]");
    const int b = std::min(bins - 1, static_cast<int>(p * bins));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

std::vector<long> categorical_prob_histogram(const VaeModel& m, const Matrix& x, int bins) {
  if (!m.layout.has_categorical()) throw ContractError("categorical_prob_histogram: model has no categorical latent");
  return prob_histogram(encode(m, x).probs(), bins);
}

std::vector<std::size_t> argmax_rows(const Matrix& probs) {
  std::vector<std::size_t> out(static_cast<std::size_t>(probs.rows()));
  for (Index r = 0; r < probs.rows(); ++r) {
    Index a = 0;
    probs.row(r).maxCoeff(&a);
    out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(a);
  }
  return out;
}

std::vector<std::size_t> categorical_assignments(const VaeModel& m, const Matrix& x) {
  if (!m.layout.has_categorical()) throw ContractError("categorical_assignments: model has no categorical latent");
  return argmax_rows(encode(m, x).probs());
}

CountMatrix label_counts(std::span<const std::size_t> assignment, std::span<const int> labels, Index k,
                         Index n_labels) {
  if (assignment.size() != labels.size())
    throw DimensionError("label_counts: " + std::to_string(assignment.size()) + " assignments for " +
                         std::to_string(labels.size()) + " labels");
  CountMatrix c = CountMatrix::Zero(k, n_labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (static_cast<Index>(assignment[i]) >= k) throw ContractError("label_counts: category out of range");
    if (labels[i] < 0 || labels[i] >= n_labels) throw ContractError("label_counts: label out of range");
    ++c(static_cast<Index>(assignment[i]), labels[i]);
  }
  return c;
}

CountMatrix onehot_label_counts(const VaeModel& m, const Matrix& x, std::span<const int> labels, Index n_labels) {
  return label_counts(categorical_assignments(m, x), labels, static_cast<Index>(m.layout.categorical_k), n_labels);
}

std::vector<int> majority_mapping(const CountMatrix& counts) {
  std::vector<int> map(static_cast<std::size_t>(counts.rows()), 0);
  for (Index c = 0; c < counts.rows(); ++c) {
    Index best = 0;
    for (Index l = 1; l < counts.cols(); ++l)
      if (counts(c, l) > counts(c, best)) best = l;
    map[static_cast<std::size_t>(c)] = static_cast<int>(best);
  }
  return map;
}

double assignment_accuracy(std::span<const std::size_t> train_assign, std::span<const int> train_labels,
                           std::span<const std::size_t> test_assign, std::span<const int> test_labels, Index k,
                           Index n_labels) {
  if (test_assign.size() != test_labels.size()) throw DimensionError("accuracy: test assignment/label mismatch");
  if (test_labels.empty()) throw ContractError("accuracy: empty test set");
  const std::vector<int> map = majority_mapping(label_counts(train_assign, train_labels, k, n_labels));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test_labels.size(); ++i) {
    if (static_cast<Index>(test_assign[i]) >= k) throw ContractError("accuracy: category out of range");
    ok += map[test_assign[i]] == test_labels[i];
  }
  return static_cast<double>(ok) / static_cast<double>(test_labels.size());
}

double categorical_accuracy(const VaeModel& m, const Matrix& train_x, std::span<const int> train_labels,
                            const Matrix& test_x, std::span<const int> test_labels, Index n_labels) {
  const auto tr = categorical_assignments(m, train_x);
  const auto te = categorical_assignments(m, test_x);
  return assignment_accuracy(tr, train_labels, te, test_labels, static_cast<Index>(m.layout.categorical_k), n_labels);
}

ToyModel toy_from_joint(const DiscreteJoint& j) {
  j.validate();
  return ToyModel{j, j.z_given_x(), j.x_given_z()};
}

double toy_entropy_constant(const ToyModel& t) {
  double h = 0.0;
  for (double p : t.prior())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

namespace {

std::size_t draw_index(NoiseSource& noise, const double* probs, Index n) {
  const double u = noise.uniform();
  double c = 0.0;
  for (Index i = 0; i < n; ++i) {
    c += probs[i];
    if (u < c) return static_cast<std::size_t>(i);
  }
  // Rounding left u above the last partial sum: take the last nonzero cell.
  for (Index i = n - 1; i > 0; --i)
    if (probs[i] > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

struct ToyPair {
  std::size_t x_prime;
  std::size_t z;
};

ToyPair toy_draw(const ToyModel& t, const std::vector<double>& px, NoiseSource& noise) {
  const std::size_t x = draw_index(noise, px.data(), static_cast<Index>(px.size()));
  const std::size_t z = draw_index(noise, t.encoder.row(static_cast<Index>(x)).data(), t.encoder.cols());
  const std::size_t xp = draw_index(noise, t.decoder.row(static_cast<Index>(z)).data(), t.decoder.cols());
  return {xp, z};
}

double row_log_softmax_at(const Matrix& logits, std::size_t row, std::size_t col) {
  const auto r = logits.row(static_cast<Index>(row));
  const double mx = r.maxCoeff();
  return r(static_cast<Index>(col)) - mx - std::log((r.array() - mx).exp().sum());
}

}  // namespace

MiReport toy_mi_lower_bound(const ToyModel& t, const ToyMiConfig& cfg, const std::optional<Matrix>& init_logits) {
  if (cfg.budget < 0 || (cfg.budget == 0 && !init_logits))
    throw ContractError("toy_mi_lower_bound: budget must be >= 1 without an initial Q");
  if (cfg.batch_size < 1 || cfg.eval_passes < 2 || cfg.eval_samples < 1)
    throw ContractError("toy_mi_lower_bound: invalid batch/eval settings");
  const Index nx = t.joint.nx(), nz = t.joint.nz();
  Tensor q(nx, nz);
  if (init_logits) {
    if (init_logits->rows() != nx || init_logits->cols() != nz)
      throw DimensionError("toy_mi_lower_bound: initial Q has the wrong shape");
    q.data = *init_logits;
  } else {
    q.data.setZero();
  }
  const std::vector<double> px = t.joint.px();
  const double h = toy_entropy_constant(t);
  Adam opt(cfg.optimizer);
  NoiseSource noise(derive_seed(cfg.seed, 20));
  Tensor* params[] = {&q};

  MiReport report;
  for (int step = 0; step < cfg.budget; ++step) {
    double obj = 0.0;
    const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const ToyPair s = toy_draw(t, px, noise);
      const auto row = q.data.row(static_cast<Index>(s.x_prime));
      const Eigen::RowVectorXd p = (row.array() - row.maxCoeff()).exp().matrix();
      const Eigen::RowVectorXd sm = p / p.sum();
      obj += row_log_softmax_at(q.data, s.x_prime, s.z) * inv_b;
      // Descent on the negated objective: d(-log softmax_z)/d logits = softmax - onehot.
      q.grad.row(static_cast<Index>(s.x_prime)) += sm * inv_b;
      q.grad(static_cast<Index>(s.x_prime), static_cast<Index>(s.z)) -= inv_b;
    }
    report.q_training_curve.push_back(obj + h);
    opt.step(params);
  }

  std::vector<double> passes;
  for (int p = 0; p < cfg.eval_passes; ++p) {
    NoiseSource pass_noise(derive_seed(cfg.seed, 200 + static_cast<std::uint64_t>(p)));
    double acc = 0.0;
    for (int i = 0; i < cfg.eval_samples; ++i) {
      const ToyPair s = toy_draw(t, px, pass_noise);
      acc += row_log_softmax_at(q.data, s.x_prime, s.z);
    }
    passes.push_back(acc / cfg.eval_samples + h);
  }
  report.lower = mean_se(passes);
  report.upper = {toy_kl_upper_bound(t), 0.0};
  return report;
}

double toy_kl_upper_bound(const ToyModel& t) {
  const std::vector<double> px = t.joint.px();
  const std::vector<double> pz = t.prior();
  double kl = 0.0;
  for (Index x = 0; x < t.joint.nx(); ++x) {
    if (px[static_cast<std::size_t>(x)] == 0.0) continue;
    for (Index z = 0; z < t.joint.nz(); ++z) {
      const double q = t.encoder(x, z);
      if (q > 0.0) kl += px[static_cast<std::size_t>(x)] * q * std::log(q / pz[static_cast<std::size_t>(z)]);
    }
  }
  return kl;
}

}  // namespace mivae
