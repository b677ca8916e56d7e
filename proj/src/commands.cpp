// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/commands.hpp"

#include "mivae/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mivae {

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f << s;
  if (!f) throw IoError("write to '" + p.string() + "' failed");
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void tile_shape(const Dataset& ds, Index dim, Index& h, Index& w) {
  if (ds.height * ds.width == dim) {
    h = ds.height;
    w = ds.width;
    return;
  }
  const auto s = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (s * s == dim) {
    h = w = s;
  } else {
    h = 1;
    w = dim;
  }
}

std::filesystem::path checkpoint_path(const RunConfig& cfg) {
  if (!cfg.eval.checkpoint.empty()) return cfg.eval.checkpoint;
  return std::filesystem::path(cfg.output_dir) / "ckpt_final.bin";
}

const Dataset& anchor_source(const RunData& d) { return d.test.size() > 0 ? d.test : d.train; }

}  // namespace

RunData load_run_data(const DataConfig& cfg) {
  const std::filesystem::path dir = data_dir(cfg.dir);
  std::optional<std::filesystem::path> labels;
  if (!cfg.labels.empty()) labels = dir / cfg.labels;
  const Dataset all = binarize(idx_load(dir / cfg.images, labels), cfg.binarization);
  const Index n = all.size();
  const Index test = std::min<Index>(cfg.test_count, n);
  const Index avail = n - test;
  const Index train = cfg.train_count == 0 ? avail : std::min<Index>(cfg.train_count, avail);
  if (train == 0) throw ContractError("data: no training rows left after holding out " + std::to_string(test));
  return RunData{subset(all, 0, train), subset(all, n - test, test)};
}

void echo_config(const RunConfig& cfg) {
  write_text(std::filesystem::path(cfg.output_dir) / "config.resolved", cfg.to_text());
}

TrainOutcome cmd_train(const RunConfig& cfg, const Dataset& train_ds) {
  cfg.validate();
  echo_config(cfg);
  TrainHooks hooks;
  hooks.out_dir = cfg.output_dir;
  const TrainState st = train(train_ds.images, cfg.layout, cfg.arch, cfg.train, hooks);
  TrainOutcome out;
  out.steps = st.step;
  if (!st.history.empty()) out.last = st.history.back();
  return out;
}

TrainOutcome cmd_train(const RunConfig& cfg) {
  cfg.validate();
  return cmd_train(cfg, load_run_data(cfg.data).train);
}

EvalSummary evaluate_checkpoint(const Checkpoint& ck, const RunData& data, const EvalConfig& cfg) {
  const VaeModel& m = ck.model;
  const Dataset& ev = anchor_source(data);
  EvalSummary s;
  s.mi = evaluate_mi(m, data.train.images, ev.images, cfg.mi);
  const Posterior post = encode(m, ev.images);
  double klg = 0.0;
  for (Index r = 0; r < post.mu.rows(); ++r) klg += gaussian_kl_to_std(post.gaussian(r));
  s.kl_gauss = klg / static_cast<double>(ev.size());
  if (m.layout.has_categorical()) {
    const Matrix probs = post.probs();
    double klc = 0.0;
    for (Index r = 0; r < probs.rows(); ++r)
      klc += categorical_kl_to_uniform(std::span<const double>(probs.row(r).data(), static_cast<std::size_t>(probs.cols())));
    s.kl_cat = klc / static_cast<double>(ev.size());
    s.histogram = prob_histogram(probs, cfg.histogram_bins);
    if (ev.has_labels() && data.train.has_labels()) {
      int max_label = 0;
      for (int l : data.train.labels) max_label = std::max(max_label, l);
      for (int l : ev.labels) max_label = std::max(max_label, l);
      const Index n_labels = max_label + 1;
      s.label_counts = label_counts(argmax_rows(probs), ev.labels, static_cast<Index>(m.layout.categorical_k), n_labels);
      s.accuracy = assignment_accuracy(categorical_assignments(m, data.train.images), data.train.labels,
                                       argmax_rows(probs), ev.labels, static_cast<Index>(m.layout.categorical_k),
                                       n_labels);
    }
  }
  return s;
}

EvalSummary cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  const std::filesystem::path ckp = checkpoint_path(cfg);
  const Checkpoint ck = load_checkpoint(ckp);
  const RunData data = load_run_data(cfg.data);
  if (data.train.dim() != ck.model.data_dim) throw DimensionError("eval: data width does not match checkpoint");
  echo_config(cfg);
  EvalSummary s = evaluate_checkpoint(ck, data, cfg.eval);
  s.checkpoint = ckp.string();
  write_eval_reports(cfg.output_dir, s);
  return s;
}

std::filesystem::path cmd_traverse(const RunConfig& cfg) {
  cfg.validate();
  const Checkpoint ck = load_checkpoint(checkpoint_path(cfg));
  const RunData data = load_run_data(cfg.data);
  const Dataset& src = anchor_source(data);
  if (cfg.traverse.anchor < 0 || cfg.traverse.anchor >= src.size())
    throw ContractError("traverse: anchor row " + std::to_string(cfg.traverse.anchor) + " out of range");
  Index h = 0, w = 0;
  tile_shape(src, ck.model.data_dim, h, w);
  TraversalSpec spec{cfg.traverse.indices, cfg.traverse.low, cfg.traverse.high, cfg.traverse.steps};
  const Matrix grid = traversal_grid(ck.model, src.images.row(cfg.traverse.anchor), spec, h, w);
  echo_config(cfg);
  const std::filesystem::path out = std::filesystem::path(cfg.output_dir) / "figures" / "traverse.pgm";
  write_pgm(out, grid);
  return out;
}

std::filesystem::path cmd_cat_traverse(const RunConfig& cfg) {
  cfg.validate();
  const Checkpoint ck = load_checkpoint(checkpoint_path(cfg));
  const RunData data = load_run_data(cfg.data);
  const Dataset& src = anchor_source(data);
  Matrix anchors(static_cast<Index>(cfg.traverse.cat_anchors.size()), src.dim());
  for (std::size_t i = 0; i < cfg.traverse.cat_anchors.size(); ++i) {
    const long a = cfg.traverse.cat_anchors[i];
    if (a < 0 || a >= src.size()) throw ContractError("cat-traverse: anchor row " + std::to_string(a) + " out of range");
    anchors.row(static_cast<Index>(i)) = src.images.row(a);
  }
  Index h = 0, w = 0;
  tile_shape(src, ck.model.data_dim, h, w);
  const Matrix grid = cat_traversal_grid(ck.model, anchors, h, w);
  echo_config(cfg);
  const std::filesystem::path out = std::filesystem::path(cfg.output_dir) / "figures" / "cat_traverse.pgm";
  write_pgm(out, grid);
  return out;
}

SyntheticGmm make_synthetic_gmm(Index components, Index per_component, Index dim, double separation,
                                std::uint64_t seed) {
  if (components < 1 || per_component < 1 || dim < 1) throw ContractError("synthetic gmm: sizes must be >= 1");
  NoiseSource noise(seed);
  SyntheticGmm g;
  g.true_means.resize(components, dim);
  // Centers on a line along the first axis keep every pair `separation` apart.
  for (Index k = 0; k < components; ++k)
    for (Index d = 0; d < dim; ++d) g.true_means(k, d) = d == 0 ? separation * static_cast<double>(k) : noise.normal();
  g.x.resize(components * per_component, dim);
  for (Index k = 0; k < components; ++k)
    for (Index i = 0; i < per_component; ++i)
      for (Index d = 0; d < dim; ++d) g.x(k * per_component + i, d) = g.true_means(k, d) + noise.normal();
  return g;
}

EmFit cmd_em_demo(const EmDemoOptions& opt) {
  const SyntheticGmm data =
      make_synthetic_gmm(opt.components, opt.points_per_component, opt.dim, opt.separation, opt.seed);
  const EmFit fit = em_fit(data.x, opt.components, opt.iters, opt.seed);
  std::string params = "component,weight";
  for (Index d = 0; d < opt.dim; ++d) params += ",mean_" + std::to_string(d);
  for (Index d = 0; d < opt.dim; ++d) params += ",var_" + std::to_string(d);
  params += "\n";
  for (Index k = 0; k < fit.params.k(); ++k) {
    params += std::to_string(k) + "," + g17(fit.params.weights[static_cast<std::size_t>(k)]);
    for (Index d = 0; d < opt.dim; ++d) params += "," + g17(fit.params.means(k, d));
    for (Index d = 0; d < opt.dim; ++d) params += "," + g17(fit.params.variances(k, d));
    params += "\n";
  }
  write_text(opt.output_dir / "em_params.csv", params);
  std::string trace = "iter,loglik\n";
  for (std::size_t i = 0; i < fit.trace.size(); ++i) trace += std::to_string(i) + "," + g17(fit.trace[i]) + "\n";
  write_text(opt.output_dir / "em_trace.csv", trace);
  return fit;
}

ToyMiOutcome cmd_toy_mi(const ToyMiOptions& opt) {
  const ToyModel toy = make_toy_joint(opt.kind, opt.k, opt.epsilon, opt.mi.seed);
  ToyMiOutcome out;
  out.exact = brute_force_mi(toy.joint);
  out.report = toy_mi_lower_bound(toy, opt.mi);
  write_text(opt.output_dir / "reports" / "toy_mi.csv",
             "kind,k,epsilon,exact_mi,lower_bound,lower_se,kl_upper_bound\n" + to_string(opt.kind) + "," +
                 std::to_string(opt.k) + "," + g17(opt.epsilon) + "," + g17(out.exact) + "," +
                 g17(out.report.lower.value) + "," + g17(out.report.lower.se) + "," + g17(out.report.upper.value) +
                 "\n");
  return out;
}

}  // namespace mivae
