// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/training.hpp"

#include "mivae/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

namespace mivae {

void TauSchedule::validate() const {
  if (!(end > 0.0)) throw ContractError("tau schedule: end must be > 0");
  if (!(start >= end)) throw ContractError("tau schedule: start must be >= end");
}

double tau_at(std::uint64_t step, std::uint64_t total_steps, const TauSchedule& s) {
  s.validate();
  if (s.start == s.end || total_steps <= 1) return s.start;
  const std::uint64_t last = total_steps - 1;
  const double frac = static_cast<double>(std::min(step, last)) / static_cast<double>(last);
  if (frac == 1.0) return s.end;
  if (s.decay == TauDecay::linear) return s.start + (s.end - s.start) * frac;
  return s.start * std::pow(s.end / s.start, frac);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ContractError("train: epochs must be >= 0");
  if (batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  if (q_steps_per_batch < 1) throw ContractError("train: q_steps_per_batch must be >= 1");
  if (eval_every < 1) throw ContractError("train: eval_every must be >= 1");
  if (!(clip_norm >= 0.0)) throw ContractError("train: clip_norm must be >= 0");
  if (checkpoint_every < 0) throw ContractError("train: checkpoint_every must be >= 0");
  if (!(vae_optimizer.learning_rate > 0.0) || !(aux_optimizer.learning_rate > 0.0))
    throw ContractError("train: learning rates must be > 0");
  tau.validate();
  objective.validate();
}

void write_metrics_row(std::ostream& os, const MetricsRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(r.step), r.recon, r.kl_gauss, r.kl_cat, r.mi_term, r.total, r.tau);
  os << buf;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& history, int eval_every) {
  if (eval_every < 1) throw ContractError("write_metrics_csv: eval_every must be >= 1");
  os << kMetricsHeader << '\n';
  for (const MetricsRecord& r : history)
    if (r.step % static_cast<std::uint64_t>(eval_every) == 0) write_metrics_row(os, r);
}

Checkpoint TrainState::checkpoint() const { return Checkpoint{model, aux, step, noise.state()}; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainState init_train_state(Index data_dim, const LatentLayout& layout, const Architecture& arch,
                            const TrainConfig& cfg) {
  cfg.validate();
  layout.validate();
  return TrainState{VaeModel::create(data_dim, layout, arch, derive_seed(cfg.seed, 0)),
                    AuxModel::create(data_dim, layout, arch, derive_seed(cfg.seed, 1)),
                    Adam(cfg.vae_optimizer),
                    Adam(cfg.aux_optimizer),
                    NoiseSource(derive_seed(cfg.seed, 2)),
                    std::mt19937_64(derive_seed(cfg.seed, 3)),
                    0,
                    {}};
}

namespace {

void ascend(Graph& g, Var objective, std::vector<Tensor*> params, Adam& opt, double clip) {
  if (!std::isfinite(objective.scalar())) throw NumericError("non-finite objective");
  g.backward(neg(objective));
  if (clip > 0.0) clip_grad_norm(params, clip);
  opt.step(params);
}

}  // namespace

MetricsRecord train_step(TrainState& state, const Matrix& batch, const TrainConfig& cfg, double tau) {
  if (batch.rows() == 0) throw ContractError("train_step: empty batch");
  if (batch.cols() != state.model.data_dim) throw DimensionError("train_step: batch width does not match model");
  const LatentLayout& layout = state.model.layout;
  const LatentNoise noise = draw_latent_noise(state.noise, layout, batch.rows(), cfg.objective.mc_samples);
  const bool use_mi = cfg.objective.lambda > 0.0;

  // Phase A: Q only. The pipeline sample is fixed while the VAE is frozen.
  std::optional<MiPipelineSample> sample;
  if (cfg.train_aux || !use_mi) sample = sample_mi_pipeline(state.model, batch, noise, tau);
  if (cfg.train_aux) {
    for (int i = 0; i < cfg.q_steps_per_batch; ++i) {
      Graph g;
      Var obj = build_aux_objective(g, state.aux, *sample, layout, true);
      ascend(g, obj, state.aux.parameters(), state.aux_opt, cfg.clip_norm);
    }
  }

  // Phase B: VAE only, Q frozen.
  MetricsRecord rec;
  {
    Graph g;
    TapeOptions opts{true, false, false};
    ObjectiveTerms t = build_objective(g, state.model, use_mi ? &state.aux : nullptr, batch, noise, cfg.objective,
                                       tau, opts);
    rec.recon = t.recon.scalar();
    rec.kl_gauss = t.kl_gauss.scalar();
    rec.kl_cat = t.kl_cat.scalar();
    rec.total = t.total.scalar();
    if (t.has_mi) {
      rec.mi_term = t.mi.scalar();
    } else {
      Graph ge;
      rec.mi_term = build_aux_objective(ge, state.aux, *sample, layout, false).scalar();
    }
    ascend(g, t.total, state.model.parameters(), state.vae_opt, cfg.clip_norm);
  }
  ++state.step;
  rec.step = state.step;
  rec.tau = tau;
  return rec;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace

void train_epochs(TrainState& state, const Matrix& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.rows() == 0) throw ContractError("train: dataset is empty");
  if (data.cols() != state.model.data_dim) throw DimensionError("train: data width does not match model");
  const bool files = !hooks.out_dir.empty();
  if (files) std::filesystem::create_directories(hooks.out_dir);

  const Index n = data.rows();
  const Index bs = std::min<Index>(cfg.batch_size, n);
  const std::uint64_t per_epoch = static_cast<std::uint64_t>((n + bs - 1) / bs);
  const std::uint64_t first = state.step;
  const std::uint64_t total = per_epoch * static_cast<std::uint64_t>(cfg.epochs);

  std::vector<Index> order(static_cast<std::size_t>(n));
  Matrix batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::string last_good = files ? serialize_checkpoint(state.checkpoint()) : std::string{};
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), state.shuffle_rng);
    try {
      for (Index start = 0; start < n; start += bs) {
        const Index rows = std::min(bs, n - start);
        batch.resize(rows, data.cols());
        for (Index r = 0; r < rows; ++r) batch.row(r) = data.row(order[static_cast<std::size_t>(start + r)]);
        const double tau = tau_at(state.step - first, total, cfg.tau);
        state.history.push_back(train_step(state, batch, cfg, tau));
      }
    } catch (const NumericError&) {
      if (files) write_file(hooks.out_dir / "ckpt_last_good.bin", last_good);
      throw;
    }
    if (files && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_epoch_%04d.bin", epoch);
      save_checkpoint(hooks.out_dir / name, state.checkpoint());
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(state, epoch);
  }
  if (files) {
    std::ofstream csv(hooks.out_dir / "metrics.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write metrics.csv in '" + hooks.out_dir.string() + "'");
    write_metrics_csv(csv, state.history, cfg.eval_every);
    save_checkpoint(hooks.out_dir / "ckpt_final.bin", state.checkpoint());
  }
}

TrainState train(const Matrix& data, const LatentLayout& layout, const Architecture& arch, const TrainConfig& cfg,
                 const TrainHooks& hooks) {
  if (data.rows() == 0) throw ContractError("train: dataset is empty");
  TrainState state = init_train_state(data.cols(), layout, arch, cfg);
  train_epochs(state, data, cfg, hooks);
  return state;
}

}  // namespace mivae
