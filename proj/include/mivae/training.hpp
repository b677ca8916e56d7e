// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/models.hpp"
#include "mivae/objectives.hpp"
#include "mivae/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace mivae {

enum class TauDecay : std::uint8_t { exponential, linear };

/// Gumbel-softmax temperature over the run. start == end gives a constant.
struct TauSchedule {
  double start = 0.67;
  double end = 0.67;
  TauDecay decay = TauDecay::exponential;

  void validate() const;
};

/// Temperature at `step` of a run with `total_steps` steps: start at step 0,
/// end at step total_steps - 1.
double tau_at(std::uint64_t step, std::uint64_t total_steps, const TauSchedule& s);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 128;
  std::uint64_t seed = 0;
  AdamConfig vae_optimizer;
  AdamConfig aux_optimizer;
  TauSchedule tau;
  ObjectiveConfig objective;
  int q_steps_per_batch = 1;
  /// Metrics CSV row every this many steps.
  int eval_every = 1;
  /// Global gradient-norm clip applied separately to VAE and Q updates.
  double clip_norm = 5.0;
  /// Train Q alongside the VAE. With lambda == 0 this never changes the VAE
  /// trajectory.
  bool train_aux = true;
  /// Write ckpt_epoch_NNNN.bin every this many epochs (0 = final only).
  int checkpoint_every = 0;

  void validate() const;
};

struct MetricsRecord {
  std::uint64_t step = 0;
  double recon = 0.0;
  double kl_gauss = 0.0;
  double kl_cat = 0.0;
  double mi_term = 0.0;
  double total = 0.0;
  double tau = 0.0;
};

inline constexpr const char* kMetricsHeader = "step,recon,kl_gauss,kl_cat,mi_term,total,tau";
void write_metrics_row(std::ostream& os, const MetricsRecord& r);
/// Header plus one row per `eval_every` steps.
void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& history, int eval_every);

struct TrainState {
  VaeModel model;
  AuxModel aux;
  Adam vae_opt;
  Adam aux_opt;
  NoiseSource noise;
  std::mt19937_64 shuffle_rng;
  std::uint64_t step = 0;
  std::vector<MetricsRecord> history;

  Checkpoint checkpoint() const;
};

/// Derives independent stream seeds (model init, Q init, latent noise,
/// shuffling) from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

TrainState init_train_state(Index data_dim, const LatentLayout& layout, const Architecture& arch,
                            const TrainConfig& cfg);

/// One iteration of the alternating scheme: `q_steps_per_batch` ascent steps
/// on Q with the VAE frozen, then one ascent step on the VAE with Q frozen.
/// Both phases share one latent draw. Throws NumericError on a non-finite
/// objective.
MetricsRecord train_step(TrainState& state, const Matrix& batch, const TrainConfig& cfg, double tau);

struct TrainHooks {
  /// Output directory for metrics.csv and checkpoints; empty = no files.
  std::filesystem::path out_dir;
  std::function<void(const TrainState&, int epoch)> on_epoch_end;
};

/// Shuffled minibatch epochs from a fresh state. Writes metrics.csv,
/// ckpt_epoch_*.bin and ckpt_final.bin under `hooks.out_dir`. On a numeric
/// failure the last epoch-start snapshot is written to ckpt_last_good.bin
/// before the error propagates.
TrainState train(const Matrix& data, const LatentLayout& layout, const Architecture& arch, const TrainConfig& cfg,
                 const TrainHooks& hooks = {});

/// Continues training an existing state for cfg.epochs more epochs.
void train_epochs(TrainState& state, const Matrix& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace mivae
