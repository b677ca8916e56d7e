// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/data_io.hpp"
#include "mivae/em_gmm.hpp"
#include "mivae/figures.hpp"
#include "mivae/run_config.hpp"
#include "mivae/training.hpp"

#include <filesystem>
#include <string>

namespace mivae {

struct RunData {
  Dataset train;
  Dataset test;
};

/// Loads, splits (leading train rows, trailing test rows) and binarizes.
RunData load_run_data(const DataConfig& cfg);

/// Writes config.resolved under the output directory.
void echo_config(const RunConfig& cfg);

struct TrainOutcome {
  MetricsRecord last;
  std::uint64_t steps = 0;
};

/// Trains from the config; writes config.resolved, metrics.csv, checkpoints.
TrainOutcome cmd_train(const RunConfig& cfg);
TrainOutcome cmd_train(const RunConfig& cfg, const Dataset& train);

/// Evaluates a checkpoint and writes reports/*.
EvalSummary cmd_eval(const RunConfig& cfg);
EvalSummary evaluate_checkpoint(const Checkpoint& ck, const RunData& data, const EvalConfig& cfg);

/// Writes figures/traverse.pgm and returns its path.
std::filesystem::path cmd_traverse(const RunConfig& cfg);
/// Writes figures/cat_traverse.pgm and returns its path.
std::filesystem::path cmd_cat_traverse(const RunConfig& cfg);

struct EmDemoOptions {
  Index components = 3;
  Index points_per_component = 200;
  Index dim = 2;
  double separation = 10.0;  // in units of the cluster standard deviation
  int iters = 50;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/em-demo";
};

/// Well-separated synthetic data drawn from `components` Gaussians; returns
/// the generating means as well.
struct SyntheticGmm {
  Matrix x;
  Matrix true_means;
};
SyntheticGmm make_synthetic_gmm(Index components, Index per_component, Index dim, double separation,
                                std::uint64_t seed);

/// Fits a GMM to synthetic data; writes em_params.csv and em_trace.csv.
EmFit cmd_em_demo(const EmDemoOptions& opt);

struct ToyMiOptions {
  ToyKind kind = ToyKind::noisy_channel;
  std::size_t k = 2;
  double epsilon = 0.1;
  ToyMiConfig mi;
  std::filesystem::path output_dir = "runs/toy-mi";
};

struct ToyMiOutcome {
  double exact = 0.0;
  MiReport report;
};

/// Lower bound, exact MI and KL upper bound on an enumerable toy; writes
/// reports/toy_mi.csv.
ToyMiOutcome cmd_toy_mi(const ToyMiOptions& opt);

}  // namespace mivae
