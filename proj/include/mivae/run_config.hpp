// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/data_io.hpp"
#include "mivae/mi_eval.hpp"
#include "mivae/models.hpp"
#include "mivae/training.hpp"

#include <string>
#include <vector>

namespace mivae {

struct DataConfig {
  std::string dir;  // empty = $MIVAE_DATA_DIR
  std::string images = "mnist10k-images-idx3-ubyte";
  std::string labels = "mnist10k-labels-idx1-ubyte";
  /// Leading rows used for training (0 = everything before the test block).
  long train_count = 8000;
  /// Trailing rows held out for evaluation.
  long test_count = 2000;
  Binarization binarization;
};

struct EvalConfig {
  MiEvalConfig mi;
  int histogram_bins = 20;
  std::string checkpoint;  // empty = <output>/ckpt_final.bin
};

struct TraverseConfig {
  std::vector<std::size_t> indices{0, 1};
  double low = -3.0;
  double high = 3.0;
  int steps = 7;
  long anchor = 0;
  /// Comma-separated anchor rows for the categorical traversal.
  std::vector<long> cat_anchors{0, 1, 2, 3, 4, 5, 6, 7};
};

/// Everything a CLI run needs; textual form is INI-like:
///
///   [train]
///   epochs = 30
///
/// Keys are addressed as "section.name". Unknown keys are rejected.
struct RunConfig {
  DataConfig data;
  LatentLayout layout{16, 10, MiTarget::categorical()};
  Architecture arch;
  TrainConfig train;
  EvalConfig eval;
  TraverseConfig traverse;
  std::string output_dir = "runs/default";

  /// Throws ContractError for an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Every accepted key, in canonical order.
  static const std::vector<std::string>& keys();
  /// One-line description of a key.
  static std::string describe(const std::string& key);

  void validate() const;
  /// Canonical text; parse_run_config(to_text()) reproduces the config.
  std::string to_text() const;
};

/// Applies the text on top of the defaults. Errors name the offending line.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
void apply_run_config(RunConfig& cfg, const std::string& text);

}  // namespace mivae
