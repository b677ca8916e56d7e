// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/mi_eval.hpp"
#include "mivae/models.hpp"
#include "mivae/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mivae {

/// Binary PGM (P5, maxval 255) with pixel = round(255 * v), v clamped to [0, 1].
std::string encode_pgm(const Matrix& image);
void write_pgm(const std::filesystem::path& path, const Matrix& image);
/// Parses a P5 file back to values in [0, 1] (k / 255).
Matrix decode_pgm(const std::string& bytes);

/// Places `tiles[r * cols + c]` (each tile_h * tile_w pixels, row-major) on a
/// rows x cols grid.
Matrix tile_grid(const std::vector<Eigen::RowVectorXd>& tiles, Index rows, Index cols, Index tile_h, Index tile_w);

struct TraversalSpec {
  std::vector<std::size_t> indices;  // one or two Gaussian indices
  double low = -3.0;
  double high = 3.0;
  int steps = 7;
};

/// Sweep values: the anchor's own value when steps == 1, else an even grid
/// from low to high.
std::vector<double> sweep_values(const TraversalSpec& spec, double anchor_value);

/// Encodes `anchor` (one row), fixes the rest of the code at the posterior
/// mean (and the most probable category), sweeps the named components and
/// decodes. One index gives a 1 x steps grid; two give steps x steps with rows
/// ascending in the first index and columns in the second.
Matrix traversal_grid(const VaeModel& m, const Matrix& anchor, const TraversalSpec& spec, Index tile_h, Index tile_w);

/// Row per anchor: the original image, then the decode for each one-hot
/// category with the Gaussian code at its posterior mean.
Matrix cat_traversal_grid(const VaeModel& m, const Matrix& anchors, Index tile_h, Index tile_w);

/// Report files under `<dir>/reports/`.
struct EvalSummary {
  MiReport mi;
  std::vector<long> histogram;
  CountMatrix label_counts;  // empty without labels or categorical latent
  double accuracy = -1.0;    // < 0 when not computed
  double kl_cat = -1.0;      // mean categorical KL, < 0 without a categorical latent
  double kl_gauss = 0.0;
  std::string checkpoint;
};

void write_eval_reports(const std::filesystem::path& dir, const EvalSummary& s);
std::string summary_text(const EvalSummary& s);

}  // namespace mivae
