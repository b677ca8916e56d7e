// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/figures.hpp"

#include "mivae/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mivae {

std::string encode_pgm(const Matrix& image) {
  if (image.size() == 0) throw ContractError("encode_pgm: empty image");
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(image.size()));
  for (Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image.data()[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& image) {
  const std::string bytes = encode_pgm(image);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

Matrix decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  long w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw FormatError("decode_pgm: bad P5 header");
  in.get();
  const auto off = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < off + static_cast<std::size_t>(w * h)) throw FormatError("decode_pgm: truncated pixel data");
  Matrix m(h, w);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(i)]) / 255.0;
  return m;
}

Matrix tile_grid(const std::vector<Eigen::RowVectorXd>& tiles, Index rows, Index cols, Index tile_h, Index tile_w) {
  if (static_cast<Index>(tiles.size()) != rows * cols) throw DimensionError("tile_grid: tile count mismatch");
  Matrix img = Matrix::Zero(rows * tile_h, cols * tile_w);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const Eigen::RowVectorXd& t = tiles[static_cast<std::size_t>(r * cols + c)];
      if (t.size() != tile_h * tile_w) throw DimensionError("tile_grid: tile has the wrong pixel count");
      for (Index y = 0; y < tile_h; ++y) img.block(r * tile_h + y, c * tile_w, 1, tile_w) = t.segment(y * tile_w, tile_w);
    }
  return img;
}

std::vector<double> sweep_values(const TraversalSpec& spec, double anchor_value) {
  if (spec.steps < 1) throw ContractError("traversal: steps must be >= 1");
  if (spec.steps == 1) return {anchor_value};
  std::vector<double> v(static_cast<std::size_t>(spec.steps));
  for (int i = 0; i < spec.steps; ++i) v[static_cast<std::size_t>(i)] = spec.low + (spec.high - spec.low) * i / (spec.steps - 1);
  return v;
}

namespace {

void check_tile(const VaeModel& m, Index tile_h, Index tile_w) {
  if (tile_h * tile_w != m.data_dim)
    throw DimensionError("traversal: tile " + std::to_string(tile_h) + "x" + std::to_string(tile_w) +
                         " does not match data dimension " + std::to_string(m.data_dim));
}

Matrix onehot_row(Index k, Index which) {
  Matrix c = Matrix::Zero(1, k);
  c(0, which) = 1.0;
  return c;
}

}  // namespace

Matrix traversal_grid(const VaeModel& m, const Matrix& anchor, const TraversalSpec& spec, Index tile_h, Index tile_w) {
  check_tile(m, tile_h, tile_w);
  if (anchor.rows() != 1) throw DimensionError("traversal: anchor must be a single row");
  if (spec.indices.empty() || spec.indices.size() > 2) throw ContractError("traversal: need one or two indices");
  for (std::size_t i : spec.indices)
    if (i >= m.layout.gaussian_dim)
      throw ContractError("traversal: index " + std::to_string(i) + " outside the Gaussian latent of size " +
                          std::to_string(m.layout.gaussian_dim));
  const Posterior post = encode(m, anchor);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  Matrix c;
  if (k > 0) {
    Index best = 0;
    post.probs().row(0).maxCoeff(&best);
    c = onehot_row(k, best);
  }
  const Index i0 = static_cast<Index>(spec.indices[0]);
  const std::vector<double> v0 = sweep_values(spec, post.mu(0, i0));
  std::vector<double> v1{0.0};
  Index i1 = -1;
  if (spec.indices.size() == 2) {
    i1 = static_cast<Index>(spec.indices[1]);
    v1 = sweep_values(spec, post.mu(0, i1));
  }
  std::vector<Eigen::RowVectorXd> tiles;
  for (double a : v0)
    for (double b : v1) {
      Matrix z = post.mu;
      z(0, i0) = a;
      if (i1 >= 0) z(0, i1) = b;
      tiles.push_back(decode(m, z, k > 0 ? &c : nullptr).row(0));
    }
  const Index rows = i1 >= 0 ? static_cast<Index>(v0.size()) : 1;
  const Index cols = i1 >= 0 ? static_cast<Index>(v1.size()) : static_cast<Index>(v0.size());
  return tile_grid(tiles, rows, cols, tile_h, tile_w);
}

Matrix cat_traversal_grid(const VaeModel& m, const Matrix& anchors, Index tile_h, Index tile_w) {
  check_tile(m, tile_h, tile_w);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  if (k == 0) throw ContractError("categorical traversal: model has no categorical latent");
  if (anchors.rows() == 0) throw ContractError("categorical traversal: no anchors");
  const Posterior post = encode(m, anchors);
  std::vector<Eigen::RowVectorXd> tiles;
  for (Index r = 0; r < anchors.rows(); ++r) {
    tiles.push_back(anchors.row(r));
    const Matrix z = post.mu.row(r);
    for (Index j = 0; j < k; ++j) {
      const Matrix c = onehot_row(k, j);
      tiles.push_back(decode(m, z, &c).row(0));
    }
  }
  return tile_grid(tiles, anchors.rows(), k + 1, tile_h, tile_w);
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
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

}  // namespace

std::string summary_text(const EvalSummary& s) {
  std::string out;
  out += "checkpoint: " + s.checkpoint + "\n";
  out += "mi_lower_bound: " + g17(s.mi.lower.value) + " +- " + g17(s.mi.lower.se) + "\n";
  out += "kl_upper_bound: " + g17(s.mi.upper.value) + " +- " + g17(s.mi.upper.se) + "\n";
  out += "kl_gauss: " + g17(s.kl_gauss) + "\n";
  if (s.kl_cat >= 0.0) out += "kl_cat: " + g17(s.kl_cat) + "\n";
  if (s.accuracy >= 0.0) out += "categorical_accuracy: " + g17(s.accuracy) + "\n";
  return out;
}

void write_eval_reports(const std::filesystem::path& dir, const EvalSummary& s) {
  const std::filesystem::path rep = dir / "reports";
  std::filesystem::create_directories(rep);

  write_text(rep / "mi_report.csv", "metric,value,se\nmi_lower_bound," + g17(s.mi.lower.value) + "," +
                                        g17(s.mi.lower.se) + "\nkl_upper_bound," + g17(s.mi.upper.value) + "," +
                                        g17(s.mi.upper.se) + "\n");
  std::string curve = "step,objective\n";
  for (std::size_t i = 0; i < s.mi.q_training_curve.size(); ++i)
    curve += std::to_string(i + 1) + "," + g17(s.mi.q_training_curve[i]) + "\n";
  write_text(rep / "q_curve.csv", curve);

  if (!s.histogram.empty()) {
    std::string h = "bin_low,bin_high,count\n";
    const double n = static_cast<double>(s.histogram.size());
    for (std::size_t b = 0; b < s.histogram.size(); ++b)
      h += g17(static_cast<double>(b) / n) + "," + g17(static_cast<double>(b + 1) / n) + "," +
           std::to_string(s.histogram[b]) + "\n";
    write_text(rep / "prob_histogram.csv", h);
  }
  if (s.label_counts.size() > 0) {
    std::string c = "category";
    for (Index l = 0; l < s.label_counts.cols(); ++l) c += ",label_" + std::to_string(l);
    c += "\n";
    for (Index k = 0; k < s.label_counts.rows(); ++k) {
      c += std::to_string(k);
      for (Index l = 0; l < s.label_counts.cols(); ++l) c += "," + std::to_string(s.label_counts(k, l));
      c += "\n";
    }
    write_text(rep / "onehot_counts.csv", c);
  }
  write_text(rep / "summary.txt", summary_text(s));
}

}  // namespace mivae
