// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/mi_eval.hpp"
#include "mivae/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mivae {

/// N images of D pixels in [0, 1], optionally labelled.
struct Dataset {
  Matrix images;
  std::vector<int> labels;  // empty = unlabelled
  Index height = 0;
  Index width = 0;

  Index size() const { return images.rows(); }
  Index dim() const { return images.cols(); }
  bool has_labels() const { return !labels.empty(); }
  /// Throws DimensionError / ContractError on inconsistent contents.
  void validate() const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses an in-memory IDX image file: [N x rows*cols], pixels / 255.
Matrix idx_parse_images(const std::string& bytes, Index* rows = nullptr, Index* cols = nullptr);
std::vector<int> idx_parse_labels(const std::string& bytes);

/// Reads a file, transparently gunzipping it when compressed.
std::string read_maybe_gzip(const std::filesystem::path& path);

/// Loads IDX images (and labels when a path is given). Throws FormatError on
/// a bad magic number or truncated payload, IoError when unreadable.
Dataset idx_load(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt);
/// Writes uncompressed IDX files; pixels stored as round(255 * v).
void idx_save(const Dataset& ds, const std::filesystem::path& images_path,
              const std::optional<std::filesystem::path>& labels_path = std::nullopt);

/// First `count` rows starting at `begin`.
Dataset subset(const Dataset& ds, Index begin, Index count);

enum class BinarizeMode : std::uint8_t { none, threshold, stochastic };
std::string to_string(BinarizeMode m);
BinarizeMode binarize_mode_from_string(const std::string& s);

struct Binarization {
  BinarizeMode mode = BinarizeMode::threshold;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

/// threshold: v >= t -> 1 else 0; stochastic: Bernoulli(v) draws.
Dataset binarize(const Dataset& ds, const Binarization& b);

enum class ToyKind : std::uint8_t { independent, identity, noisy_channel };
std::string to_string(ToyKind k);
ToyKind toy_kind_from_string(const std::string& s);

/// Enumerable toy with K latent states and K observations and a uniform
/// latent marginal. independent: p(x) random from `seed`, x independent of z;
/// identity: x = z; noisy_channel: x = z with probability 1 - epsilon, else
/// one of the other K - 1 values uniformly.
ToyModel make_toy_joint(ToyKind kind, std::size_t k, double epsilon = 0.1, std::uint64_t seed = 0);

inline constexpr const char* kDataDirEnv = "MIVAE_DATA_DIR";
/// `override_dir` if non-empty, else $MIVAE_DATA_DIR, else the current directory.
std::filesystem::path data_dir(const std::string& override_dir = {});

}  // namespace mivae
