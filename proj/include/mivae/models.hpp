// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/distributions.hpp"
#include "mivae/layers.hpp"
#include "mivae/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mivae {

/// Which part of the latent code the mutual-information term targets.
struct MiTarget {
  enum class Kind : std::uint8_t { gaussian_subvector = 0, categorical = 1 };

  Kind kind = Kind::categorical;
  std::vector<std::size_t> indices;  // gaussian_subvector only

  static MiTarget categorical() { return {Kind::categorical, {}}; }
  static MiTarget gaussian_subvector(std::vector<std::size_t> idx) { return {Kind::gaussian_subvector, std::move(idx)}; }

  bool operator==(const MiTarget&) const = default;
};

std::string to_string(const MiTarget& t);
/// Parses "categorical" or a comma-separated index list such as "0,1".
MiTarget mi_target_from_string(const std::string& s);

struct LatentLayout {
  std::size_t gaussian_dim = 0;
  std::size_t categorical_k = 0;  // 0 = no categorical part
  MiTarget mi_target;

  /// Throws ContractError on an inconsistent layout.
  void validate() const;
  bool has_categorical() const { return categorical_k > 0; }
  Index encoder_out_dim() const { return static_cast<Index>(2 * gaussian_dim + categorical_k); }
  Index decoder_in_dim() const { return static_cast<Index>(gaussian_dim + categorical_k); }
  /// Width of the MI target: |indices| or K.
  Index target_dim() const;

  bool operator==(const LatentLayout&) const = default;
};

/// Hidden widths of the three networks.
struct Architecture {
  std::vector<Index> encoder_hidden{512, 256};
  std::vector<Index> decoder_hidden{256, 512};
  std::vector<Index> aux_hidden{256};
  Activation hidden_activation = Activation::tanh;
};

/// Encoder q(z, c | x) and Bernoulli decoder p(x | z, c).
///
/// Encoder output columns are [mu (G) | log_var (G) | logits (K)]; the decoder
/// consumes [z (G) | c (K)] and emits per-pixel logits.
struct VaeModel {
  Index data_dim = 0;
  LatentLayout layout;
  Mlp encoder;
  Mlp decoder;

  static VaeModel create(Index data_dim, const LatentLayout& layout, const Architecture& arch, std::uint64_t seed);

  std::vector<Tensor*> parameters();
  std::vector<Tensor*> encoder_parameters() { return encoder.parameters(); }
  std::vector<Tensor*> decoder_parameters() { return decoder.parameters(); }
};

/// Auxiliary network Q(target | x') that reads decoder means.
struct AuxModel {
  MiTarget target;
  Index target_dim = 0;
  Mlp net;

  static AuxModel create(Index data_dim, const LatentLayout& layout, const Architecture& arch, std::uint64_t seed);

  std::vector<Tensor*> parameters() { return net.parameters(); }
};

// ---- value-level --------------------------------------------------------

/// Per-sample posterior parameters for a batch. Columns of `logits` are empty
/// when the layout has no categorical part.
struct Posterior {
  Matrix mu;
  Matrix log_var;
  Matrix logits;

  Index batch() const { return mu.rows() > 0 ? mu.rows() : logits.rows(); }
  DiagGaussianParams gaussian(Index row) const;
  CategoricalParams categorical(Index row, double tau) const;
  /// Posterior class probabilities, one row per sample.
  Matrix probs() const;
};

Posterior encode(const VaeModel& m, const Matrix& x);
/// Bernoulli means in (0, 1). `c` is required iff the layout has a categorical part.
Matrix decode(const VaeModel& m, const Matrix& z, const Matrix* c = nullptr);

/// Q's output for a batch of decoder-shaped inputs.
struct AuxOutput {
  Matrix mu;
  Matrix log_var;
  Matrix logits;
};
AuxOutput q_infer(const AuxModel& q, const Matrix& x_like);

/// log q(z, c | x) for one sample, evaluated as a single density over the
/// concatenated latent. `category` is ignored without a categorical part.
double joint_posterior_logprob(const Posterior& p, Index row, std::span<const double> z, std::size_t category);

// ---- tape-level ---------------------------------------------------------

struct PosteriorVars {
  Var mu;
  Var log_var;
  Var logits;
  bool has_gaussian = false;
  bool has_categorical = false;
};

PosteriorVars encode(VaeModel& m, Var x, bool trainable = true);
/// Decoder logits for latent z and relaxed category c (either may be absent
/// when the layout lacks that part).
Var decode_logits(VaeModel& m, std::optional<Var> z, std::optional<Var> c, bool trainable = true);

struct AuxVars {
  Var mu;
  Var log_var;
  Var logits;
};
AuxVars q_infer(AuxModel& q, Var x_like, bool trainable = true);
/// Per-row log Q(target | x'), [B x 1]. `target` is the sampled Gaussian
/// subvector or the relaxed categorical sample.
Var aux_log_likelihood(const AuxModel& q, const AuxVars& out, Var target);

// ---- checkpoints ----------------------------------------------------------

/// Serialized training snapshot: VAE, optional Q, step counter, noise state.
struct Checkpoint {
  VaeModel model;
  std::optional<AuxModel> aux;
  std::uint64_t step = 0;
  std::string rng_state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mivae
