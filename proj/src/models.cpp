// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/models.hpp"

#include "mivae/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mivae {

std::string to_string(const MiTarget& t) {
  if (t.kind == MiTarget::Kind::categorical) return "categorical";
  std::string s;
  for (std::size_t i = 0; i < t.indices.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(t.indices[i]);
  }
  return s;
}

MiTarget mi_target_from_string(const std::string& s) {
  if (s == "categorical") return MiTarget::categorical();
  std::vector<std::size_t> idx;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ContractError("mi target: expected 'categorical' or index list, got '" + s + "'");
    idx.push_back(std::stoul(tok));
  }
  if (idx.empty()) throw ContractError("mi target: empty index list");
  return MiTarget::gaussian_subvector(std::move(idx));
}

void LatentLayout::validate() const {
  if (gaussian_dim == 0 && categorical_k == 0) throw ContractError("latent layout: no latent part");
  if (categorical_k == 1) throw ContractError("latent layout: categorical part needs K >= 2");
  if (mi_target.kind == MiTarget::Kind::categorical) {
    if (categorical_k < 2) throw ContractError("latent layout: categorical MI target without categorical part");
  } else {
    if (mi_target.indices.empty()) throw ContractError("latent layout: empty Gaussian MI target");
    std::vector<std::size_t> sorted = mi_target.indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ContractError("latent layout: duplicate MI target index");
    if (sorted.back() >= gaussian_dim)
      throw ContractError("latent layout: MI target index " + std::to_string(sorted.back()) +
                          " outside Gaussian part of size " + std::to_string(gaussian_dim));
  }
}

Index LatentLayout::target_dim() const {
  return mi_target.kind == MiTarget::Kind::categorical ? static_cast<Index>(categorical_k)
                                                       : static_cast<Index>(mi_target.indices.size());
}

namespace {

std::vector<Index> widths(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

VaeModel VaeModel::create(Index data_dim, const LatentLayout& layout, const Architecture& arch, std::uint64_t seed) {
  layout.validate();
  if (data_dim <= 0) throw ContractError("VaeModel: data dimension must be positive");
  std::mt19937_64 rng(seed);
  VaeModel m;
  m.data_dim = data_dim;
  m.layout = layout;
  m.encoder = Mlp(widths(data_dim, arch.encoder_hidden, layout.encoder_out_dim()), arch.hidden_activation,
                  Activation::identity, rng);
  m.decoder = Mlp(widths(layout.decoder_in_dim(), arch.decoder_hidden, data_dim), arch.hidden_activation,
                  Activation::identity, rng);
  return m;
}

std::vector<Tensor*> VaeModel::parameters() {
  std::vector<Tensor*> p = encoder.parameters();
  std::vector<Tensor*> d = decoder.parameters();
  p.insert(p.end(), d.begin(), d.end());
  return p;
}

AuxModel AuxModel::create(Index data_dim, const LatentLayout& layout, const Architecture& arch, std::uint64_t seed) {
  layout.validate();
  std::mt19937_64 rng(seed);
  AuxModel q;
  q.target = layout.mi_target;
  q.target_dim = layout.target_dim();
  const Index out = q.target.kind == MiTarget::Kind::categorical ? q.target_dim : 2 * q.target_dim;
  q.net = Mlp(widths(data_dim, arch.aux_hidden, out), arch.hidden_activation, Activation::identity, rng);
  return q;
}

// ---- value-level ----------------------------------------------------------

DiagGaussianParams Posterior::gaussian(Index row) const {
  DiagGaussianParams p;
  p.mu.assign(mu.row(row).data(), mu.row(row).data() + mu.cols());
  p.log_var.assign(log_var.row(row).data(), log_var.row(row).data() + log_var.cols());
  return p;
}

CategoricalParams Posterior::categorical(Index row, double tau) const {
  CategoricalParams p;
  p.logits.assign(logits.row(row).data(), logits.row(row).data() + logits.cols());
  p.tau = tau;
  return p;
}

Matrix Posterior::probs() const {
  Matrix p(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    std::vector<double> s = softmax(std::span<const double>(logits.row(r).data(), static_cast<std::size_t>(logits.cols())));
    for (Index c = 0; c < logits.cols(); ++c) p(r, c) = s[static_cast<std::size_t>(c)];
  }
  return p;
}

Posterior encode(const VaeModel& m, const Matrix& x) {
  if (x.cols() != m.data_dim)
    throw DimensionError("encode: input width " + std::to_string(x.cols()) + ", model expects " +
                         std::to_string(m.data_dim));
  const Matrix h = m.encoder.forward(x);
  const Index g = static_cast<Index>(m.layout.gaussian_dim);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  return Posterior{h.leftCols(g), h.middleCols(g, g), h.rightCols(k)};
}

Matrix decode(const VaeModel& m, const Matrix& z, const Matrix* c) {
  const Index g = static_cast<Index>(m.layout.gaussian_dim);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  if (z.cols() != g) throw DimensionError("decode: z width " + std::to_string(z.cols()) + ", layout has " + std::to_string(g));
  if (k > 0 && !c) throw ContractError("decode: layout has a categorical part but no c was given");
  if (c && (c->cols() != k || c->rows() != z.rows()))
    throw DimensionError("decode: c shape does not match layout/batch");
  Matrix in(z.rows(), g + k);
  in.leftCols(g) = z;
  if (k > 0) in.rightCols(k) = *c;
  Matrix out = m.decoder.forward(in);
  apply_activation_inplace(out, Activation::sigmoid);
  return out;
}

AuxOutput q_infer(const AuxModel& q, const Matrix& x_like) {
  if (x_like.cols() != q.net.in_dim())
    throw DimensionError("q_infer: input width " + std::to_string(x_like.cols()) + ", Q expects " +
                         std::to_string(q.net.in_dim()));
  const Matrix h = q.net.forward(x_like);
  AuxOutput out;
  if (q.target.kind == MiTarget::Kind::categorical) {
    out.logits = h;
  } else {
    out.mu = h.leftCols(q.target_dim);
    out.log_var = h.rightCols(q.target_dim);
  }
  return out;
}

double joint_posterior_logprob(const Posterior& p, Index row, std::span<const double> z, std::size_t category) {
  const Index g = p.mu.cols();
  const Index k = p.logits.cols();
  if (static_cast<Index>(z.size()) != g) throw DimensionError("joint_posterior_logprob: z length mismatch");
  if (k > 0 && category >= static_cast<std::size_t>(k))
    throw ContractError("joint_posterior_logprob: category out of range");
  // Densities of all coordinates multiplied together before the log.
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double log_density = 0.0;
  for (Index i = 0; i < g; ++i) {
    const double lv = p.log_var(row, i);
    const double d = z[static_cast<std::size_t>(i)] - p.mu(row, i);
    log_density -= 0.5 * (log2pi + lv + d * d * std::exp(-lv));
  }
  if (k > 0) {
    const double mx = p.logits.row(row).maxCoeff();
    const double lse = mx + std::log((p.logits.row(row).array() - mx).exp().sum());
    log_density += p.logits(row, static_cast<Index>(category)) - lse;
  }
  return log_density;
}

// ---- tape-level -------------------------------------------------------------

PosteriorVars encode(VaeModel& m, Var x, bool trainable) {
  if (x.cols() != m.data_dim)
    throw DimensionError("encode: input width " + std::to_string(x.cols()) + ", model expects " +
                         std::to_string(m.data_dim));
  Var h = m.encoder.forward(x, trainable);
  const Index g = static_cast<Index>(m.layout.gaussian_dim);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  PosteriorVars out;
  out.has_gaussian = g > 0;
  out.has_categorical = k > 0;
  if (g > 0) {
    out.mu = slice_cols(h, 0, g);
    out.log_var = slice_cols(h, g, g);
  }
  if (k > 0) out.logits = slice_cols(h, 2 * g, k);
  return out;
}

Var decode_logits(VaeModel& m, std::optional<Var> z, std::optional<Var> c, bool trainable) {
  const Index g = static_cast<Index>(m.layout.gaussian_dim);
  const Index k = static_cast<Index>(m.layout.categorical_k);
  if ((g > 0) != z.has_value()) throw ContractError("decode: Gaussian code presence does not match layout");
  if ((k > 0) != c.has_value()) throw ContractError("decode: missing or unexpected categorical code");
  if (z && z->cols() != g) throw DimensionError("decode: z width mismatch");
  if (c && c->cols() != k) throw DimensionError("decode: c width mismatch");
  Var in = z && c ? concat_cols(*z, *c) : (z ? *z : *c);
  return m.decoder.forward(in, trainable);
}

AuxVars q_infer(AuxModel& q, Var x_like, bool trainable) {
  if (x_like.cols() != q.net.in_dim())
    throw DimensionError("q_infer: input width " + std::to_string(x_like.cols()) + ", Q expects " +
                         std::to_string(q.net.in_dim()));
  Var h = q.net.forward(x_like, trainable);
  AuxVars out;
  if (q.target.kind == MiTarget::Kind::categorical) {
    out.logits = h;
  } else {
    out.mu = slice_cols(h, 0, q.target_dim);
    out.log_var = slice_cols(h, q.target_dim, q.target_dim);
  }
  return out;
}

Var aux_log_likelihood(const AuxModel& q, const AuxVars& out, Var target) {
  if (target.cols() != q.target_dim) throw DimensionError("aux_log_likelihood: target width mismatch");
  if (q.target.kind == MiTarget::Kind::categorical) return categorical_logprob(out.logits, target);
  return gaussian_logpdf(target, out.mu, out.log_var);
}

// ---- checkpoints ----------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'M', 'I', 'V', 'A', 'E', 'C', 'K', '\0'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_.append(s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_)
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_) + " (need " + std::to_string(n) +
                        " more)");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

void put_target(Writer& w, const MiTarget& t) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.kind));
  w.put<std::uint64_t>(t.indices.size());
  for (std::size_t i : t.indices) w.put<std::uint64_t>(i);
}

MiTarget get_target(Reader& r) {
  MiTarget t;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw FormatError("checkpoint: bad MI target kind at byte " + std::to_string(r.pos() - 1));
  t.kind = static_cast<MiTarget::Kind>(kind);
  const auto n = r.get<std::uint64_t>();
  if (n > (1u << 20)) throw FormatError("checkpoint: implausible MI target size");
  for (std::uint64_t i = 0; i < n; ++i) t.indices.push_back(r.get<std::uint64_t>());
  return t;
}

void put_matrix(Writer& w, const Matrix& m) {
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
  w.put_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

Matrix get_matrix(Reader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  if (rows > (1u << 24) || cols > (1u << 24)) throw FormatError("checkpoint: implausible tensor shape");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  r.get_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return m;
}

void put_mlp(Writer& w, const Mlp& mlp) {
  w.put<std::uint64_t>(mlp.layers.size());
  for (const DenseLayer& l : mlp.layers) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
    put_matrix(w, l.weight.data);
    put_matrix(w, l.bias.data);
  }
}

Mlp get_mlp(Reader& r) {
  Mlp mlp;
  const auto n = r.get<std::uint64_t>();
  if (n == 0 || n > 64) throw FormatError("checkpoint: implausible layer count " + std::to_string(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    DenseLayer l;
    const auto act = r.get<std::uint8_t>();
    if (act > static_cast<std::uint8_t>(Activation::softplus)) throw FormatError("checkpoint: bad activation code");
    l.activation = static_cast<Activation>(act);
    l.weight = Tensor(get_matrix(r));
    l.bias = Tensor(get_matrix(r));
    if (l.bias.data.rows() != 1 || l.bias.data.cols() != l.weight.data.rows())
      throw FormatError("checkpoint: bias shape does not match weight");
    if (!mlp.layers.empty() && mlp.layers.back().out_dim() != l.in_dim())
      throw FormatError("checkpoint: consecutive layer widths disagree");
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ck.model.data_dim));
  w.put<std::uint64_t>(ck.model.layout.gaussian_dim);
  w.put<std::uint64_t>(ck.model.layout.categorical_k);
  put_target(w, ck.model.layout.mi_target);
  put_mlp(w, ck.model.encoder);
  put_mlp(w, ck.model.decoder);
  w.put<std::uint8_t>(ck.aux ? 1 : 0);
  if (ck.aux) {
    put_target(w, ck.aux->target);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(ck.aux->target_dim));
    put_mlp(w, ck.aux->net);
  }
  w.put<std::uint64_t>(ck.step);
  w.put_string(ck.rng_state);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("checkpoint: bad magic at byte 0");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " at byte 8");
  Checkpoint ck;
  ck.model.data_dim = static_cast<Index>(r.get<std::uint64_t>());
  ck.model.layout.gaussian_dim = r.get<std::uint64_t>();
  ck.model.layout.categorical_k = r.get<std::uint64_t>();
  ck.model.layout.mi_target = get_target(r);
  try {
    ck.model.layout.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  ck.model.encoder = get_mlp(r);
  ck.model.decoder = get_mlp(r);
  if (ck.model.encoder.in_dim() != ck.model.data_dim ||
      ck.model.encoder.out_dim() != ck.model.layout.encoder_out_dim() ||
      ck.model.decoder.in_dim() != ck.model.layout.decoder_in_dim() || ck.model.decoder.out_dim() != ck.model.data_dim)
    throw FormatError("checkpoint: network widths do not match latent layout");
  if (r.get<std::uint8_t>()) {
    AuxModel q;
    q.target = get_target(r);
    q.target_dim = static_cast<Index>(r.get<std::uint64_t>());
    q.net = get_mlp(r);
    if (q.net.in_dim() != ck.model.data_dim) throw FormatError("checkpoint: Q input width mismatch");
    ck.aux = std::move(q);
  }
  ck.step = r.get<std::uint64_t>();
  ck.rng_state = r.get_string();
  if (!r.done()) throw FormatError("checkpoint: trailing bytes at " + std::to_string(r.pos()));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace mivae
