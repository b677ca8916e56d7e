// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/data_io.hpp"

#include "mivae/distributions.hpp"
#include "mivae/error.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

namespace mivae {

void Dataset::validate() const {
  if (has_labels() && static_cast<Index>(labels.size()) != images.rows())
    throw DimensionError("dataset: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(images.rows()) + " images");
  if (height * width != 0 && height * width != images.cols())
    throw DimensionError("dataset: image shape does not match pixel count");
  if (images.size() > 0 && (images.minCoeff() < 0.0 || images.maxCoeff() > 1.0))
    throw ContractError("dataset: pixels outside [0, 1]");
}

namespace {

std::uint32_t read_be32(const std::string& b, std::size_t off) {
  if (off + 4 > b.size())
    throw FormatError("IDX: truncated header at offset " + std::to_string(off) + " (file is " +
                      std::to_string(b.size()) + " bytes)");
  auto u = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + i])); };
  return (u(0) << 24) | (u(1) << 16) | (u(2) << 8) | u(3);
}

void check_magic(const std::string& b, std::uint32_t want) {
  const std::uint32_t got = read_be32(b, 0);
  if (got != want) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "IDX: bad magic 0x%08x at offset 0 (expected 0x%08x)", got, want);
    throw FormatError(msg);
  }
}

void check_payload(const std::string& b, std::size_t header, std::size_t payload) {
  if (b.size() < header + payload)
    throw FormatError("IDX: truncated payload, need " + std::to_string(header + payload) + " bytes, file has " +
                      std::to_string(b.size()));
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace

Matrix idx_parse_images(const std::string& bytes, Index* rows, Index* cols) {
  check_magic(bytes, kIdxImageMagic);
  const std::size_t n = read_be32(bytes, 4);
  const std::size_t h = read_be32(bytes, 8);
  const std::size_t w = read_be32(bytes, 12);
  check_payload(bytes, 16, n * h * w);
  Matrix m(static_cast<Index>(n), static_cast<Index>(h * w));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + 16;
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = p[i] / 255.0;
  if (rows) *rows = static_cast<Index>(h);
  if (cols) *cols = static_cast<Index>(w);
  return m;
}

std::vector<int> idx_parse_labels(const std::string& bytes) {
  check_magic(bytes, kIdxLabelMagic);
  const std::size_t n = read_be32(bytes, 4);
  check_payload(bytes, 8, n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<unsigned char>(bytes[8 + i]);
  return labels;
}

std::string read_maybe_gzip(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::string out;
  char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
  int errnum = 0;
  const char* msg = gzerror(f, &errnum);
  const std::string err = errnum != Z_OK && errnum != Z_BUF_ERROR ? msg : "";
  gzclose(f);
  if (got < 0 || !err.empty()) throw FormatError("'" + path.string() + "': gzip error: " + err);
  return out;
}

Dataset idx_load(const std::filesystem::path& images_path, const std::optional<std::filesystem::path>& labels_path) {
  Dataset ds;
  try {
    ds.images = idx_parse_images(read_maybe_gzip(images_path), &ds.height, &ds.width);
  } catch (const FormatError& e) {
    throw FormatError(images_path.string() + ": " + e.what());
  }
  if (labels_path) {
    try {
      ds.labels = idx_parse_labels(read_maybe_gzip(*labels_path));
    } catch (const FormatError& e) {
      throw FormatError(labels_path->string() + ": " + e.what());
    }
  }
  ds.validate();
  return ds;
}

void idx_save(const Dataset& ds, const std::filesystem::path& images_path,
              const std::optional<std::filesystem::path>& labels_path) {
  ds.validate();
  Index h = ds.height, w = ds.width;
  if (h * w == 0) h = 1, w = ds.dim();
  std::string img;
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(ds.size()));
  put_be32(img, static_cast<std::uint32_t>(h));
  put_be32(img, static_cast<std::uint32_t>(w));
  for (Index i = 0; i < ds.images.size(); ++i)
    img.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * ds.images.data()[i]))));
  write_bytes(images_path, img);
  if (labels_path) {
    if (!ds.has_labels()) throw ContractError("idx_save: dataset has no labels");
    std::string lab;
    put_be32(lab, kIdxLabelMagic);
    put_be32(lab, static_cast<std::uint32_t>(ds.labels.size()));
    for (int l : ds.labels) {
      if (l < 0 || l > 255) throw ContractError("idx_save: label " + std::to_string(l) + " does not fit a byte");
      lab.push_back(static_cast<char>(l));
    }
    write_bytes(*labels_path, lab);
  }
}

Dataset subset(const Dataset& ds, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > ds.size())
    throw DimensionError("subset: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside dataset of " + std::to_string(ds.size()));
  Dataset out;
  out.images = ds.images.middleRows(begin, count);
  if (ds.has_labels()) out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
  out.height = ds.height;
  out.width = ds.width;
  return out;
}

std::string to_string(BinarizeMode m) {
  switch (m) {
    case BinarizeMode::none: return "none";
    case BinarizeMode::threshold: return "threshold";
    case BinarizeMode::stochastic: return "stochastic";
  }
  return "none";
}

BinarizeMode binarize_mode_from_string(const std::string& s) {
  if (s == "none") return BinarizeMode::none;
  if (s == "threshold") return BinarizeMode::threshold;
  if (s == "stochastic") return BinarizeMode::stochastic;
  throw ContractError("unknown binarization mode '" + s + "'");
}

Dataset binarize(const Dataset& ds, const Binarization& b) {
  Dataset out = ds;
  switch (b.mode) {
    case BinarizeMode::none: break;
    case BinarizeMode::threshold:
      out.images = (ds.images.array() >= b.threshold).cast<double>();
      break;
    case BinarizeMode::stochastic: {
      NoiseSource noise(b.seed);
      for (Index i = 0; i < out.images.size(); ++i)
        out.images.data()[i] = noise.uniform() < ds.images.data()[i] ? 1.0 : 0.0;
      break;
    }
  }
  return out;
}

std::string to_string(ToyKind k) {
  switch (k) {
    case ToyKind::independent: return "independent";
    case ToyKind::identity: return "identity";
    case ToyKind::noisy_channel: return "noisy-channel";
  }
  return "independent";
}

ToyKind toy_kind_from_string(const std::string& s) {
  if (s == "independent") return ToyKind::independent;
  if (s == "identity") return ToyKind::identity;
  if (s == "noisy-channel" || s == "noisy_channel") return ToyKind::noisy_channel;
  throw ContractError("unknown toy kind '" + s + "'");
}

ToyModel make_toy_joint(ToyKind kind, std::size_t k, double epsilon, std::uint64_t seed) {
  if (k < 2) throw ContractError("make_toy_joint: need at least 2 states");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("make_toy_joint: epsilon must lie in [0, 1]");
  const Index n = static_cast<Index>(k);
  const double pz = 1.0 / static_cast<double>(k);
  DiscreteJoint j{Matrix::Zero(n, n)};
  switch (kind) {
    case ToyKind::independent: {
      NoiseSource noise(seed);
      std::vector<double> px(k);
      for (double& p : px) p = 0.1 + noise.uniform();
      const double s = std::accumulate(px.begin(), px.end(), 0.0);
      for (Index x = 0; x < n; ++x)
        for (Index z = 0; z < n; ++z) j.table(x, z) = px[static_cast<std::size_t>(x)] / s * pz;
      break;
    }
    case ToyKind::identity:
      for (Index z = 0; z < n; ++z) j.table(z, z) = pz;
      break;
    case ToyKind::noisy_channel:
      for (Index x = 0; x < n; ++x)
        for (Index z = 0; z < n; ++z)
          j.table(x, z) = pz * (x == z ? 1.0 - epsilon : epsilon / static_cast<double>(k - 1));
      break;
  }
  // Renormalize away the last-ulp drift so validate() holds at 1e-12.
  j.table /= j.table.sum();
  return toy_from_joint(j);
}

std::filesystem::path data_dir(const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return std::filesystem::current_path();
}

}  // namespace mivae
