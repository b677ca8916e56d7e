// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mivae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace mivae::test {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;

// |a - n| relative to the larger magnitude. Gradients below the floor are
// compared absolutely; central differences cannot resolve them relatively.
inline double rel_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Builds a scalar loss from graph variables made out of `inputs`.
using InputBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

// Max relative error between tape gradients and central differences over
// every entry of every input.
inline double fd_max_error_inputs(const std::vector<Matrix>& inputs, const InputBuilder& build,
                                  double h = kFdStep) {
  Graph g;
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(g.variable(m));
  const Var loss = build(g, vars);
  g.backward(loss);
  std::vector<Matrix> grads;
  for (Var v : vars) grads.push_back(g.grad(v));

  auto eval = [&](const std::vector<Matrix>& in) {
    Graph g2;
    std::vector<Var> vs;
    for (const Matrix& m : in) vs.push_back(g2.variable(m));
    return build(g2, vs).scalar();
  };
  double worst = 0.0;
  std::vector<Matrix> work = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t)
    for (Index i = 0; i < inputs[t].size(); ++i) {
      const double orig = work[t].data()[i];
      work[t].data()[i] = orig + h;
      const double fp = eval(work);
      work[t].data()[i] = orig - h;
      const double fm = eval(work);
      work[t].data()[i] = orig;
      worst = std::max(worst, rel_error(grads[t].data()[i], (fp - fm) / (2.0 * h)));
    }
  return worst;
}

// Scalar loss over bound parameters; the builder calls g.parameter itself.
using ParamBuilder = std::function<Var(Graph&)>;

// Same comparison for parameter tensors, probing up to `per_tensor` random
// coordinates of each.
inline double fd_max_error_params(const std::vector<Tensor*>& params, const ParamBuilder& build, std::mt19937_64& rng,
                                  int per_tensor = 12, double h = kFdStep) {
  for (Tensor* t : params) t->zero_grad();
  {
    Graph g;
    g.backward(build(g));
  }
  auto eval = [&] {
    Graph g;
    return build(g).scalar();
  };
  double worst = 0.0;
  for (Tensor* t : params) {
    const Matrix grad = t->grad;
    std::uniform_int_distribution<Index> pick(0, t->data.size() - 1);
    const int probes = static_cast<int>(std::min<Index>(per_tensor, t->data.size()));
    for (int p = 0; p < probes; ++p) {
      const Index i = probes == t->data.size() ? p : pick(rng);
      const double orig = t->data.data()[i];
      t->data.data()[i] = orig + h;
      const double fp = eval();
      t->data.data()[i] = orig - h;
      const double fm = eval();
      t->data.data()[i] = orig;
      worst = std::max(worst, rel_error(grad.data()[i], (fp - fm) / (2.0 * h)));
    }
  }
  for (Tensor* t : params) t->zero_grad();
  return worst;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mivae_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Binary 16x16 images: a filled rectangle at a random position and size.
inline Matrix toy_images(Index n, std::uint64_t seed, Index side = 16) {
  std::mt19937_64 rng(seed);
  Matrix x = Matrix::Zero(n, side * side);
  std::uniform_int_distribution<Index> pos(0, side - 4), len(3, side / 2);
  for (Index r = 0; r < n; ++r) {
    const Index y0 = pos(rng), x0 = pos(rng), h = len(rng), w = len(rng);
    for (Index y = y0; y < std::min(side, y0 + h); ++y)
      for (Index c = x0; c < std::min(side, x0 + w); ++c) x(r, y * side + c) = 1.0;
  }
  return x;
}

}  // namespace mivae::test
