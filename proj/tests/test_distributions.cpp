// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "mivae/distributions.hpp"
#include "mivae/error.hpp"

#include <numeric>

using namespace mivae;
using namespace mivae::test;

namespace {

std::vector<double> row(const Matrix& m, Index r) { return {m.row(r).data(), m.row(r).data() + m.cols()}; }

// KL(N(mu, s^2) || N(0, 1)) by trapezoid integration of q log(q / p).
double kl_quadrature(double mu, double sigma) {
  const double lo = mu - 14.0 * sigma, hi = mu + 14.0 * sigma;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + h * i;
    const double lq = -0.5 * std::log(2 * M_PI) - std::log(sigma) - 0.5 * ((z - mu) / sigma) * ((z - mu) / sigma);
    const double lp = -0.5 * std::log(2 * M_PI) - 0.5 * z * z;
    const double f = std::exp(lq) * (lq - lp);
    acc += (i == 0 || i == n) ? 0.5 * f : f;
  }
  return acc * h;
}

}  // namespace

TEST_SUITE("distributions") {

TEST_CASE("reparam_sample scalar cases") {
  DiagGaussianParams p{{1.0, -3.0}, {std::log(4.0), 0.7}};
  const std::vector<double> z0 = reparam_sample(p, std::vector<double>{0.0, 0.0});
  CHECK(z0[0] == 1.0);
  CHECK(z0[1] == -3.0);
  DiagGaussianParams s{{1.0}, {std::log(4.0)}};
  CHECK(reparam_sample(s, std::vector<double>{0.5})[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(reparam_sample(s, std::vector<double>{0.5, 1.0}), DimensionError);
}

TEST_CASE("reparam_sample moments over 1e5 draws") {
  DiagGaussianParams p{{0.3}, {std::log(2.25)}};
  NoiseSource ns(5);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = reparam_sample(p, std::vector<double>{ns.normal()})[0];
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 0.3) < 3 * 1.5 / std::sqrt(n));
  CHECK(std::abs(var - 2.25) < 3 * 2.25 * std::sqrt(2.0 / n));
}

TEST_CASE("gaussian KL closed form") {
  CHECK(gaussian_kl_to_std({{0.0}, {0.0}}) == 0.0);
  CHECK(gaussian_kl_to_std({{1.0}, {0.0}}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(kl_quadrature(1.0, 1.0) - 0.5) < 1e-6);
  const double a = gaussian_kl_to_std({{0.4}, {-0.3}}), b = gaussian_kl_to_std({{-1.2}, {0.9}});
  CHECK(gaussian_kl_to_std({{0.4, -1.2}, {-0.3, 0.9}}) == doctest::Approx(a + b).epsilon(1e-14));
  CHECK(std::abs(kl_quadrature(0.4, std::exp(-0.15)) - a) < 1e-6);
}

TEST_CASE("gaussian logpdf and entropy constants") {
  CHECK(gaussian_logpdf(std::vector<double>{0.0}, {{0.0}, {0.0}}) == doctest::Approx(-0.91893853320467274));
  CHECK(std_gaussian_entropy(2) == doctest::Approx(std::log(2 * M_PI * M_E)));
}

TEST_CASE("gumbel_softmax_sample examples") {
  CategoricalParams eq{{0.3, 0.3, 0.3}, 0.4};
  for (double v : gumbel_softmax_sample(eq, std::vector<double>{0.2, 0.2, 0.2})) CHECK(v == doctest::Approx(1.0 / 3));
  CategoricalParams two{{0.0, 0.0}, 1.0};
  const auto y = gumbel_softmax_sample(two, std::vector<double>{1.0, 0.0});
  CHECK(std::abs(y[0] - 0.7310585786300049) < 1e-12);
  CHECK(std::abs(y[1] - 0.2689414213699951) < 1e-12);
  CategoricalParams cold{{0.1, 0.5, -0.2}, 1e-3};
  const auto h = gumbel_softmax_sample(cold, std::vector<double>{0.3, -0.5, 0.9});
  CHECK(std::abs(h[2] - 1.0) < 1e-6);
  CategoricalParams bad{{0.0, 0.0}, 0.0};
  CHECK_THROWS_AS(gumbel_softmax_sample(bad, std::vector<double>{0.0, 0.0}), ContractError);
}

TEST_CASE("categorical KL and entropy examples") {
  CHECK(categorical_kl_to_uniform(std::vector<double>(4, 0.25)) == doctest::Approx(0.0));
  std::vector<double> onehot(10, 0.0);
  onehot[3] = 1.0;
  CHECK(categorical_kl_to_uniform(onehot) == doctest::Approx(2.302585092994046));
  CHECK(categorical_kl_to_uniform(std::vector<double>{0.5, 0.5, 0.0, 0.0}) == doctest::Approx(0.6931471805599453));
  CHECK_THROWS_AS(categorical_kl_to_uniform(std::vector<double>{1.2, -0.2}), ContractError);
  CHECK(entropy(onehot) == 0.0);
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.6931471805599453));
  CHECK(entropy(std::vector<double>(10, 0.1)) == doctest::Approx(2.3026).epsilon(1e-4));
  CHECK_THROWS_AS(entropy(std::vector<double>{-0.1, 1.1}), ContractError);
}

TEST_CASE("bernoulli_loglik examples and naive oracle") {
  const std::vector<double> half(7, 0.5);
  CHECK(bernoulli_loglik(half, half) == doctest::Approx(-7 * std::log(2.0)));
  CHECK(bernoulli_loglik(std::vector<double>{1.0}, std::vector<double>{0.9}) ==
        doctest::Approx(-0.10536051565782628));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> x(50), p(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = rng() % 3 == 0 ? u(rng) : static_cast<double>(rng() % 2);
    p[i] = u(rng);
  }
  double naive = 0;
  for (int i = 0; i < 50; ++i) naive += x[i] * std::log(p[i]) + (1 - x[i]) * std::log(1 - p[i]);
  CHECK(std::abs(bernoulli_loglik(x, p) - naive) < 1e-12);
  CHECK_THROWS_AS(bernoulli_loglik(std::vector<double>{1.5}, std::vector<double>{0.5}), ContractError);
  CHECK(std::isfinite(bernoulli_loglik(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0})));
}

TEST_CASE("categorical_logprob examples") {
  const std::vector<double> probs{0.1, 0.6, 0.3};
  CHECK(categorical_logprob(probs, std::vector<double>{0, 1, 0}) == doctest::Approx(std::log(0.6)));
  CHECK(categorical_logprob(std::vector<double>(5, 0.2), std::vector<double>(5, 0.2)) ==
        doctest::Approx(-std::log(5.0)));
  const std::vector<double> y{0.2, 0.5, 0.3};
  const double direct = 0.2 * std::log(0.1) + 0.5 * std::log(0.6) + 0.3 * std::log(0.3);
  CHECK(std::abs(categorical_logprob(probs, y) - direct) < 1e-12);
}

TEST_CASE("property: gumbel-max argmax frequencies match softmax") {
  CategoricalParams p{{0.5, -0.3, 1.1, 0.0}, 0.1};
  const std::vector<double> pi = softmax(p.logits);
  NoiseSource ns(17);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> g(4);
    for (double& v : g) v = ns.gumbel();
    const auto y = gumbel_softmax_sample(p, g);
    ++counts[static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin())];
  }
  for (int k = 0; k < 4; ++k) {
    const double f = static_cast<double>(counts[k]) / n;
    CHECK(std::abs(f - pi[k]) < 3 * std::sqrt(pi[k] * (1 - pi[k]) / n));
  }
}

TEST_CASE("property: KLs are nonnegative and vanish only at the reference") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd(0.0, 1.5);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t d = 1 + rng() % 4;
    DiagGaussianParams g;
    std::vector<double> logits(2 + rng() % 5);
    for (std::size_t i = 0; i < d; ++i) {
      g.mu.push_back(nd(rng));
      g.log_var.push_back(nd(rng));
    }
    for (double& l : logits) l = nd(rng);
    CHECK(gaussian_kl_to_std(g) > 1e-9);
    const double kc = categorical_kl_to_uniform(softmax(logits));
    CHECK(kc >= 0.0);
    CHECK(kc <= std::log(static_cast<double>(logits.size())) + 1e-12);
  }
  CHECK(std::abs(gaussian_kl_to_std({{0, 0, 0}, {0, 0, 0}})) < 1e-9);
  CHECK(std::abs(categorical_kl_to_uniform(softmax(std::vector<double>(6, 2.5)))) < 1e-9);
}

TEST_CASE("property: noise streams are seed-deterministic and resumable") {
  NoiseSource a(42), b(42), c(43);
  const Matrix na = a.normal(4, 5), nb = b.normal(4, 5), nc = c.normal(4, 5);
  CHECK((na.array() == nb.array()).all());
  CHECK(!(na.array() == nc.array()).all());
  const std::string st = a.state();
  const Matrix g1 = a.gumbel(3, 3);
  NoiseSource d(0);
  d.set_state(st);
  CHECK((d.gumbel(3, 3).array() == g1.array()).all());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  CHECK_THROWS_AS(d.set_state("not a state"), FormatError);
}

TEST_CASE("tape ops agree with the value-level functions") {
  std::mt19937_64 rng(23);
  const Matrix mu = random_matrix(3, 2, rng), lv = random_matrix(3, 2, rng), eps = random_matrix(3, 2, rng);
  const Matrix logits = random_matrix(3, 4, rng), gum = random_matrix(3, 4, rng);
  Graph g;
  const Matrix z = reparam_sample(g.constant(mu), g.constant(lv), g.constant(eps)).value();
  const Matrix kl = gaussian_kl_to_std(g.constant(mu), g.constant(lv)).value();
  const Matrix y = gumbel_softmax_sample(g.constant(logits), g.constant(gum), 0.5).value();
  const Matrix kc = categorical_kl_to_uniform(g.constant(logits)).value();
  for (Index r = 0; r < 3; ++r) {
    DiagGaussianParams p{row(mu, r), row(lv, r)};
    const auto zr = reparam_sample(p, row(eps, r));
    for (Index j = 0; j < 2; ++j) CHECK(std::abs(z(r, j) - zr[j]) < 1e-12);
    CHECK(std::abs(kl(r, 0) - gaussian_kl_to_std(p)) < 1e-12);
    const auto yr = gumbel_softmax_sample(CategoricalParams{row(logits, r), 0.5}, row(gum, r));
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(y(r, j) - yr[j]) < 1e-12);
    CHECK(std::abs(kc(r, 0) - categorical_kl_to_uniform(softmax(row(logits, r)))) < 1e-12);
  }
}

TEST_CASE("finite differences: tape distribution ops") {
  std::mt19937_64 rng(29);
  int trials = 0;
  for (int t = 0; t < 6; ++t) {
    const Index b = 1 + static_cast<Index>(rng() % 3), d = 1 + static_cast<Index>(rng() % 3),
                k = 2 + static_cast<Index>(rng() % 3);
    const Matrix eps = random_matrix(b, d, rng), gum = random_matrix(b, k, rng);
    const Matrix w = random_matrix(b, d, rng), wk = random_matrix(b, k, rng);
    std::vector<std::pair<const char*, std::pair<std::vector<Matrix>, InputBuilder>>> cases;
    cases.push_back({"reparam", {{random_matrix(b, d, rng), random_matrix(b, d, rng)},
                                 [&](Graph& g, const std::vector<Var>& v) {
                                   return sum(reparam_sample(v[0], v[1], g.constant(eps)) * g.constant(w));
                                 }}});
    cases.push_back({"gaussian_kl", {{random_matrix(b, d, rng), random_matrix(b, d, rng)},
                                     [](Graph&, const std::vector<Var>& v) { return sum(gaussian_kl_to_std(v[0], v[1])); }}});
    cases.push_back({"gaussian_logpdf", {{random_matrix(b, d, rng), random_matrix(b, d, rng), random_matrix(b, d, rng)},
                                         [](Graph&, const std::vector<Var>& v) {
                                           return sum(gaussian_logpdf(v[0], v[1], v[2]));
                                         }}});
    cases.push_back({"gumbel_softmax", {{random_matrix(b, k, rng)},
                                        [&](Graph& g, const std::vector<Var>& v) {
                                          return sum(gumbel_softmax_sample(v[0], g.constant(gum), 0.67) * g.constant(wk));
                                        }}});
    cases.push_back({"categorical_kl", {{random_matrix(b, k, rng, -2, 2)},
                                        [](Graph&, const std::vector<Var>& v) {
                                          return sum(categorical_kl_to_uniform(v[0]));
                                        }}});
    cases.push_back({"categorical_logprob", {{random_matrix(b, k, rng), random_matrix(b, k, rng, 0, 1)},
                                             [](Graph&, const std::vector<Var>& v) {
                                               return sum(categorical_logprob(v[0], v[1]));
                                             }}});
    cases.push_back({"bernoulli", {{random_matrix(b, d, rng, 0.05, 0.95)},
                                   [&](Graph& g, const std::vector<Var>& v) {
                                     return sum(bernoulli_loglik(g.constant(random_matrix(b, d, rng, 0, 1)), v[0]));
                                   }}});
    cases.push_back({"bernoulli_logits", {{random_matrix(b, d, rng, -3, 3), random_matrix(b, d, rng, 0, 1)},
                                          [](Graph&, const std::vector<Var>& v) {
                                            return sum(bernoulli_loglik_logits(v[1], v[0]));
                                          }}});
    for (auto& [name, c] : cases) {
      INFO(name);
      // The bernoulli target is drawn inside the builder; pin it per case.
      if (std::string(name) == "bernoulli") {
        const Matrix x = random_matrix(b, d, rng, 0, 1);
        c.second = [x](Graph& g, const std::vector<Var>& v) { return sum(bernoulli_loglik(g.constant(x), v[0])); };
      }
      CHECK(fd_max_error_inputs(c.first, c.second) < kFdTolerance);
      ++trials;
    }
  }
  CHECK(trials >= 48);
}

}  // TEST_SUITE
