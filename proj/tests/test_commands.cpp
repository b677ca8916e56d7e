// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "mivae/commands.hpp"
#include "mivae/error.hpp"
#include "mivae/figures.hpp"
#include "mivae/run_config.hpp"

using namespace mivae;
using namespace mivae::test;

namespace {

Architecture tiny_arch() {
  Architecture a;
  a.encoder_hidden = {12};
  a.decoder_hidden = {12};
  a.aux_hidden = {8};
  return a;
}

VaeModel tiny_model(std::size_t gauss, std::size_t k, std::uint64_t seed) {
  LatentLayout l;
  l.gaussian_dim = gauss;
  l.categorical_k = k;
  l.mi_target = k > 0 ? MiTarget::categorical() : MiTarget::gaussian_subvector({0});
  return VaeModel::create(16, l, tiny_arch(), seed);
}

Eigen::RowVectorXd tile(const Matrix& grid, Index r, Index c, Index h, Index w) {
  Eigen::RowVectorXd t(h * w);
  for (Index y = 0; y < h; ++y) t.segment(y * w, w) = grid.block(r * h + y, c * w, 1, w);
  return t;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("config text: set, get, round trip and errors") {
  RunConfig c;
  c.set("train.epochs", "3");
  c.set("objective.lambda", "0.25");
  c.set("model.mi_target", "0,2");
  CHECK(c.get("train.epochs") == "3");
  CHECK(c.train.epochs == 3);
  CHECK(c.train.objective.lambda == 0.25);
  const RunConfig back = parse_run_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  for (const std::string& k : RunConfig::keys()) {
    INFO(k);
    CHECK(back.get(k) == c.get(k));
    CHECK(!RunConfig::describe(k).empty());
  }
  CHECK_THROWS_AS(c.set("train.nonsense", "1"), ContractError);
  CHECK_THROWS_AS(c.set("train.epochs", "many"), ContractError);
  try {
    parse_run_config("[train]\nepochs = 2\nwarmup = 4\n");
    FAIL("expected an unknown-key error");
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("warmup") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("[train\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config("[train]\nepochs\n"), ContractError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.ini"), IoError);
}

TEST_CASE("PGM encoding") {
  Matrix img(2, 3);
  img << 0.0, 1.0, 0.5, -0.2, 1.7, 0.499;
  const std::string bytes = encode_pgm(img);
  CHECK(bytes.rfind("P5\n3 2\n255\n", 0) == 0);
  const Matrix back = decode_pgm(bytes);
  CHECK(back.rows() == 2);
  CHECK(back.cols() == 3);
  const std::vector<int> expect{0, 255, 128, 0, 255, 127};
  for (Index i = 0; i < 6; ++i) CHECK(std::lround(back.data()[i] * 255.0) == expect[static_cast<std::size_t>(i)]);
  CHECK_THROWS_AS(decode_pgm("P6\n1 1\n255\n\x01"), FormatError);
  CHECK_THROWS_AS(decode_pgm("P5\n4 4\n255\n\x01"), FormatError);
}

TEST_CASE("latent traversal grid") {
  VaeModel m = tiny_model(3, 2, 1);
  const Matrix anchor = toy_images(1, 2, 4);
  TraversalSpec one{{1}, -2.0, 2.0, 1};
  const Matrix g1 = traversal_grid(m, anchor, one, 4, 4);
  CHECK(g1.rows() == 4);
  CHECK(g1.cols() == 4);
  const Posterior post = encode(m, anchor);
  Index best = 0;
  post.probs().row(0).maxCoeff(&best);
  Matrix c = Matrix::Zero(1, 2);
  c(0, best) = 1.0;
  const Matrix recon = decode(m, post.mu, &c);
  CHECK((tile(g1, 0, 0, 4, 4) - recon.row(0)).cwiseAbs().maxCoeff() < 1e-15);

  TraversalSpec two{{0, 2}, -3.0, 3.0, 5};
  const Matrix g2 = traversal_grid(m, anchor, two, 4, 4);
  CHECK(g2.rows() == 20);
  CHECK(g2.cols() == 20);
  CHECK(sweep_values(two, 9.0) == std::vector<double>{-3.0, -1.5, 0.0, 1.5, 3.0});

  // Cut z_0 out of the decoder: every tile along its sweep is identical.
  m.decoder.layers.front().weight.data.col(0).setZero();
  TraversalSpec sweep0{{0}, -3.0, 3.0, 6};
  const Matrix g3 = traversal_grid(m, anchor, sweep0, 4, 4);
  CHECK(g3.cols() == 24);
  for (Index j = 1; j < 6; ++j) CHECK((tile(g3, 0, j, 4, 4) - tile(g3, 0, 0, 4, 4)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(traversal_grid(m, anchor, TraversalSpec{{3}, -1, 1, 3}, 4, 4), ContractError);
  CHECK_THROWS_AS(traversal_grid(m, anchor, one, 2, 4), DimensionError);
}

TEST_CASE("categorical traversal grid") {
  VaeModel m = tiny_model(2, 5, 3);
  const Matrix anchors = toy_images(3, 4, 4);
  const Matrix g = cat_traversal_grid(m, anchors, 4, 4);
  CHECK(g.rows() == 3 * 4);
  CHECK(g.cols() == 6 * 4);
  for (Index r = 0; r < 3; ++r) CHECK((tile(g, r, 0, 4, 4) - anchors.row(r)).cwiseAbs().maxCoeff() < 1e-15);
  // Decoder blind to c: all K generated tiles in a row coincide.
  m.decoder.layers.front().weight.data.rightCols(5).setZero();
  const Matrix flat = cat_traversal_grid(m, anchors, 4, 4);
  for (Index r = 0; r < 3; ++r)
    for (Index j = 2; j <= 5; ++j) CHECK((tile(flat, r, j, 4, 4) - tile(flat, r, 1, 4, 4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(cat_traversal_grid(tiny_model(2, 0, 3), anchors, 4, 4), ContractError);
}

TEST_CASE("evaluation report files") {
  TempDir dir("reports");
  EvalSummary s;
  s.mi.lower = {0.5, 0.01};
  s.mi.upper = {1.5, 0.02};
  s.mi.q_training_curve = {0.1, 0.2, 0.3};
  s.histogram = {3, 0, 1, 4};
  s.label_counts = CountMatrix::Zero(2, 3);
  s.label_counts(1, 2) = 7;
  s.accuracy = 0.75;
  s.kl_cat = 1.25;
  s.checkpoint = "ck.bin";
  write_eval_reports(dir.path(), s);
  const auto rep = dir.path() / "reports";
  CHECK(slurp(rep / "mi_report.csv") == "metric,value,se\nmi_lower_bound,0.5,0.01\nkl_upper_bound,1.5,0.02\n");
  CHECK(slurp(rep / "q_curve.csv").rfind("step,objective\n1,0.10000000000000001\n", 0) == 0);
  CHECK(slurp(rep / "prob_histogram.csv") == "bin_low,bin_high,count\n0,0.25,3\n0.25,0.5,0\n0.5,0.75,1\n0.75,1,4\n");
  CHECK(slurp(rep / "onehot_counts.csv") == "category,label_0,label_1,label_2\n0,0,0,0\n1,0,0,7\n");
  const std::string summary = slurp(rep / "summary.txt");
  CHECK(summary.find("categorical_accuracy: 0.75") != std::string::npos);
  CHECK(summary.find("kl_cat: 1.25") != std::string::npos);
}

TEST_CASE("run data split and binarization") {
  TempDir dir("rundata");
  Dataset ds;
  ds.images = toy_images(10, 5, 4);
  ds.images = (ds.images.array() * 0.8 + 0.1).matrix();
  ds.height = ds.width = 4;
  for (int i = 0; i < 10; ++i) ds.labels.push_back(i);
  idx_save(ds, dir.path() / "img", dir.path() / "lab");
  DataConfig cfg;
  cfg.dir = dir.path().string();
  cfg.images = "img";
  cfg.labels = "lab";
  cfg.train_count = 6;
  cfg.test_count = 3;
  const RunData d = load_run_data(cfg);
  CHECK(d.train.size() == 6);
  CHECK(d.test.size() == 3);
  CHECK(d.train.labels.front() == 0);
  CHECK(d.test.labels == std::vector<int>{7, 8, 9});
  CHECK(((d.train.images.array() == 0.0) || (d.train.images.array() == 1.0)).all());
  cfg.train_count = 0;
  CHECK(load_run_data(cfg).train.size() == 7);
  cfg.test_count = 10;
  CHECK_THROWS_AS(load_run_data(cfg), ContractError);
}

TEST_CASE("EM and toy commands write their CSVs") {
  TempDir dir("cmds");
  EmDemoOptions em;
  em.output_dir = dir.path() / "em";
  const EmFit fit = cmd_em_demo(em);
  CHECK(fit.trace.size() == 51);
  CHECK(slurp(em.output_dir / "em_params.csv").rfind("component,weight,mean_0,mean_1,var_0,var_1\n", 0) == 0);
  CHECK(slurp(em.output_dir / "em_trace.csv").rfind("iter,loglik\n0,", 0) == 0);
  ToyMiOptions toy;
  toy.mi.budget = 50;
  toy.output_dir = dir.path() / "toy";
  const ToyMiOutcome out = cmd_toy_mi(toy);
  CHECK(std::abs(out.exact - 0.3680642071684971) < 1e-12);
  CHECK(slurp(toy.output_dir / "reports" / "toy_mi.csv")
            .rfind("kind,k,epsilon,exact_mi,lower_bound,lower_se,kl_upper_bound\nnoisy-channel,2,0.10000000000000001,", 0) == 0);
}

}  // TEST_SUITE
