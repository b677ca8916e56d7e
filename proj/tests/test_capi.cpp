// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library through its C header only, and the CLI binary
// through std::system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mivae/mivae.h"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag)
      : dir(fs::temp_directory_path() / ("mivae_capi_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// n 8x8 images: a bar whose position depends on the label.
void write_fixture(const fs::path& dir, std::uint32_t n) {
  std::string img, lab;
  put_be32(img, 0x803);
  put_be32(img, n);
  put_be32(img, 8);
  put_be32(img, 8);
  put_be32(lab, 0x801);
  put_be32(lab, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 4);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) img.push_back(static_cast<char>(y / 2 == label || x == static_cast<int>(i % 8) ? 255 : 0));
    lab.push_back(static_cast<char>(label));
  }
  std::ofstream(dir / "img", std::ios::binary) << img;
  std::ofstream(dir / "lab", std::ios::binary) << lab;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MIVAE_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string small_run_flags(const fs::path& data, const fs::path& out) {
  return "--data-dir " + data.string() + " --data.images img --data.labels lab --data.train_count 48" +
         " --data.test_count 16 --model.gaussian_dim 2 --model.categorical_k 4 --model.encoder_hidden 16" +
         " --model.decoder_hidden 16 --model.aux_hidden 8 --train.epochs 1 --train.batch_size 16" +
         " --objective.lambda 1 --eval.budget 20 --eval.passes 2 --traverse.steps 3 --traverse.cat_anchors 0,1" +
         " --output.dir " + out.string();
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and version") {
  CHECK(std::strlen(mivae_version()) > 0);
  CHECK(std::string(mivae_status_name(MIVAE_OK)) == "ok");
  CHECK(mivae_status_is_user_error(MIVAE_ERR_FORMAT));
  CHECK(!mivae_status_is_user_error(MIVAE_ERR_INTERNAL));
  CHECK(!mivae_status_is_user_error(MIVAE_ERR_NUMERIC));
}

TEST_CASE("config handle") {
  mivae_config* cfg = nullptr;
  REQUIRE(mivae_config_new(&cfg) == MIVAE_OK);
  CHECK(mivae_config_set(cfg, "train.epochs", "4") == MIVAE_OK);
  char buf[64];
  size_t need = 0;
  CHECK(mivae_config_get(cfg, "train.epochs", buf, sizeof buf, &need) == MIVAE_OK);
  CHECK(std::string(buf) == "4");
  CHECK(need == 2);

  CHECK(mivae_config_set(cfg, "train.warmup", "1") == MIVAE_ERR_CONTRACT);
  CHECK(std::string(mivae_last_error()).find("warmup") != std::string::npos);
  CHECK(mivae_config_apply_text(cfg, "[train]\nepochs = 2\nbogus = 1\n") == MIVAE_ERR_CONTRACT);
  CHECK(std::string(mivae_last_error()).find("line 3") != std::string::npos);
  CHECK(mivae_config_load_file(cfg, "/nonexistent/x.ini") == MIVAE_ERR_IO);

  // Size query, then a buffer that is one byte short.
  CHECK(mivae_config_to_text(cfg, nullptr, 0, &need) == MIVAE_OK);
  CHECK(need > 100);
  std::vector<char> text(need);
  CHECK(mivae_config_to_text(cfg, text.data(), need - 1, nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_config_to_text(cfg, text.data(), need, nullptr) == MIVAE_OK);
  CHECK(std::string(text.data()).find("epochs = 4") != std::string::npos);

  mivae_config* copy = nullptr;
  REQUIRE(mivae_config_new(&copy) == MIVAE_OK);
  CHECK(mivae_config_apply_text(copy, text.data()) == MIVAE_OK);
  std::vector<char> again(need);
  CHECK(mivae_config_to_text(copy, again.data(), need, nullptr) == MIVAE_OK);
  CHECK(std::string(again.data()) == std::string(text.data()));

  CHECK(mivae_config_set(cfg, "train.batch_size", "0") == MIVAE_OK);
  CHECK(mivae_config_validate(cfg) == MIVAE_ERR_CONTRACT);

  const size_t n = mivae_config_key_count();
  CHECK(n > 40);
  for (size_t i = 0; i < n; ++i) {
    CHECK(mivae_config_key_name(i) != nullptr);
    CHECK(mivae_config_key_help(i) != nullptr);
  }
  CHECK(mivae_config_key_name(n) == nullptr);
  mivae_config_free(copy);
  mivae_config_free(cfg);
  mivae_config_free(nullptr);
}

TEST_CASE("null arguments are rejected, not dereferenced") {
  CHECK(mivae_config_new(nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_config_set(nullptr, "a", "b") == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_dataset_load_idx(nullptr, nullptr, nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_model_load("x", nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_cmd_train(nullptr, nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_cmd_em_demo(nullptr, nullptr) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_dataset_size(nullptr) == 0);
  CHECK(mivae_dataset_label(nullptr, 0) == -1);
  mivae_dataset_free(nullptr);
  mivae_model_free(nullptr);
}

TEST_CASE("dataset handle") {
  Scratch s("ds");
  write_fixture(s.dir, 6);
  mivae_dataset* ds = nullptr;
  REQUIRE(mivae_dataset_load_idx((s.dir / "img").c_str(), (s.dir / "lab").c_str(), &ds) == MIVAE_OK);
  CHECK(mivae_dataset_size(ds) == 6);
  CHECK(mivae_dataset_dim(ds) == 64);
  CHECK(mivae_dataset_label(ds, 5) == 1);
  std::vector<double> row(64);
  CHECK(mivae_dataset_row(ds, 2, row.data(), row.size()) == MIVAE_OK);
  CHECK(row[2 * 8 * 2] == 1.0);
  CHECK(mivae_dataset_row(ds, 6, row.data(), row.size()) == MIVAE_ERR_ARGUMENT);
  CHECK(mivae_dataset_row(ds, 0, row.data(), 10) == MIVAE_ERR_ARGUMENT);
  mivae_dataset_free(ds);
  std::ofstream(s.dir / "bad") << "not an idx file";
  CHECK(mivae_dataset_load_idx((s.dir / "bad").c_str(), nullptr, &ds) == MIVAE_ERR_FORMAT);
  CHECK(mivae_dataset_load_idx((s.dir / "missing").c_str(), nullptr, &ds) == MIVAE_ERR_IO);
}

TEST_CASE("EM and toy commands") {
  Scratch s("cmd");
  mivae_em_options em;
  mivae_em_options_default(&em);
  CHECK(em.components == 3);
  const std::string em_dir = (s.dir / "em").string();
  em.output_dir = em_dir.c_str();
  mivae_em_result er{};
  REQUIRE(mivae_cmd_em_demo(&em, &er) == MIVAE_OK);
  CHECK(er.monotone == 1);
  CHECK(er.final_loglik >= er.initial_loglik - 1e-9);
  CHECK(fs::exists(s.dir / "em" / "em_trace.csv"));
  em.components = 0;
  CHECK(mivae_cmd_em_demo(&em, &er) == MIVAE_ERR_CONTRACT);

  mivae_toy_options toy;
  mivae_toy_options_default(&toy);
  const std::string toy_dir = (s.dir / "toy").string();
  toy.output_dir = toy_dir.c_str();
  toy.budget = 200;
  mivae_toy_result tr{};
  REQUIRE(mivae_cmd_toy_mi(&toy, &tr) == MIVAE_OK);
  CHECK(std::abs(tr.exact_mi - 0.3680642071684971) < 1e-12);
  CHECK(tr.lower - 3 * tr.lower_se <= tr.exact_mi);
  CHECK(tr.exact_mi <= tr.kl_upper + 1e-9);
  toy.kind = "loopy";
  CHECK(mivae_cmd_toy_mi(&toy, &tr) == MIVAE_ERR_CONTRACT);
}

TEST_CASE("model handle round trip through train") {
  Scratch s("model");
  write_fixture(s.dir, 64);
  mivae_config* cfg = nullptr;
  REQUIRE(mivae_config_new(&cfg) == MIVAE_OK);
  const std::string text = "[data]\ndir = " + s.dir.string() +
                           "\nimages = img\nlabels = lab\ntrain_count = 48\ntest_count = 16\n"
                           "[model]\ngaussian_dim = 2\ncategorical_k = 3\nencoder_hidden = 8\ndecoder_hidden = 8\n"
                           "aux_hidden = 8\n[train]\nepochs = 1\nbatch_size = 16\n[output]\ndir = " +
                           (s.dir / "run").string() + "\n";
  REQUIRE(mivae_config_apply_text(cfg, text.c_str()) == MIVAE_OK);
  mivae_train_result tr{};
  REQUIRE(mivae_cmd_train(cfg, &tr) == MIVAE_OK);
  CHECK(tr.steps == 3);
  CHECK(std::isfinite(tr.total));
  mivae_config_free(cfg);

  mivae_model* m = nullptr;
  REQUIRE(mivae_model_load((s.dir / "run" / "ckpt_final.bin").c_str(), &m) == MIVAE_OK);
  CHECK(mivae_model_data_dim(m) == 64);
  CHECK(mivae_model_gaussian_dim(m) == 2);
  CHECK(mivae_model_categorical_k(m) == 3);
  std::vector<double> x(64, 0.0), mu(2), lv(2), probs(3), out(64);
  CHECK(mivae_model_encode(m, x.data(), 1, mu.data(), lv.data(), probs.data()) == MIVAE_OK);
  CHECK(std::abs(probs[0] + probs[1] + probs[2] - 1.0) < 1e-12);
  const double c[3] = {0, 1, 0};
  CHECK(mivae_model_decode(m, mu.data(), c, 1, out.data()) == MIVAE_OK);
  for (double v : out) CHECK((v > 0.0 && v < 1.0));
  CHECK(mivae_model_decode(m, mu.data(), nullptr, 1, out.data()) == MIVAE_ERR_CONTRACT);
  CHECK(mivae_model_save(m, (s.dir / "copy.bin").c_str()) == MIVAE_OK);
  CHECK(read_file(s.dir / "copy.bin") == read_file(s.dir / "run" / "ckpt_final.bin"));
  mivae_model_free(m);
  std::ofstream(s.dir / "junk.bin") << "junk";
  CHECK(mivae_model_load((s.dir / "junk.bin").c_str(), &m) == MIVAE_ERR_FORMAT);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("train, eval and figures from the command line") {
  Scratch s("cli");
  write_fixture(s.dir, 64);
  const fs::path log = s.dir / "log.txt";
  const fs::path a = s.dir / "a", b = s.dir / "b";
  REQUIRE(run("train --seed 3 " + small_run_flags(s.dir, a), log) == 0);
  for (const char* f : {"config.resolved", "metrics.csv", "ckpt_final.bin"}) {
    INFO(f);
    CHECK(fs::exists(a / f));
  }
  CHECK(read_file(a / "config.resolved").find("seed = 3") != std::string::npos);
  REQUIRE(run("train --seed 3 " + small_run_flags(s.dir, b), log) == 0);
  CHECK(read_file(a / "metrics.csv") == read_file(b / "metrics.csv"));
  CHECK(read_file(a / "ckpt_final.bin") == read_file(b / "ckpt_final.bin"));

  // A config file plus a flag that overrides it.
  std::ofstream(s.dir / "run.ini") << "[train]\nepochs = 5\n";
  const fs::path c = s.dir / "c";
  REQUIRE(run("train --config " + (s.dir / "run.ini").string() + " " + small_run_flags(s.dir, c), log) == 0);
  CHECK(read_file(c / "config.resolved").find("epochs = 1") != std::string::npos);

  REQUIRE(run("eval " + small_run_flags(s.dir, a), log) == 0);
  CHECK(read_file(log).find("mi_lower_bound") != std::string::npos);
  for (const char* f : {"mi_report.csv", "q_curve.csv", "prob_histogram.csv", "onehot_counts.csv", "summary.txt"}) {
    INFO(f);
    CHECK(fs::exists(a / "reports" / f));
  }
  REQUIRE(run("traverse " + small_run_flags(s.dir, a), log) == 0);
  CHECK(read_file(a / "figures" / "traverse.pgm").rfind("P5\n24 24\n255\n", 0) == 0);
  REQUIRE(run("cat-traverse " + small_run_flags(s.dir, a), log) == 0);
  CHECK(read_file(a / "figures" / "cat_traverse.pgm").rfind("P5\n40 16\n255\n", 0) == 0);
}

TEST_CASE("exit codes") {
  Scratch s("exit");
  write_fixture(s.dir, 64);
  const fs::path log = s.dir / "log.txt";
  CHECK(run("train --train.warmup 3", log) == 1);
  CHECK(run("train --train.epochs lots", log) == 1);
  CHECK(read_file(log).find("mivae: ") != std::string::npos);
  CHECK(run("frobnicate", log) == 1);
  CHECK(run("", log) == 1);
  CHECK(run("--help", log) == 0);
  CHECK(run("train --data-dir " + (s.dir / "nowhere").string(), log) == 1);
  CHECK(read_file(log).find("i/o error") != std::string::npos);
  CHECK(run("eval " + small_run_flags(s.dir, s.dir / "empty"), log) == 1);
  CHECK(run("toy-mi --kind loopy", log) == 1);
  CHECK(run("em-demo --output-dir " + (s.dir / "em").string(), log) == 0);
  CHECK(read_file(log).find("monotone") != std::string::npos);
  CHECK(run("toy-mi --budget 50 --output-dir " + (s.dir / "toy").string(), log) == 0);
  CHECK(fs::exists(s.dir / "toy" / "reports" / "toy_mi.csv"));
}

}  // TEST_SUITE
