// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Links only the C interface.
#include "mivae/mivae.h"

#include "CLI11.hpp"

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

int report(mivae_status s) {
  if (s == MIVAE_OK) return 0;
  std::fprintf(stderr, "mivae: %s: %s\n", mivae_status_name(s), mivae_last_error());
  return mivae_status_is_user_error(s) ? kExitUser : kExitInternal;
}

// Options shared by every subcommand driven by a run configuration.
struct RunArgs {
  std::string config_file;
  std::optional<unsigned long long> seed;
  std::string data_dir;
  std::map<std::string, std::string> overrides;
};

void add_run_options(CLI::App* sub, RunArgs& a) {
  sub->add_option("--config", a.config_file, "INI-style run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", a.seed, "seed for this command");
  sub->add_option("--data-dir", a.data_dir, "directory holding the IDX files");
  for (size_t i = 0; i < mivae_config_key_count(); ++i) {
    const std::string key = mivae_config_key_name(i);
    sub->add_option_function<std::string>(
           "--" + key, [&a, key](const std::string& v) { a.overrides[key] = v; }, mivae_config_key_help(i))
        ->group("Configuration keys");
  }
}

// Config file first, then explicit flags. `seed_key` receives --seed.
mivae_status build_config(const RunArgs& a, const char* seed_key, mivae_config** out) {
  mivae_config* cfg = nullptr;
  mivae_status s = mivae_config_new(&cfg);
  if (s != MIVAE_OK) return s;
  if (!a.config_file.empty()) s = mivae_config_load_file(cfg, a.config_file.c_str());
  for (auto it = a.overrides.begin(); s == MIVAE_OK && it != a.overrides.end(); ++it)
    s = mivae_config_set(cfg, it->first.c_str(), it->second.c_str());
  if (s == MIVAE_OK && !a.data_dir.empty()) s = mivae_config_set(cfg, "data.dir", a.data_dir.c_str());
  if (s == MIVAE_OK && a.seed) s = mivae_config_set(cfg, seed_key, std::to_string(*a.seed).c_str());
  if (s == MIVAE_OK) s = mivae_config_validate(cfg);
  if (s != MIVAE_OK) {
    mivae_config_free(cfg);
    return s;
  }
  *out = cfg;
  return MIVAE_OK;
}

int run_train(const RunArgs& a) {
  mivae_config* cfg = nullptr;
  mivae_status s = build_config(a, "train.seed", &cfg);
  if (s != MIVAE_OK) return report(s);
  mivae_train_result r{};
  s = mivae_cmd_train(cfg, &r);
  mivae_config_free(cfg);
  if (s != MIVAE_OK) return report(s);
  std::printf("steps %llu recon %.6f kl_gauss %.6f kl_cat %.6f mi %.6f total %.6f\n",
              static_cast<unsigned long long>(r.steps), r.recon, r.kl_gauss, r.kl_cat, r.mi_term, r.total);
  return 0;
}

int run_eval(const RunArgs& a) {
  mivae_config* cfg = nullptr;
  mivae_status s = build_config(a, "eval.seed", &cfg);
  if (s != MIVAE_OK) return report(s);
  mivae_eval_result r{};
  s = mivae_cmd_eval(cfg, &r);
  mivae_config_free(cfg);
  if (s != MIVAE_OK) return report(s);
  std::printf("mi_lower_bound %.6f +- %.6f\nkl_upper_bound %.6f +- %.6f\nkl_gauss %.6f\n", r.mi_lower, r.mi_lower_se,
              r.kl_upper, r.kl_upper_se, r.kl_gauss);
  if (r.kl_cat >= 0) std::printf("kl_cat %.6f\n", r.kl_cat);
  if (r.accuracy >= 0) std::printf("categorical_accuracy %.4f\n", r.accuracy);
  return 0;
}

int run_figure(const RunArgs& a, bool categorical) {
  mivae_config* cfg = nullptr;
  mivae_status s = build_config(a, "train.seed", &cfg);
  if (s != MIVAE_OK) return report(s);
  char path[4096];
  s = categorical ? mivae_cmd_cat_traverse(cfg, path, sizeof path) : mivae_cmd_traverse(cfg, path, sizeof path);
  mivae_config_free(cfg);
  if (s != MIVAE_OK) return report(s);
  std::printf("%s\n", path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate VAEs with a variational mutual-information regularizer."};
  app.require_subcommand(1);
  app.set_version_flag("--version", mivae_version());

  RunArgs train_args, eval_args, trav_args, cat_args;
  CLI::App* train = app.add_subcommand("train", "train a model; writes metrics.csv and checkpoints");
  add_run_options(train, train_args);
  CLI::App* eval = app.add_subcommand("eval", "MI bounds, KL terms, histogram and accuracy for a checkpoint");
  add_run_options(eval, eval_args);
  CLI::App* trav = app.add_subcommand("traverse", "Gaussian latent traversal figure");
  add_run_options(trav, trav_args);
  CLI::App* cat = app.add_subcommand("cat-traverse", "one-hot categorical traversal figure");
  add_run_options(cat, cat_args);

  mivae_em_options em{};
  mivae_em_options_default(&em);
  std::string em_dir = em.output_dir;
  CLI::App* emc = app.add_subcommand("em-demo", "fit a Gaussian mixture to synthetic clusters");
  emc->add_option("--components", em.components, "mixture components")->capture_default_str();
  emc->add_option("--points", em.points_per_component, "points per component")->capture_default_str();
  emc->add_option("--dim", em.dim, "data dimension")->capture_default_str();
  emc->add_option("--separation", em.separation, "distance between cluster centers")->capture_default_str();
  emc->add_option("--iters", em.iters, "EM iterations")->capture_default_str();
  emc->add_option("--seed", em.seed, "seed")->capture_default_str();
  emc->add_option("--output-dir", em_dir, "output directory")->capture_default_str();

  mivae_toy_options toy{};
  mivae_toy_options_default(&toy);
  std::string toy_kind = toy.kind;
  std::string toy_dir = toy.output_dir;
  CLI::App* toyc = app.add_subcommand("toy-mi", "MI bounds on an enumerable toy joint");
  toyc->add_option("--kind", toy_kind, "independent, identity or noisy-channel")
      ->check(CLI::IsMember({"independent", "identity", "noisy-channel"}))
      ->capture_default_str();
  toyc->add_option("--k", toy.k, "alphabet size")->capture_default_str();
  toyc->add_option("--epsilon", toy.epsilon, "flip probability for noisy-channel")->capture_default_str();
  toyc->add_option("--budget", toy.budget, "Q training steps")->capture_default_str();
  toyc->add_option("--seed", toy.seed, "seed")->capture_default_str();
  toyc->add_option("--output-dir", toy_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUser;
  }

  if (*train) return run_train(train_args);
  if (*eval) return run_eval(eval_args);
  if (*trav) return run_figure(trav_args, false);
  if (*cat) return run_figure(cat_args, true);
  if (*emc) {
    em.output_dir = em_dir.c_str();
    mivae_em_result r{};
    const mivae_status s = mivae_cmd_em_demo(&em, &r);
    if (s != MIVAE_OK) return report(s);
    std::printf("loglik %.6f -> %.6f over %d iterations (%s)\n", r.initial_loglik, r.final_loglik, r.iterations,
                r.monotone ? "monotone" : "NOT monotone");
    return 0;
  }
  if (*toyc) {
    toy.kind = toy_kind.c_str();
    toy.output_dir = toy_dir.c_str();
    mivae_toy_result r{};
    const mivae_status s = mivae_cmd_toy_mi(&toy, &r);
    if (s != MIVAE_OK) return report(s);
    std::printf("exact %.6f lower %.6f +- %.6f kl_upper %.6f\n", r.exact_mi, r.lower, r.lower_se, r.kl_upper);
    return 0;
  }
  return kExitInternal;
}
