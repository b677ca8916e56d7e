// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/mivae.h"

#include "mivae/commands.hpp"
#include "mivae/error.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <string>

struct mivae_config {
  mivae::RunConfig cfg;
};

struct mivae_dataset {
  mivae::Dataset ds;
};

struct mivae_model {
  mivae::Checkpoint ck;
};

namespace {

thread_local std::string g_last_error;

mivae_status fail(mivae_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
mivae_status guarded(F&& f) {
  try {
    f();
    return MIVAE_OK;
  } catch (const mivae::DimensionError& e) {
    return fail(MIVAE_ERR_DIMENSION, e.what());
  } catch (const mivae::ContractError& e) {
    return fail(MIVAE_ERR_CONTRACT, e.what());
  } catch (const mivae::FormatError& e) {
    return fail(MIVAE_ERR_FORMAT, e.what());
  } catch (const mivae::IoError& e) {
    return fail(MIVAE_ERR_IO, e.what());
  } catch (const mivae::NumericError& e) {
    return fail(MIVAE_ERR_NUMERIC, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MIVAE_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MIVAE_ERR_CONTRACT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MIVAE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MIVAE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MIVAE_ERR_INTERNAL, "unknown error");
  }
}

mivae_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || cap < s.size() + 1) {
    if (!buf && needed) return MIVAE_OK;
    return fail(MIVAE_ERR_ARGUMENT, "output buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return MIVAE_OK;
}

#define MIVAE_REQUIRE(ptr)                                         \
  do {                                                             \
    if (!(ptr)) return fail(MIVAE_ERR_ARGUMENT, #ptr " is null"); \
  } while (0)

}  // namespace

extern "C" {

const char* mivae_version(void) { return "0.1.0"; }

const char* mivae_last_error(void) { return g_last_error.c_str(); }

const char* mivae_status_name(mivae_status s) {
  switch (s) {
    case MIVAE_OK: return "ok";
    case MIVAE_ERR_ARGUMENT: return "argument error";
    case MIVAE_ERR_DIMENSION: return "dimension error";
    case MIVAE_ERR_CONTRACT: return "contract error";
    case MIVAE_ERR_FORMAT: return "format error";
    case MIVAE_ERR_IO: return "i/o error";
    case MIVAE_ERR_NUMERIC: return "numeric error";
    case MIVAE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int mivae_status_is_user_error(mivae_status s) {
  return s == MIVAE_ERR_ARGUMENT || s == MIVAE_ERR_DIMENSION || s == MIVAE_ERR_CONTRACT || s == MIVAE_ERR_FORMAT ||
         s == MIVAE_ERR_IO;
}

mivae_status mivae_config_new(mivae_config** out) {
  MIVAE_REQUIRE(out);
  return guarded([&] { *out = new mivae_config{}; });
}

void mivae_config_free(mivae_config* cfg) { delete cfg; }

mivae_status mivae_config_load_file(mivae_config* cfg, const char* path) {
  MIVAE_REQUIRE(cfg);
  MIVAE_REQUIRE(path);
  return guarded([&] { cfg->cfg = mivae::load_run_config(path); });
}

mivae_status mivae_config_apply_text(mivae_config* cfg, const char* text) {
  MIVAE_REQUIRE(cfg);
  MIVAE_REQUIRE(text);
  return guarded([&] {
    mivae::RunConfig copy = cfg->cfg;
    mivae::apply_run_config(copy, text);
    cfg->cfg = std::move(copy);
  });
}

mivae_status mivae_config_set(mivae_config* cfg, const char* key, const char* value) {
  MIVAE_REQUIRE(cfg);
  MIVAE_REQUIRE(key);
  MIVAE_REQUIRE(value);
  return guarded([&] { cfg->cfg.set(key, value); });
}

mivae_status mivae_config_get(const mivae_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
  MIVAE_REQUIRE(cfg);
  MIVAE_REQUIRE(key);
  std::string v;
  const mivae_status s = guarded([&] { v = cfg->cfg.get(key); });
  return s == MIVAE_OK ? copy_out(v, buf, cap, needed) : s;
}

mivae_status mivae_config_to_text(const mivae_config* cfg, char* buf, size_t cap, size_t* needed) {
  MIVAE_REQUIRE(cfg);
  std::string v;
  const mivae_status s = guarded([&] { v = cfg->cfg.to_text(); });
  return s == MIVAE_OK ? copy_out(v, buf, cap, needed) : s;
}

mivae_status mivae_config_validate(const mivae_config* cfg) {
  MIVAE_REQUIRE(cfg);
  return guarded([&] { cfg->cfg.validate(); });
}

size_t mivae_config_key_count(void) { return mivae::RunConfig::keys().size(); }

const char* mivae_config_key_name(size_t i) {
  const auto& k = mivae::RunConfig::keys();
  return i < k.size() ? k[i].c_str() : nullptr;
}

const char* mivae_config_key_help(size_t i) {
  static thread_local std::string help;
  const auto& k = mivae::RunConfig::keys();
  if (i >= k.size()) return nullptr;
  help = mivae::RunConfig::describe(k[i]);
  return help.c_str();
}

mivae_status mivae_dataset_load_idx(const char* images_path, const char* labels_path, mivae_dataset** out) {
  MIVAE_REQUIRE(images_path);
  MIVAE_REQUIRE(out);
  return guarded([&] {
    std::optional<std::filesystem::path> labels;
    if (labels_path) labels = labels_path;
    *out = new mivae_dataset{mivae::idx_load(images_path, labels)};
  });
}

void mivae_dataset_free(mivae_dataset* ds) { delete ds; }

size_t mivae_dataset_size(const mivae_dataset* ds) { return ds ? static_cast<size_t>(ds->ds.size()) : 0; }

size_t mivae_dataset_dim(const mivae_dataset* ds) { return ds ? static_cast<size_t>(ds->ds.dim()) : 0; }

mivae_status mivae_dataset_row(const mivae_dataset* ds, size_t row, double* out, size_t cap) {
  MIVAE_REQUIRE(ds);
  MIVAE_REQUIRE(out);
  if (row >= static_cast<size_t>(ds->ds.size())) return fail(MIVAE_ERR_ARGUMENT, "row out of range");
  const auto dim = static_cast<size_t>(ds->ds.dim());
  if (cap < dim) return fail(MIVAE_ERR_ARGUMENT, "output buffer holds fewer than dim values");
  for (size_t j = 0; j < dim; ++j) out[j] = ds->ds.images(static_cast<mivae::Index>(row), static_cast<mivae::Index>(j));
  return MIVAE_OK;
}

int mivae_dataset_label(const mivae_dataset* ds, size_t row) {
  if (!ds || !ds->ds.has_labels() || row >= ds->ds.labels.size()) return -1;
  return ds->ds.labels[row];
}

mivae_status mivae_model_load(const char* checkpoint_path, mivae_model** out) {
  MIVAE_REQUIRE(checkpoint_path);
  MIVAE_REQUIRE(out);
  return guarded([&] { *out = new mivae_model{mivae::load_checkpoint(checkpoint_path)}; });
}

mivae_status mivae_model_save(const mivae_model* m, const char* checkpoint_path) {
  MIVAE_REQUIRE(m);
  MIVAE_REQUIRE(checkpoint_path);
  return guarded([&] { mivae::save_checkpoint(checkpoint_path, m->ck); });
}

void mivae_model_free(mivae_model* m) { delete m; }

size_t mivae_model_data_dim(const mivae_model* m) { return m ? static_cast<size_t>(m->ck.model.data_dim) : 0; }

size_t mivae_model_gaussian_dim(const mivae_model* m) { return m ? m->ck.model.layout.gaussian_dim : 0; }

size_t mivae_model_categorical_k(const mivae_model* m) { return m ? m->ck.model.layout.categorical_k : 0; }

mivae_status mivae_model_encode(const mivae_model* m, const double* x, size_t n, double* mu, double* log_var,
                                double* probs) {
  MIVAE_REQUIRE(m);
  MIVAE_REQUIRE(x);
  return guarded([&] {
    const auto& model = m->ck.model;
    const mivae::Matrix xm =
        Eigen::Map<const mivae::Matrix>(x, static_cast<mivae::Index>(n), model.data_dim);
    const mivae::Posterior p = mivae::encode(model, xm);
    if (mu) Eigen::Map<mivae::Matrix>(mu, p.mu.rows(), p.mu.cols()) = p.mu;
    if (log_var) Eigen::Map<mivae::Matrix>(log_var, p.log_var.rows(), p.log_var.cols()) = p.log_var;
    if (probs && model.layout.has_categorical()) {
      const mivae::Matrix pr = p.probs();
      Eigen::Map<mivae::Matrix>(probs, pr.rows(), pr.cols()) = pr;
    }
  });
}

mivae_status mivae_model_decode(const mivae_model* m, const double* z, const double* c, size_t n, double* out) {
  MIVAE_REQUIRE(m);
  MIVAE_REQUIRE(out);
  return guarded([&] {
    const auto& model = m->ck.model;
    const auto rows = static_cast<mivae::Index>(n);
    const auto g = static_cast<mivae::Index>(model.layout.gaussian_dim);
    const auto k = static_cast<mivae::Index>(model.layout.categorical_k);
    if (g > 0 && !z) throw mivae::ContractError("decode: z is required for a Gaussian latent");
    const mivae::Matrix zm = g > 0 ? mivae::Matrix(Eigen::Map<const mivae::Matrix>(z, rows, g)) : mivae::Matrix(rows, 0);
    mivae::Matrix cm;
    if (c) cm = Eigen::Map<const mivae::Matrix>(c, rows, k);
    const mivae::Matrix xr = mivae::decode(model, zm, c ? &cm : nullptr);
    Eigen::Map<mivae::Matrix>(out, xr.rows(), xr.cols()) = xr;
  });
}

mivae_status mivae_cmd_train(const mivae_config* cfg, mivae_train_result* out) {
  MIVAE_REQUIRE(cfg);
  return guarded([&] {
    const mivae::TrainOutcome r = mivae::cmd_train(cfg->cfg);
    if (out) *out = {r.steps, r.last.recon, r.last.kl_gauss, r.last.kl_cat, r.last.mi_term, r.last.total};
  });
}

mivae_status mivae_cmd_eval(const mivae_config* cfg, mivae_eval_result* out) {
  MIVAE_REQUIRE(cfg);
  return guarded([&] {
    const mivae::EvalSummary s = mivae::cmd_eval(cfg->cfg);
    if (out)
      *out = {s.mi.lower.value, s.mi.lower.se, s.mi.upper.value, s.mi.upper.se, s.kl_gauss, s.kl_cat, s.accuracy};
  });
}

mivae_status mivae_cmd_traverse(const mivae_config* cfg, char* path_buf, size_t cap) {
  MIVAE_REQUIRE(cfg);
  std::string p;
  const mivae_status s = guarded([&] { p = mivae::cmd_traverse(cfg->cfg).string(); });
  return s == MIVAE_OK && path_buf ? copy_out(p, path_buf, cap, nullptr) : s;
}

mivae_status mivae_cmd_cat_traverse(const mivae_config* cfg, char* path_buf, size_t cap) {
  MIVAE_REQUIRE(cfg);
  std::string p;
  const mivae_status s = guarded([&] { p = mivae::cmd_cat_traverse(cfg->cfg).string(); });
  return s == MIVAE_OK && path_buf ? copy_out(p, path_buf, cap, nullptr) : s;
}

void mivae_em_options_default(mivae_em_options* opt) {
  if (!opt) return;
  const mivae::EmDemoOptions d;
  static const std::string dir = d.output_dir.string();
  *opt = {static_cast<size_t>(d.components), static_cast<size_t>(d.points_per_component), static_cast<size_t>(d.dim),
          d.separation, d.iters, d.seed, dir.c_str()};
}

mivae_status mivae_cmd_em_demo(const mivae_em_options* opt, mivae_em_result* out) {
  MIVAE_REQUIRE(opt);
  return guarded([&] {
    mivae::EmDemoOptions o;
    o.components = static_cast<mivae::Index>(opt->components);
    o.points_per_component = static_cast<mivae::Index>(opt->points_per_component);
    o.dim = static_cast<mivae::Index>(opt->dim);
    o.separation = opt->separation;
    o.iters = opt->iters;
    o.seed = opt->seed;
    if (opt->output_dir) o.output_dir = opt->output_dir;
    const mivae::EmFit fit = mivae::cmd_em_demo(o);
    if (out) {
      int monotone = 1;
      for (std::size_t i = 1; i < fit.trace.size(); ++i)
        if (fit.trace[i] < fit.trace[i - 1] - 1e-9) monotone = 0;
      *out = {fit.trace.front(), fit.trace.back(), static_cast<int>(fit.trace.size()) - 1, monotone};
    }
  });
}

void mivae_toy_options_default(mivae_toy_options* opt) {
  if (!opt) return;
  const mivae::ToyMiOptions d;
  static const std::string dir = d.output_dir.string();
  *opt = {"noisy-channel", d.k, d.epsilon, d.mi.budget, d.mi.seed, dir.c_str()};
}

mivae_status mivae_cmd_toy_mi(const mivae_toy_options* opt, mivae_toy_result* out) {
  MIVAE_REQUIRE(opt);
  return guarded([&] {
    mivae::ToyMiOptions o;
    if (opt->kind) o.kind = mivae::toy_kind_from_string(opt->kind);
    o.k = opt->k;
    o.epsilon = opt->epsilon;
    o.mi.budget = opt->budget;
    o.mi.seed = opt->seed;
    if (opt->output_dir) o.output_dir = opt->output_dir;
    const mivae::ToyMiOutcome r = mivae::cmd_toy_mi(o);
    if (out) *out = {r.exact, r.report.lower.value, r.report.lower.se, r.report.upper.value};
  });
}

}  // extern "C"
