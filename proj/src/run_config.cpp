// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/run_config.hpp"

#include "mivae/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mivae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const std::string t = trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ContractError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ContractError("config: '" + key + "' expects true/false, got '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  const std::string t = trim(v);
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string to_string(TauDecay d) { return d == TauDecay::linear ? "linear" : "exponential"; }

TauDecay tau_decay_from_string(const std::string& s) {
  if (s == "exponential") return TauDecay::exponential;
  if (s == "linear") return TauDecay::linear;
  throw ContractError("config: unknown tau decay '" + s + "'");
}

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define MIVAE_NUM(KEY, HELP, EXPR, TYPE)                                                          \
  Field {                                                                                         \
    KEY, HELP, [](const RunConfig& c) { return num_str(c.EXPR); },                               \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<TYPE>(KEY, v); }          \
  }

template <class T>
std::string num_str(T v) {
  if constexpr (std::is_floating_point_v<T>)
    return fmt(v);
  else
    return std::to_string(v);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"data.dir", "directory of the IDX files (empty = $MIVAE_DATA_DIR)",
       [](const RunConfig& c) { return c.data.dir; }, [](RunConfig& c, const std::string& v) { c.data.dir = v; }},
      {"data.images", "image IDX file name", [](const RunConfig& c) { return c.data.images; },
       [](RunConfig& c, const std::string& v) { c.data.images = v; }},
      {"data.labels", "label IDX file name (empty = unlabelled)", [](const RunConfig& c) { return c.data.labels; },
       [](RunConfig& c, const std::string& v) { c.data.labels = v; }},
      MIVAE_NUM("data.train_count", "leading rows used for training (0 = all but the test block)", data.train_count,
                long),
      MIVAE_NUM("data.test_count", "trailing rows held out for evaluation", data.test_count, long),
      {"data.binarize", "none | threshold | stochastic",
       [](const RunConfig& c) { return to_string(c.data.binarization.mode); },
       [](RunConfig& c, const std::string& v) { c.data.binarization.mode = binarize_mode_from_string(v); }},
      MIVAE_NUM("data.threshold", "binarization threshold", data.binarization.threshold, double),
      MIVAE_NUM("data.binarize_seed", "seed of stochastic binarization", data.binarization.seed, std::uint64_t),

      MIVAE_NUM("model.gaussian_dim", "Gaussian latent dimensions", layout.gaussian_dim, std::size_t),
      MIVAE_NUM("model.categorical_k", "categories of the discrete latent (0 = none)", layout.categorical_k,
                std::size_t),
      {"model.mi_target", "'categorical' or comma-separated Gaussian indices",
       [](const RunConfig& c) { return to_string(c.layout.mi_target); },
       [](RunConfig& c, const std::string& v) { c.layout.mi_target = mi_target_from_string(trim(v)); }},
      {"model.encoder_hidden", "encoder hidden widths", [](const RunConfig& c) { return join(c.arch.encoder_hidden); },
       [](RunConfig& c, const std::string& v) { c.arch.encoder_hidden = parse_list<Index>("model.encoder_hidden", v); }},
      {"model.decoder_hidden", "decoder hidden widths", [](const RunConfig& c) { return join(c.arch.decoder_hidden); },
       [](RunConfig& c, const std::string& v) { c.arch.decoder_hidden = parse_list<Index>("model.decoder_hidden", v); }},
      {"model.aux_hidden", "auxiliary network hidden widths",
       [](const RunConfig& c) { return join(c.arch.aux_hidden); },
       [](RunConfig& c, const std::string& v) {
         c.arch.aux_hidden = parse_list<Index>("model.aux_hidden", v);
         c.eval.mi.aux_hidden = c.arch.aux_hidden;
       }},
      {"model.activation", "hidden activation: identity | tanh | relu | sigmoid | softplus",
       [](const RunConfig& c) { return to_string(c.arch.hidden_activation); },
       [](RunConfig& c, const std::string& v) {
         c.arch.hidden_activation = activation_from_string(trim(v));
         c.eval.mi.hidden_activation = c.arch.hidden_activation;
       }},

      {"objective.variant", "elbo | beta | capacity",
       [](const RunConfig& c) { return to_string(c.train.objective.variant); },
       [](RunConfig& c, const std::string& v) { c.train.objective.variant = objective_variant_from_string(trim(v)); }},
      MIVAE_NUM("objective.beta", "KL weight of the beta variant", train.objective.beta, double),
      MIVAE_NUM("objective.gamma", "weight of the capacity penalty", train.objective.gamma, double),
      MIVAE_NUM("objective.capacity", "KL capacity target C (nats)", train.objective.capacity, double),
      MIVAE_NUM("objective.lambda", "weight of the MI regularizer (0 disables it)", train.objective.lambda, double),
      MIVAE_NUM("objective.mc_samples", "latent samples per data point", train.objective.mc_samples, int),

      MIVAE_NUM("train.epochs", "passes over the training data", train.epochs, int),
      MIVAE_NUM("train.batch_size", "minibatch size", train.batch_size, int),
      MIVAE_NUM("train.seed", "run seed", train.seed, std::uint64_t),
      MIVAE_NUM("train.lr", "VAE learning rate", train.vae_optimizer.learning_rate, double),
      MIVAE_NUM("train.aux_lr", "auxiliary network learning rate", train.aux_optimizer.learning_rate, double),
      MIVAE_NUM("train.beta1", "Adam first-moment decay (both optimizers)", train.vae_optimizer.beta1, double),
      MIVAE_NUM("train.beta2", "Adam second-moment decay (both optimizers)", train.vae_optimizer.beta2, double),
      MIVAE_NUM("train.tau_start", "Gumbel-softmax temperature at the first step", train.tau.start, double),
      MIVAE_NUM("train.tau_end", "Gumbel-softmax temperature at the last step", train.tau.end, double),
      {"train.tau_decay", "exponential | linear", [](const RunConfig& c) { return to_string(c.train.tau.decay); },
       [](RunConfig& c, const std::string& v) { c.train.tau.decay = tau_decay_from_string(trim(v)); }},
      MIVAE_NUM("train.q_steps", "auxiliary updates per batch", train.q_steps_per_batch, int),
      MIVAE_NUM("train.eval_every", "metrics CSV row every N steps", train.eval_every, int),
      MIVAE_NUM("train.clip_norm", "global gradient-norm clip (0 = off)", train.clip_norm, double),
      {"train.train_aux", "train the auxiliary network alongside the VAE",
       [](const RunConfig& c) { return std::string(c.train.train_aux ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.train.train_aux = parse_bool("train.train_aux", v); }},
      MIVAE_NUM("train.checkpoint_every", "epoch checkpoint period (0 = final only)", train.checkpoint_every, int),

      MIVAE_NUM("eval.budget", "fresh-Q training steps for the MI lower bound", eval.mi.budget, int),
      MIVAE_NUM("eval.batch_size", "fresh-Q minibatch size", eval.mi.batch_size, int),
      MIVAE_NUM("eval.passes", "evaluation passes for the SE", eval.mi.eval_passes, int),
      MIVAE_NUM("eval.tau", "temperature of the relaxed categorical during evaluation", eval.mi.tau, double),
      MIVAE_NUM("eval.seed", "evaluation seed", eval.mi.seed, std::uint64_t),
      MIVAE_NUM("eval.lr", "fresh-Q learning rate", eval.mi.optimizer.learning_rate, double),
      MIVAE_NUM("eval.histogram_bins", "bins of the probability histogram", eval.histogram_bins, int),
      {"eval.checkpoint", "checkpoint to evaluate (empty = <output>/ckpt_final.bin)",
       [](const RunConfig& c) { return c.eval.checkpoint; },
       [](RunConfig& c, const std::string& v) { c.eval.checkpoint = trim(v); }},

      {"traverse.indices", "one or two Gaussian indices to sweep",
       [](const RunConfig& c) { return join(c.traverse.indices); },
       [](RunConfig& c, const std::string& v) { c.traverse.indices = parse_list<std::size_t>("traverse.indices", v); }},
      MIVAE_NUM("traverse.low", "sweep start", traverse.low, double),
      MIVAE_NUM("traverse.high", "sweep end", traverse.high, double),
      MIVAE_NUM("traverse.steps", "values per swept index", traverse.steps, int),
      MIVAE_NUM("traverse.anchor", "row of the anchor sample in the test block", traverse.anchor, long),
      {"traverse.cat_anchors", "anchor rows for the categorical traversal",
       [](const RunConfig& c) { return join(c.traverse.cat_anchors); },
       [](RunConfig& c, const std::string& v) { c.traverse.cat_anchors = parse_list<long>("traverse.cat_anchors", v); }},

      {"output.dir", "output directory", [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); }},
  };
  return f;
}

#undef MIVAE_NUM

const Field& find_field(const std::string& key) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const Field& f : fields()) m[f.key] = &f;
    return m;
  }();
  const auto it = index.find(key);
  if (it == index.end()) throw ContractError("config: unknown key '" + key + "'");
  return *it->second;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  find_field(key).set(*this, value);
  if (key == "train.beta1") train.aux_optimizer.beta1 = train.vae_optimizer.beta1;
  if (key == "train.beta2") train.aux_optimizer.beta2 = train.vae_optimizer.beta2;
}

std::string RunConfig::get(const std::string& key) const { return find_field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

std::string RunConfig::describe(const std::string& key) { return find_field(key).help; }

void RunConfig::validate() const {
  layout.validate();
  train.validate();
  if (data.train_count < 0 || data.test_count < 0) throw ContractError("config: data counts must be >= 0");
  if (eval.histogram_bins < 1) throw ContractError("config: eval.histogram_bins must be >= 1");
  if (traverse.steps < 1) throw ContractError("config: traverse.steps must be >= 1");
  if (traverse.indices.empty() || traverse.indices.size() > 2)
    throw ContractError("config: traverse.indices must name one or two indices");
  if (output_dir.empty()) throw ContractError("config: output.dir must not be empty");
}

std::string RunConfig::to_text() const {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string sec = f.key.substr(0, f.key.find('.'));
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(sec.size() + 1) + " = " + f.get(*this) + "\n";
  }
  return out;
}

void apply_run_config(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ContractError("config line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ContractError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      cfg.set(key, trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw ContractError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  apply_run_config(cfg, text);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace mivae
