// Copyright 2026 The llmda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "llmda_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "llmda/error.hpp"
#include "llmda/random.hpp"

namespace llmda::cli {

using nlohmann::json;

json default_config() {
  ExplainerConfig explainer;
  json ex = to_json(explainer);
  ex["cache_dir"] = nullptr;  // <out>/explain_cache
  return {
      {"dataset", nullptr},
      {"out", "out"},
      {"seed", nullptr},
      {"checkpoint", nullptr},
      {"split",
       {{"train", 0.8}, {"validation", 0.1}, {"test", 0.1}, {"stratify", true}}},
      {"explainer", ex},
      {"embedder",
       {{"kind", "hashed_projection"},
        {"dim", nullptr},
        {"seed", nullptr},
        {"source_path", nullptr}}},
      {"hyperparams", to_json(default_hyperparams())},
      {"train",
       {{"anchor_mode", "all"},
        {"loss_blend", "sum"},
        {"ablation", "full"},
        {"threshold", 0.5},
        {"ff_hidden", 0},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"eps", 1e-8}}},
      {"eval", {{"split", "test"}, {"runs", 1}, {"test_dataset", nullptr}}},
      {"predict", {{"diff", nullptr}, {"record", nullptr}}},
      {"visualize", {{"split", "all"}, {"components", 2}}},
      {"ablate",
       {{"flags",
         {"no_explanation", "no_instruction", "no_ptformer", "no_sbcl"}}}},
  };
}

namespace {

void merge_at(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) {
    throw ConfigError("config " + (prefix.empty() ? "root" : "'" + prefix + "'") +
                      " must be an object");
  }
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_at(slot, value, path);
    } else {
      slot = value;
    }
  }
}

void collect_leaves(const json& node, const std::string& prefix,
                    const std::string& name, std::vector<std::string>& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_leaves(value, path, name, out);
    } else if (key == name) {
      out.push_back(path);
    }
  }
}

json* find_path(json& tree, const std::string& dotted) {
  json* node = &tree;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
  }
  return node;
}

std::string resolve_key(json& tree, const std::string& key) {
  if (key.find('.') != std::string::npos) {
    json* slot = find_path(tree, key);
    if (slot == nullptr || slot->is_object()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    return key;
  }
  if (tree.contains(key) && !tree[key].is_object()) return key;
  if (tree["hyperparams"].contains(key)) return "hyperparams." + key;
  std::vector<std::string> matches;
  collect_leaves(tree, "", key, matches);
  if (matches.size() == 1) return matches.front();
  if (matches.empty()) throw ConfigError("unknown option '--" + key + "'");
  std::string list;
  for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m;
  throw ConfigError("option '--" + key + "' is ambiguous; use one of: " + list);
}

}  // namespace

void merge_config(json& base, const json& user) { merge_at(base, user, ""); }

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

void apply_override(json& tree, const std::string& key, const std::string& value) {
  const std::string path = resolve_key(tree, key);
  json& slot = *find_path(tree, path);
  if (slot.is_string() || slot.is_null()) {
    slot = value;
    return;
  }
  if (slot.is_array()) {
    json parsed = json::parse(value, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) {
      slot = parsed;
      return;
    }
    slot = json::array();
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) slot.push_back(part);
    }
    return;
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) {
    throw ConfigError("option '--" + key + "' expects a " +
                      std::string(slot.type_name()) + ", got '" + value + "'");
  }
  slot = parsed;
}

namespace {

template <typename T>
T get(const json& tree, const std::string& path) {
  const json* node = &tree;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) node = &node->at(part);
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + path + "' has type " +
                      std::string(node->type_name()));
  }
}

std::optional<std::string> get_opt_string(const json& tree, const std::string& path) {
  const json* node = &tree;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) node = &node->at(part);
  if (node->is_null()) return std::nullopt;
  if (!node->is_string()) throw ConfigError("config key '" + path + "' must be a string");
  std::string s = node->get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

std::uint64_t parse_seed(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    try {
      std::size_t used = 0;
      auto v = std::stoull(s, &used);
      if (used == s.size() && s.find('-') == std::string::npos) return v;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("seed must be a non-negative integer, got " + j.dump());
}

void check_split_name(const std::string& name, const std::string& key,
                      bool allow_all) {
  if (name == "train" || name == "validation" || name == "test") return;
  if (allow_all && name == "all") return;
  throw ConfigError("config key '" + key + "' must be train, validation, test" +
                    std::string(allow_all ? " or all" : "") + ", got '" + name +
                    "'");
}

}  // namespace

RunConfig resolve_config(json tree) {
  RunConfig c;
  try {
    if (!tree["seed"].is_null()) {
      c.seed = parse_seed(tree["seed"]);
    } else {
      c.seed = parse_seed(tree["hyperparams"]["seed"]);
    }
    tree["seed"] = c.seed;
    tree["hyperparams"]["seed"] = c.seed;

    c.hp = hyperparams_from_json(tree["hyperparams"]);

    c.out = get<std::string>(tree, "out");
    if (c.out.empty()) throw ConfigError("config key 'out' must not be empty");
    if (auto d = get_opt_string(tree, "dataset")) c.dataset = *d;
    c.checkpoint = get_opt_string(tree, "checkpoint").value_or(
        (c.out / "model.ckpt").string());
    tree["checkpoint"] = c.checkpoint.string();

    c.ratios = {get<double>(tree, "split.train"), get<double>(tree, "split.validation"),
                get<double>(tree, "split.test")};
    double sum = 0;
    for (double r : c.ratios) {
      if (!(r > 0)) throw ConfigError("split ratios must be positive");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    c.stratify = get<bool>(tree, "split.stratify");

    json& ex = tree["explainer"];
    if (ex["cache_dir"].is_null()) ex["cache_dir"] = (c.out / "explain_cache").string();
    c.explainer = explainer_config_from_json(ex);

    json& em = tree["embedder"];
    if (em["dim"].is_null()) em["dim"] = c.hp.dim;
    if (em["seed"].is_null()) em["seed"] = derive_seed(c.seed, "embedder");
    c.embedder = embedder_backend_from_json(em);
    if (c.embedder.dim != c.hp.dim) {
      throw ConfigError("embedder.dim " + std::to_string(c.embedder.dim) +
                        " differs from hyperparams.dim " + std::to_string(c.hp.dim));
    }
    if (c.embedder.source_path && !std::filesystem::exists(*c.embedder.source_path)) {
      throw ConfigError("embedder.source_path does not exist: " +
                        c.embedder.source_path->string());
    }

    const std::string anchor = get<std::string>(tree, "train.anchor_mode");
    if (anchor == "all") {
      c.train.anchor_mode = AnchorMode::kAll;
    } else if (anchor == "random_one") {
      c.train.anchor_mode = AnchorMode::kRandomOne;
    } else {
      throw ConfigError("train.anchor_mode must be all or random_one");
    }
    const std::string blend = get<std::string>(tree, "train.loss_blend");
    if (blend == "sum") {
      c.train.loss_blend = LossBlend::kSum;
    } else if (blend == "alpha") {
      c.train.loss_blend = LossBlend::kAlpha;
    } else {
      throw ConfigError("train.loss_blend must be sum or alpha");
    }
    c.train.ablation = parse_ablation(get<std::string>(tree, "train.ablation"));
    c.train.threshold = get<double>(tree, "train.threshold");
    c.train.ff_hidden = get<int>(tree, "train.ff_hidden");
    c.train.optimizer.beta1 = get<double>(tree, "train.beta1");
    c.train.optimizer.beta2 = get<double>(tree, "train.beta2");
    c.train.optimizer.eps = get<double>(tree, "train.eps");

    c.eval_split = get<std::string>(tree, "eval.split");
    check_split_name(c.eval_split, "eval.split", false);
    c.eval_runs = get<int>(tree, "eval.runs");
    if (c.eval_runs < 1) throw ConfigError("eval.runs must be >= 1");
    if (auto t = get_opt_string(tree, "eval.test_dataset")) c.eval_test_dataset = *t;

    if (auto d = get_opt_string(tree, "predict.diff")) c.predict_diff = *d;
    c.predict_record = get_opt_string(tree, "predict.record");

    c.visualize_split = get<std::string>(tree, "visualize.split");
    check_split_name(c.visualize_split, "visualize.split", true);
    c.visualize_components = get<int>(tree, "visualize.components");
    if (c.visualize_components < 1) {
      throw ConfigError("visualize.components must be >= 1");
    }

    for (const auto& f : tree["ablate"]["flags"]) {
      if (!f.is_string()) throw ConfigError("ablate.flags must hold strings");
      c.ablate_flags.push_back(parse_ablation(f.get<std::string>()));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  c.tree = std::move(tree);
  return c;
}

}  // namespace llmda::cli
