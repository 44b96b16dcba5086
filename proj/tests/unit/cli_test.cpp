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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "llmda/dataset.hpp"
#include "llmda/error.hpp"
#include "llmda_cli/cli.hpp"
#include "llmda_cli/config.hpp"
#include "test_support.hpp"

namespace llmda::cli {
namespace {

using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
  json out_json() const { return json::parse(out); }
  json err_json() const { return json::parse(err); }
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "llmda");
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) {
  return json::parse(testing::read_file(p));
}

// Small model settings for fast end-to-end runs.
std::vector<std::string> fast_flags(const testing::TempDir& dir) {
  return {"--out",    dir.path().string(), "--dataset",
          testing::fixture("synthetic64.jsonl").string(),
          "--dim",    "16",                "--num_heads", "2",
          "--epochs", "40",                "--learning_rate", "0.01",
          "--dropout", "0.1",              "--max_tokens", "64"};
}

std::vector<std::string> cmd(const std::string& name, std::vector<std::string> flags) {
  flags.insert(flags.begin(), name);
  return flags;
}

TEST(ConfigTest, DefaultsResolve) {
  RunConfig c = resolve_config(default_config());
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.hp.dim, 256);
  EXPECT_EQ(c.embedder.dim, 256);
  EXPECT_EQ(c.checkpoint, std::filesystem::path("out") / "model.ckpt");
  EXPECT_EQ(c.explainer.cache_dir, std::filesystem::path("out") / "explain_cache");
  EXPECT_EQ(c.ablate_flags.size(), 4u);
}

TEST(ConfigTest, OverrideResolution) {
  json t = default_config();
  apply_override(t, "epochs", "7");
  apply_override(t, "train.threshold", "0.25");
  apply_override(t, "model_name", "gpt-x");
  apply_override(t, "flags", "no_sbcl,no_ptformer");
  RunConfig c = resolve_config(t);
  EXPECT_EQ(c.hp.epochs, 7);
  EXPECT_EQ(c.train.threshold, 0.25);
  EXPECT_EQ(c.explainer.model_name, "gpt-x");
  ASSERT_EQ(c.ablate_flags.size(), 2u);
  EXPECT_TRUE(c.ablate_flags[0].no_sbcl);
  EXPECT_THROW(apply_override(t, "split", "x"), ConfigError);  // object, not a leaf
  EXPECT_THROW(apply_override(t, "nonexistent", "1"), ConfigError);
  EXPECT_THROW(apply_override(t, "epochs", "many"), ConfigError);
}

TEST(ConfigTest, SeedOverridesEverySeed) {
  json t = default_config();
  apply_override(t, "seed", "99");
  RunConfig c = resolve_config(t);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.hp.seed, 99u);
  EXPECT_EQ(c.embedder.seed, derive_seed(99, "embedder"));
}

TEST(ConfigTest, InvalidValuesAreConfigErrors) {
  json t = default_config();
  t["split"]["train"] = 0.9;
  EXPECT_THROW(resolve_config(t), ConfigError);
  t = default_config();
  t["hyperparams"]["num_heads"] = 3;
  EXPECT_THROW(resolve_config(t), ConfigError);
  t = default_config();
  EXPECT_THROW(merge_config(t, json{{"hyperparams", {{"lr", 1}}}}), ConfigError);
}

TEST(CliTest, UnknownCommandAndOptionAreConfigErrors) {
  Outcome a = invoke({"frobnicate"});
  EXPECT_EQ(a.code, kExitConfig);
  Outcome b = invoke({"ingest", "--no_such_key", "1"});
  EXPECT_EQ(b.code, kExitConfig);
  EXPECT_EQ(b.err_json()["error"], "ConfigError");
  Outcome c = invoke({"train", "--epochs", "0"});
  EXPECT_EQ(c.code, kExitConfig);
}

TEST(CliTest, MissingDatasetIsConfigError) {
  testing::TempDir dir;
  Outcome r = invoke({"ingest", "--out", dir.path().string()});
  EXPECT_EQ(r.code, kExitConfig);
  Outcome s = invoke({"ingest", "--out", dir.path().string(), "--dataset",
                      (dir.path() / "nope.jsonl").string()});
  EXPECT_NE(s.code, kExitOk);
}

TEST(CliTest, EvalWithoutCheckpointNamesThePath) {
  testing::TempDir dir;
  auto flags = fast_flags(dir);
  Outcome r = invoke(cmd("eval", flags));
  ASSERT_EQ(r.code, kExitFailure) << r.err;
  json e = r.err_json();
  EXPECT_EQ(e["error"], "MissingArtifact");
  EXPECT_EQ(e["path"], (dir.path() / "model.ckpt").string());
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "metrics.json"));
}

TEST(CliTest, EndToEndPipeline) {
  testing::TempDir dir;
  auto flags = fast_flags(dir);
  flags.insert(flags.end(), {"--seed", "1234"});
  const std::string dataset = testing::read_file(testing::fixture("synthetic64.jsonl"));

  Outcome ingest = invoke(cmd("ingest", flags));
  ASSERT_EQ(ingest.code, kExitOk) << ingest.err;
  json summary = read_json(dir.path() / "dataset_summary.json");
  EXPECT_EQ(summary["classes"]["security"], 32);
  EXPECT_EQ(summary["classes"]["non_security"], 32);
  EXPECT_EQ(summary["seed"], 1234);

  Outcome explain = invoke(cmd("explain", flags));
  ASSERT_EQ(explain.code, kExitOk) << explain.err;
  EXPECT_EQ(explain.out_json()["cache_misses"], 64);
  EXPECT_EQ(explain.out_json()["seed"], 1234);
  Outcome again = invoke(cmd("explain", flags));
  EXPECT_EQ(again.out_json()["cache_hits"], 64);
  auto augmented = load_dataset(dir.path() / "augmented.jsonl");
  ASSERT_EQ(augmented.size(), 64u);
  for (const auto& s : augmented) EXPECT_TRUE(s.explanation().has_value());

  Outcome train1 = invoke(cmd("train", flags));
  ASSERT_EQ(train1.code, kExitOk) << train1.err;
  const std::string log1 = testing::read_file(dir.path() / "run_log.jsonl");
  const std::string ckpt1 = testing::read_file(dir.path() / "model.ckpt");
  std::istringstream lines(log1);
  std::string line;
  int epochs = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(json::parse(line)["seed"], 1234);
    ++epochs;
  }
  EXPECT_EQ(epochs, 40);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoints" / "best.json"));

  Outcome train2 = invoke(cmd("train", flags));
  ASSERT_EQ(train2.code, kExitOk) << train2.err;
  EXPECT_EQ(testing::read_file(dir.path() / "run_log.jsonl"), log1);
  EXPECT_EQ(testing::read_file(dir.path() / "model.ckpt"), ckpt1);

  auto eval_flags = flags;
  eval_flags.insert(eval_flags.end(), {"--eval.split", "train"});
  Outcome eval = invoke(cmd("eval", eval_flags));
  ASSERT_EQ(eval.code, kExitOk) << eval.err;
  json metrics = read_json(dir.path() / "metrics.json");
  EXPECT_EQ(metrics["split"], "train");
  EXPECT_EQ(metrics["seed"], 1234);
  EXPECT_GE(metrics["metrics"]["f1"].get<double>(), 95.0);

  auto predict_flags = flags;
  predict_flags.insert(predict_flags.end(), {"--record", "sec-03"});
  Outcome pred = invoke(cmd("predict", predict_flags));
  ASSERT_EQ(pred.code, kExitOk) << pred.err;
  EXPECT_EQ(pred.out_json()["id"], "sec-03");
  EXPECT_EQ(pred.out_json()["seed"], 1234);
  double p = pred.out_json()["probability"];
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);

  auto diff_flags = flags;
  diff_flags.insert(diff_flags.end(),
                    {"--diff", testing::fixture("sock_fasync.diff").string()});
  Outcome diff = invoke(cmd("predict", diff_flags));
  ASSERT_EQ(diff.code, kExitOk) << diff.err;
  EXPECT_EQ(diff.out_json()["id"], "sock_fasync.diff");

  Outcome vis = invoke(cmd("visualize", flags));
  ASSERT_EQ(vis.code, kExitOk) << vis.err;
  std::istringstream csv(testing::read_file(dir.path() / "pca.csv"));
  std::getline(csv, line);
  EXPECT_EQ(line, "sample_id,pc1,pc2,label");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 64);
  EXPECT_EQ(read_json(dir.path() / "pca_meta.json")["seed"], 1234);

  // Inputs are never modified.
  EXPECT_EQ(testing::read_file(testing::fixture("synthetic64.jsonl")), dataset);
}

TEST(CliTest, AblateWritesTable) {
  testing::TempDir dir;
  auto flags = fast_flags(dir);
  flags.insert(flags.end(), {"--epochs", "2", "--flags", "no_sbcl,no_ptformer"});
  Outcome r = invoke(cmd("ablate", flags));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json table = read_json(dir.path() / "ablation.json");
  EXPECT_EQ(table["seed"], 42);
  ASSERT_EQ(table["rows"].size(), 3u);
  EXPECT_EQ(table["rows"][0]["name"], "full");
  for (const auto& rec : table["rows"][1]["run_log"]) EXPECT_EQ(rec["L_SBCL"], 0.0);
  EXPECT_EQ(table["rows"][2]["fused_dim"], 48);
}

TEST(CliTest, ConfigFileWithFlagOverride) {
  testing::TempDir dir;
  std::ofstream(dir.path() / "cfg.json") << json{
      {"dataset", testing::fixture("three_samples.jsonl").string()},
      {"out", (dir.path() / "run").string()},
      {"hyperparams", {{"seed", 5}}}}
                                         .dump();
  Outcome r = invoke({"ingest", "--config", (dir.path() / "cfg.json").string(), "--seed", "6"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_json(dir.path() / "run" / "dataset_summary.json")["seed"], 6);
  Outcome bad = invoke({"ingest", "--config", (dir.path() / "missing.json").string()});
  EXPECT_EQ(bad.code, kExitConfig);
}

}  // namespace
}  // namespace llmda::cli
