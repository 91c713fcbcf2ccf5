// Copyright 2026 The regionedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cli.hpp"
#include "redit/checkpoint.hpp"
#include "redit/dataset.hpp"
#include "redit/digest.hpp"
#include "redit/image_io.hpp"
#include "test_util.hpp"

using namespace redit;
using redit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "redit_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string cli_stdout(const std::vector<std::string>& args, int* code) {
  ::testing::internal::CaptureStdout();
  *code = run_cli(args);
  return ::testing::internal::GetCapturedStdout();
}

std::string slurp(const std::string& path) {
  const auto b = read_file_bytes(path);
  return {b.begin(), b.end()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// synth -> describe(mock) -> fusion1 -> global, shared by the editor tests.
class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    manifest = dir.str("corpus/manifest.jsonl");
    ASSERT_EQ(run_cli({"synth", "--n", "6", "--seed", "3", "--out", dir.str("corpus")}), 0);
    ASSERT_EQ(run_cli({"describe", "--manifest", manifest, "--mock"}), 0);
    ASSERT_EQ(run_cli({"train", "--phase", "fusion1", "--manifest", manifest, "--out", dir.str("f1"), "--steps", "20"}), 0);
    ASSERT_EQ(run_cli({"train", "--phase", "global", "--manifest", manifest, "--init", dir.str("f1/checkpoint.rdck"),
                   "--out", dir.str("g"), "--steps", "20"}),
              0);
  }
  TempDir dir{"redit_cli"};
  std::string manifest;
};

}  // namespace

TEST(CliSynth, DeterministicAndValidated) {
  TempDir dir;
  EXPECT_EQ(run_cli({"synth", "--n", "0", "--out", dir.str("z")}), 2);
  EXPECT_EQ(run_cli({"synth", "--out", dir.str("z")}), 2);
  EXPECT_EQ(run_cli({"synth", "--n", "4", "--bogus", "--out", dir.str("z")}), 2);
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"synth", "--n", "8", "--seed", "7", "--out", dir.str("a")}), 0);
  EXPECT_EQ(run_cli({"synth", "--n", "8", "--seed", "7", "--out", dir.str("b")}), 0);
  EXPECT_EQ(slurp(dir.str("a/manifest.jsonl")), slurp(dir.str("b/manifest.jsonl")));
  const auto m = data::load_manifest(dir.str("a/manifest.jsonl"));
  EXPECT_EQ(m.records.size(), 8u);
  EXPECT_TRUE(m.skipped.empty());
  EXPECT_TRUE(fs::exists(dir.str("a/synth.config.json")));

  // Same config may rerun in place; a different one may not share the directory.
  EXPECT_EQ(run_cli({"synth", "--n", "8", "--seed", "7", "--out", dir.str("a")}), 0);
  EXPECT_EQ(run_cli({"synth", "--n", "8", "--seed", "8", "--out", dir.str("a")}), 1);
  EXPECT_EQ(slurp(dir.str("a/manifest.jsonl")), slurp(dir.str("b/manifest.jsonl")));
}

TEST(CliDescribe, MockFillsRecordsAndSecondRunHitsCache) {
  TempDir dir;
  ASSERT_EQ(run_cli({"synth", "--n", "5", "--seed", "1", "--out", dir.str("c")}), 0);
  const std::string manifest = dir.str("c/manifest.jsonl");
  EXPECT_EQ(run_cli({"describe", "--manifest", manifest}), 2);

  int code = -1;
  auto out = cli_stdout({"describe", "--manifest", manifest, "--mock", "--out", dir.str("c/described.jsonl")}, &code);
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("0 cache hits, 5 misses"), std::string::npos) << out;
  const auto m = data::load_manifest(dir.str("c/described.jsonl"));
  ASSERT_EQ(m.records.size(), 5u);
  for (const auto& r : m.records) EXPECT_NE(r.full_description.find("Regarding the edit"), std::string::npos);

  out = cli_stdout({"describe", "--manifest", manifest, "--mock", "--out", dir.str("c/described.jsonl")}, &code);
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("5 cache hits, 0 misses"), std::string::npos) << out;

  // Another backend into the same directory is a different configuration.
  EXPECT_EQ(run_cli({"describe", "--manifest", manifest, "--mock", "--mock-seed", "4"}), 1);
}

TEST(CliDescribe, UnreachableBackendFails) {
  TempDir dir;
  ASSERT_EQ(run_cli({"synth", "--n", "2", "--seed", "1", "--out", dir.str("c")}), 0);
  write_text(dir.str("cfg.json"), R"({"backend": {"timeout_seconds": 0.5, "max_retries": 0}})");
  ::setenv("REDIT_VLM_URL", "http://127.0.0.1:1/describe", 1);
  EXPECT_EQ(run_cli({"describe", "--manifest", dir.str("c/manifest.jsonl"), "--config", dir.str("cfg.json")}), 1);
  ::unsetenv("REDIT_VLM_URL");
  EXPECT_EQ(run_cli({"describe", "--manifest", dir.str("c/manifest.jsonl"), "--config", dir.str("cfg.json"),
                 "--backend-url", "ftp://nowhere"}),
            1);
}

TEST(CliConfig, UnknownKeysAreUsageErrors) {
  TempDir dir;
  ASSERT_EQ(run_cli({"synth", "--n", "2", "--seed", "1", "--out", dir.str("c")}), 0);
  const std::string manifest = dir.str("c/manifest.jsonl");
  for (const char* doc : {R"({"sed": 1})", R"({"model": {"embed_dimm": 8}})", R"({"train": {"fusion3": {}}})",
                          R"({"train": {"editor": {"lr": 1}}})", R"({"backend": {"uri": "x"}})", "not json"}) {
    write_text(dir.str("cfg.json"), doc);
    EXPECT_EQ(run_cli({"train", "--phase", "fusion1", "--manifest", manifest, "--out", dir.str("t"), "--config",
                   dir.str("cfg.json")}),
              2)
        << doc;
  }
  write_text(dir.str("cfg.json"), R"({"train": {"fusion_phase1": {"steps": 3}}})");
  ASSERT_EQ(run_cli({"train", "--phase", "fusion1", "--manifest", manifest, "--out", dir.str("t"), "--config",
                 dir.str("cfg.json")}),
            0);
  EXPECT_EQ(train::load_checkpoint(dir.str("t/checkpoint.rdck")).metrics_log.size(), 3u);
  const auto echo = nlohmann::json::parse(slurp(dir.str("t/train.config.json")));
  EXPECT_EQ(echo.at("train").at("steps"), 3);
  EXPECT_EQ(run_cli({"train", "--phase", "fusion1", "--manifest", manifest, "--out", dir.str("t"), "--steps", "4"}), 1);
}

TEST_F(CliPipeline, TrainPrerequisitesAndAblationLog) {
  EXPECT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--out", dir.str("e0")}), 2);
  EXPECT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--init", dir.str("f1/checkpoint.rdck"),
                 "--out", dir.str("e1")}),
            1);
  EXPECT_EQ(run_cli({"train", "--phase", "fusion1", "--manifest", manifest, "--ablate", "no-region", "--out", dir.str("x")}),
            2);
  ASSERT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--init", dir.str("g/checkpoint.rdck"),
                 "--ablate", "no-region", "no-global", "--steps", "5", "--out", dir.str("e2")}),
            0);
  const auto log = train::read_metrics_csv(dir.str("e2/metrics.csv"));
  ASSERT_EQ(log.size(), 5u);
  for (const auto& row : log) {
    EXPECT_EQ(row.get("loss_region"), 0.0);
    EXPECT_EQ(row.get("loss_global"), 0.0);
  }
}

TEST_F(CliPipeline, ResumeContinuesStepNumbering) {
  const std::string init = dir.str("g/checkpoint.rdck");
  ASSERT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--init", init, "--steps", "3", "--out",
                 dir.str("part")}),
            0);
  ASSERT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--resume", dir.str("part/checkpoint.rdck"),
                 "--steps", "6", "--out", dir.str("rest")}),
            0);
  ASSERT_EQ(run_cli({"train", "--phase", "editor", "--manifest", manifest, "--init", init, "--steps", "6", "--out",
                 dir.str("whole")}),
            0);
  const auto rest = train::read_metrics_csv(dir.str("rest/metrics.csv"));
  ASSERT_EQ(rest.size(), 6u);
  for (std::size_t i = 0; i < rest.size(); ++i) EXPECT_EQ(rest[i].step, i + 1);
  EXPECT_EQ(rest, train::read_metrics_csv(dir.str("whole/metrics.csv")));
  EXPECT_EQ(train::load_checkpoint(dir.str("rest/checkpoint.rdck")).parameters,
            train::load_checkpoint(dir.str("whole/checkpoint.rdck")).parameters);
}

TEST_F(CliPipeline, EditZeroStepsSeedsAndOracle) {
  const auto m = data::load_manifest(manifest);
  const auto& r = m.records[0];
  const std::string src = r.resolve(r.source_image).string(), tgt = r.resolve(r.target_image).string();
  const std::string ck = dir.str("g/checkpoint.rdck");
  const std::vector<std::string> base = {"edit", "--checkpoint", ck, "--image", src, "--instruction", r.instruction};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(run_cli(with({"--steps", "0", "--out", dir.str("zero.ppm")})), 0);
  EXPECT_EQ(slurp(dir.str("zero.ppm")), slurp(src));
  ASSERT_EQ(run_cli(with({"--steps", "20", "--edit-seed", "5", "--out", dir.str("a.ppm")})), 0);
  ASSERT_EQ(run_cli(with({"--steps", "20", "--edit-seed", "5", "--out", dir.str("b.ppm")})), 0);
  EXPECT_EQ(sha256_file(dir.str("a.ppm")), sha256_file(dir.str("b.ppm")));
  EXPECT_EQ(run_cli(with({"--steps", "51", "--out", dir.str("c.ppm")})), 1);
  EXPECT_EQ(run_cli({"edit", "--image", src, "--instruction", "x", "--out", dir.str("d.ppm")}), 2);

  ASSERT_EQ(run_cli({"edit", "--oracle-target", tgt, "--image", src, "--instruction", r.instruction, "--out",
                 dir.str("oracle.ppm")}),
            0);
  const Tensor out = data::read_image(dir.str("oracle.ppm")), want = data::read_image(tgt);
  double mae = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) mae += std::abs(out[i] - want[i]);
  EXPECT_LT(mae / static_cast<double>(out.size()), 1e-2);

  // Schedule in --config must agree with the checkpoint.
  write_text(dir.str("cfg.json"), R"({"model": {"schedule": {"steps": 40}}})");
  EXPECT_EQ(run_cli(with({"--config", dir.str("cfg.json"), "--out", dir.str("e.ppm")})), 1);
}

TEST_F(CliPipeline, EvalPerfectEditsAndCountMismatch) {
  const auto m = data::load_manifest(manifest);
  fs::create_directories(dir.path() / "perfect");
  for (const auto& r : m.records) fs::copy_file(r.resolve(r.target_image), dir.path() / "perfect" / (r.id + ".ppm"));
  const std::string ck = dir.str("g/checkpoint.rdck");
  ASSERT_EQ(run_cli({"eval", "--manifest", manifest, "--edited", dir.str("perfect"), "--checkpoint", ck, "--out",
                 dir.str("rep")}),
            0);
  const auto report = nlohmann::json::parse(slurp(dir.str("rep/report.json")));
  for (const char* key : {"clip_i", "clip_t", "clip_t_instruction", "clip_t_description", "dino", "lpips_like", "fid",
                          "is_score", "n_samples", "config_digest"})
    EXPECT_TRUE(report.contains(key)) << key;
  EXPECT_NEAR(report.at("fid").get<double>(), 0.0, 1e-6);
  EXPECT_EQ(report.at("lpips_like").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir.str("rep/report.txt")));
  EXPECT_EQ(slurp(dir.str("rep/plot.csv")).substr(0, 10), "step,loss_");
  EXPECT_EQ(train::read_metrics_csv(dir.str("rep/plot.csv")).size(), 20u);

  fs::remove(dir.path() / "perfect" / (m.records[0].id + ".ppm"));
  EXPECT_EQ(run_cli({"eval", "--manifest", manifest, "--edited", dir.str("perfect"), "--checkpoint", ck, "--out",
                 dir.str("rep2")}),
            1);
}

TEST_F(CliPipeline, BatchEditFeedsEval) {
  const std::string ck = dir.str("g/checkpoint.rdck");
  ASSERT_EQ(run_cli({"edit", "--checkpoint", ck, "--manifest", manifest, "--steps", "10", "--out", dir.str("edits")}), 0);
  ASSERT_EQ(run_cli({"edit", "--oracle", "--checkpoint", ck, "--manifest", manifest, "--use-masks", "--out",
                 dir.str("oracle")}),
            0);
  ASSERT_EQ(run_cli({"eval", "--manifest", manifest, "--edited", dir.str("edits"), "--checkpoint", ck, "--out",
                 dir.str("r1")}),
            0);
  ASSERT_EQ(run_cli({"eval", "--manifest", manifest, "--edited", dir.str("oracle"), "--checkpoint", ck, "--out",
                 dir.str("r2")}),
            0);
  const auto noisy = nlohmann::json::parse(slurp(dir.str("r1/report.json")));
  const auto oracle = nlohmann::json::parse(slurp(dir.str("r2/report.json")));
  EXPECT_LT(oracle.at("lpips_like").get<double>(), noisy.at("lpips_like").get<double>());
}
