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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "redit/describe.hpp"
#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/image_io.hpp"
#include "redit/prompt.hpp"
#include "redit/synthetic.hpp"
#include "redit/tokenizer.hpp"
#include "redit/vlm.hpp"
#include "test_util.hpp"

using namespace redit;
using namespace redit::describe;
using redit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(REDIT_TEST_FIXTURES);

std::vector<std::string> fixture_instructions() {
  std::ifstream in(kFixtures / "instructions.json");
  return nlohmann::json::parse(in).get<std::vector<std::string>>();
}

// Marker phrases of each required block, in the order they must appear.
const std::vector<std::pair<std::string, std::string>> kMarkers = {
    {"overview", "overview of the setting"},
    {"objects", "description of each major object"},
    {"humans_animals", "If humans or animals are present"},
    {"background", "background elements: furniture"},
    {"spatial_relations", "Clear spatial relationships"},
    {"edited_region", "targeted in the editing instruction"},
    {"style", "Style Requirement"},
};

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

// Fails with the scripted errors, then answers with a fixed text.
class ScriptedClient : public VLMClient {
 public:
  explicit ScriptedClient(std::vector<BackendError> failures) : failures_(std::move(failures)) {}
  VLMResponse complete(const VLMRequest& request) override {
    last_prompt = request.prompt;
    const std::size_t k = calls++;
    if (k < failures_.size()) throw failures_[k];
    return {"a scripted description", 1, 3};
  }
  std::string backend_id() const override { return "scripted"; }

  std::atomic<std::size_t> calls{0};
  std::string last_prompt;

 private:
  std::vector<BackendError> failures_;
};

class NeverClient : public VLMClient {
 public:
  explicit NeverClient(std::string id) : id_(std::move(id)) {}
  VLMResponse complete(const VLMRequest&) override { throw std::logic_error("backend must not be called"); }
  std::string backend_id() const override { return id_; }

 private:
  std::string id_;
};

DescribeOptions fast_options() {
  DescribeOptions o;
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  o.backoff = [](std::size_t) {};
  return o;
}

std::string write_scene_target(const TempDir& dir, const data::SyntheticScene& s, const std::string& name) {
  const std::string path = dir.str(name);
  data::write_image(path, data::render_target(s));
  return path;
}

}  // namespace

TEST(Prompt, SectionsInOrderAndInstructionQuotedOnce) {
  const auto instructions = fixture_instructions();
  ASSERT_EQ(instructions.size(), 20u);
  const auto& keys = required_sections();
  ASSERT_EQ(keys.size(), kMarkers.size());
  for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_EQ(keys[i], kMarkers[i].first);

  for (const auto& instr : instructions) {
    const std::string p = build_prompt(instr);
    EXPECT_EQ(count_occurrences(p, "\"" + instr + "\""), 1u) << instr;
    std::size_t pos = 0;
    for (const auto& [key, marker] : kMarkers) {
      const auto at = p.find(marker, pos);
      ASSERT_NE(at, std::string::npos) << key << " missing or out of order for " << instr;
      pos = at + marker.size();
    }
    EXPECT_EQ(p.find("{edit_prompt}"), std::string::npos);
    EXPECT_EQ(build_prompt(instr), p);
    EXPECT_LE(encoders::split_words(p).size(), kPromptTokenCeiling);
  }
}

TEST(Prompt, TemplateKeysCoverRequiredSections) {
  const auto& sections = PromptTemplate::scene_description().sections();
  std::size_t next = 0;
  for (const auto& s : sections)
    if (next < required_sections().size() && s.key == required_sections()[next]) ++next;
  EXPECT_EQ(next, required_sections().size());
  EXPECT_EQ(PromptTemplate::scene_description().token_budget(), kDescriptionTokenBudget);
}

TEST(Prompt, EmptyInstructionAndCeiling) {
  EXPECT_THROW(build_prompt(""), ConfigError);
  EXPECT_THROW(build_prompt("  \t "), ConfigError);
  std::string huge;
  for (int i = 0; i < 1200; ++i) huge += "word ";
  EXPECT_THROW(build_prompt(huge), RangeError);
  EXPECT_THROW(PromptTemplate({{"a", "no slot"}}, 10, 100), ConfigError);
  EXPECT_THROW(PromptTemplate({{"a", "{edit_prompt} {edit_prompt}"}}, 10, 100), ConfigError);
}

TEST(Prompt, CountOccurrences) {
  EXPECT_EQ(count_occurrences("aaaa", "aa"), 2u);
  EXPECT_EQ(count_occurrences("abc", ""), 0u);
  EXPECT_EQ(count_occurrences("x\"y\"x", "\"y\""), 1u);
}

TEST(Wire, RequestAndResponseRoundTrip) {
  for (const auto& instr : fixture_instructions()) {
    const VLMRequest req{"m", build_prompt(instr), base64_encode(std::span<const std::uint8_t>())};
    EXPECT_EQ(decode_request(encode_request(req)), req);
  }
  const VLMResponse resp{"text with \"quotes\" and é", 12, 34};
  EXPECT_EQ(decode_response(encode_response(resp)), resp);
  EXPECT_EQ(decode_response(R"({"text":"x"})").text, "x");
  EXPECT_THROW(decode_request("{}"), ConfigError);
  try {
    decode_response("not json");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
}

TEST(MockVLM, DeterministicAndKeySensitive) {
  TempDir dir;
  const auto scenes = data::sample_scenes(2, 5);
  const std::string img = write_scene_target(dir, scenes[0], "a.ppm");
  const auto bytes = read_file_bytes(img);
  auto ask = [&](MockVLM& vlm, const std::vector<std::uint8_t>& b, const std::string& instr) {
    return vlm.complete({"m", build_prompt(instr), base64_encode(b)}).text;
  };
  MockVLM a(0), b(0), c(1);
  const std::string t = ask(a, bytes, "recolor the square to red");
  EXPECT_EQ(ask(b, bytes, "recolor the square to red"), t);
  EXPECT_NE(t.find("Regarding the edit \"recolor the square to red\""), std::string::npos);
  EXPECT_NE(ask(a, bytes, "remove the square"), t);
  EXPECT_NE(c.backend_id(), a.backend_id());
  const auto other = read_file_bytes(write_scene_target(dir, scenes[1], "b.ppm"));
  EXPECT_NE(ask(a, other, "recolor the square to red"), t);
  EXPECT_EQ(a.calls(), 3u);
}

TEST(MockVLM, NamesShapesAndColorsOfSyntheticTargets) {
  TempDir dir;
  const auto scenes = data::sample_scenes(40, 3);
  MockVLM vlm(0);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    const auto bytes = read_file_bytes(write_scene_target(dir, s, "t.ppm"));
    const std::string text = vlm.complete({"m", build_prompt(data::scene_instruction(s)), base64_encode(bytes)}).text;
    auto phrase = [](const data::ShapeSpec& sp, std::size_t color) {
      return std::string(data::shape_palette()[color].name) + " " + data::shape_name(sp.kind);
    };
    EXPECT_NE(text.find(phrase(s.distractor, s.distractor.color)), std::string::npos) << i << ": " << text;
    EXPECT_NE(text.find(data::background_palette()[s.background].name), std::string::npos) << i;
    if (s.op == data::EditOp::kRecolor) {
      EXPECT_NE(text.find(phrase(s.edited, s.new_color)), std::string::npos) << i << ": " << text;
    } else if (phrase(s.edited, s.edited.color) != phrase(s.distractor, s.distractor.color)) {
      const std::string scene = text.substr(0, text.find("Regarding the edit"));
      EXPECT_EQ(scene.find(phrase(s.edited, s.edited.color)), std::string::npos) << i << ": " << text;
    }
  }
}

TEST(Describe, CacheHitOnRerunAndRenameInvariance) {
  TempDir dir;
  const auto scenes = data::sample_scenes(3, 9);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < scenes.size(); ++i)
    paths.push_back(write_scene_target(dir, scenes[i], "img" + std::to_string(i) + ".ppm"));
  const std::string cache_path = dir.str("cache.jsonl");
  MockVLM vlm(0);
  std::vector<DescriptionRecord> first;
  {
    DescriptionCache cache(cache_path);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto r = redit::describe::describe(paths[i], data::scene_instruction(scenes[i]), vlm, cache, fast_options());
      EXPECT_FALSE(r.cache_hit);
      first.push_back(r.record);
    }
  }
  EXPECT_EQ(vlm.calls(), 3u);

  DescriptionCache reloaded(cache_path);
  EXPECT_EQ(reloaded.size(), 3u);
  MockVLM fresh(0);
  fs::rename(paths[0], dir.str("renamed.ppm"));
  paths[0] = dir.str("renamed.ppm");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto r = redit::describe::describe(paths[i], data::scene_instruction(scenes[i]), fresh, reloaded, fast_options());
    EXPECT_TRUE(r.cache_hit);
    EXPECT_EQ(r.record, first[i]);
  }
  EXPECT_EQ(fresh.calls(), 0u);

  // Same image, another instruction or another backend: miss.
  EXPECT_FALSE(redit::describe::describe(paths[1], "something else", fresh, reloaded, fast_options()).cache_hit);
  MockVLM other_seed(7);
  EXPECT_FALSE(redit::describe::describe(paths[1], data::scene_instruction(scenes[1]), other_seed, reloaded, fast_options()).cache_hit);
}

TEST(Describe, OnePixelChangeAltersKey) {
  TempDir dir;
  const auto s = data::sample_scenes(1, 4)[0];
  Tensor img = data::render_target(s);
  data::write_image(dir.str("a.ppm"), img);
  img[0] = img[0] > 0.5 ? 0.0 : 1.0;
  data::write_image(dir.str("b.ppm"), img);
  DescriptionCache cache;
  MockVLM vlm(0);
  const auto a = redit::describe::describe(dir.str("a.ppm"), "x", vlm, cache, fast_options());
  const auto b = redit::describe::describe(dir.str("b.ppm"), "x", vlm, cache, fast_options());
  EXPECT_FALSE(b.cache_hit);
  EXPECT_NE(a.record.image_digest, b.record.image_digest);
  EXPECT_EQ(vlm.calls(), 2u);
}

TEST(Describe, RetriesRetryableErrorsOnly) {
  TempDir dir;
  const std::string img = write_scene_target(dir, data::sample_scenes(1, 1)[0], "a.ppm");
  std::vector<std::size_t> backoffs;
  auto opts = fast_options();
  opts.backoff = [&](std::size_t a) { backoffs.push_back(a); };

  {
    ScriptedClient c({BackendError("timeout", true), BackendError("503", true)});
    DescriptionCache cache;
    const auto r = redit::describe::describe(img, "add a star", c, cache, opts);
    EXPECT_EQ(r.record.full_description, "a scripted description");
    EXPECT_EQ(c.calls, 3u);
    EXPECT_EQ(backoffs, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(c.last_prompt, build_prompt("add a star"));
  }
  {
    ScriptedClient c({BackendError("400", false)});
    DescriptionCache cache;
    EXPECT_THROW(redit::describe::describe(img, "add a star", c, cache, opts), BackendError);
    EXPECT_EQ(c.calls, 1u);
    EXPECT_EQ(cache.size(), 0u);
  }
  {
    std::vector<BackendError> many(10, BackendError("down", true));
    ScriptedClient c(many);
    DescriptionCache cache;
    opts.max_retries = 2;
    EXPECT_THROW(redit::describe::describe(img, "add a star", c, cache, opts), BackendError);
    EXPECT_EQ(c.calls, 3u);
  }
}

TEST(Describe, CacheErrors) {
  TempDir dir;
  const std::string img = write_scene_target(dir, data::sample_scenes(1, 1)[0], "a.ppm");
  DescriptionCache unwritable(dir.str("no/such/dir/cache.jsonl"));
  MockVLM vlm(0);
  EXPECT_THROW(redit::describe::describe(img, "x", vlm, unwritable, fast_options()), IoError);

  write_bytes(dir.str("bad.jsonl"), "{\"image_digest\":\"a\"}\n");
  EXPECT_THROW(DescriptionCache{dir.str("bad.jsonl")}, CorruptFileError);
  write_bytes(dir.str("bad2.jsonl"), "not json\n");
  EXPECT_THROW(DescriptionCache{dir.str("bad2.jsonl")}, CorruptFileError);
  EXPECT_THROW(redit::describe::describe(dir.str("missing.ppm"), "x", vlm, unwritable, fast_options()), IoError);
}

TEST(Describe, GoldenFixtureLoadsAndHits) {
  TempDir dir;
  fs::copy_file(kFixtures / "golden_cache.jsonl", dir.path() / "cache.jsonl");
  DescriptionCache cache(dir.str("cache.jsonl"));
  ASSERT_EQ(cache.size(), 1u);
  NeverClient client("golden-fixture");
  const auto r = redit::describe::describe((kFixtures / "bronze_statue.ppm").string(), "Add a bird", client, cache, fast_options());
  EXPECT_TRUE(r.cache_hit);
  EXPECT_EQ(r.record.image_digest, sha256_file((kFixtures / "bronze_statue.ppm").string()));
  EXPECT_NE(r.record.full_description.find("A bird is perched on the shoulder"), std::string::npos);
}

TEST(Describe, RecordsInParallelKeepOrder) {
  TempDir dir;
  const std::string manifest = data::generate_synthetic(12, 21, dir.str("corpus"));
  auto m = data::load_manifest(manifest);
  ASSERT_EQ(m.records.size(), 12u);
  MockVLM vlm(0);
  DescriptionCache cache(dir.str("cache.jsonl"));
  const auto stats = describe_records(m.records, vlm, cache, fast_options(), 4);
  EXPECT_EQ(stats.misses, 12u);
  EXPECT_EQ(stats.hits, 0u);

  auto serial = data::load_manifest(manifest);
  MockVLM vlm2(0);
  DescriptionCache cache2;
  describe_records(serial.records, vlm2, cache2, fast_options(), 1);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_FALSE(m.records[i].full_description.empty());
    EXPECT_EQ(m.records[i].full_description, serial.records[i].full_description);
  }

  auto again = data::load_manifest(manifest);
  DescriptionCache reloaded(dir.str("cache.jsonl"));
  MockVLM vlm3(0);
  const auto s2 = describe_records(again.records, vlm3, reloaded, fast_options(), 4);
  EXPECT_EQ(s2.hits, 12u);
  EXPECT_EQ(vlm3.calls(), 0u);
}

TEST(HttpBackend, PostsWireFormatAndClassifiesErrors) {
  httplib::Server server;
  MockVLM mock(0);
  std::string seen_model;
  server.Post("/v1/describe", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = decode_request(req.body);
    seen_model = r.model;
    res.set_content(encode_response(mock.complete(r)), "application/json");
  });
  server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir;
  const std::string img = write_scene_target(dir, data::sample_scenes(1, 2)[0], "a.ppm");
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpVLMClient client({base + "/v1/describe", "tiny", 5.0});
  DescriptionCache cache;
  const auto r = redit::describe::describe(img, "remove the circle", client, cache, fast_options());
  EXPECT_EQ(seen_model, "vlm");
  MockVLM direct(0);
  EXPECT_EQ(r.record.full_description,
            direct.complete({"vlm", build_prompt("remove the circle"), base64_encode(read_file_bytes(img))}).text);

  auto classify = [&](const std::string& path) {
    HttpVLMClient c({base + path, "tiny", 5.0});
    try {
      c.complete({"m", "p", ""});
    } catch (const BackendError& e) {
      return e.retryable() ? 1 : 0;
    }
    return -1;
  };
  EXPECT_EQ(classify("/busy"), 1);
  EXPECT_EQ(classify("/bad"), 0);
  server.stop();
  th.join();

  HttpVLMClient down({base + "/v1/describe", "tiny", 1.0});
  try {
    down.complete({"m", "p", ""});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_THROW(HttpVLMClient({"https://example.com/x"}), ConfigError);
  EXPECT_THROW(HttpVLMClient({"http://localhost/x", "m", 0.0}), ConfigError);
}
