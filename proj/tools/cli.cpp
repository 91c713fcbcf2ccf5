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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "redit/checkpoint.hpp"
#include "redit/dataset.hpp"
#include "redit/describe.hpp"
#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/image_io.hpp"
#include "redit/metrics.hpp"
#include "redit/region.hpp"
#include "redit/synthetic.hpp"
#include "redit/trainers.hpp"
#include "redit/vlm.hpp"

namespace redit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(fmt::format("config: {} must be an object", where));
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw UsageError(fmt::format("config: unknown key '{}' in {}", key, where));
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Writes the effective configuration next to the outputs. An existing echo
// with different content means the location belongs to another run.
void claim_output(const fs::path& echo, const json& effective) {
  if (fs::exists(echo)) {
    json existing;
    try {
      existing = json::parse(read_text(echo.string()));
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{} is not valid JSON", echo.string()));
    }
    if (existing != effective)
      throw ConfigError(fmt::format("{} records a different configuration; use a fresh output location", echo.string()));
    return;
  }
  write_text(echo, effective.dump(2) + "\n");
}

std::string file_digest(const std::string& path) { return sha256_file(path); }

data::Manifest load_records(const std::string& path) {
  auto m = data::load_manifest(path);
  for (const auto& s : m.skipped) spdlog::warn("{}:{}: skipped record '{}': {}", path, s.line, s.id, s.reason);
  if (m.records.empty()) throw ConfigError(fmt::format("{} has no usable records", path));
  return m;
}

std::string edited_name(const data::EditRecord& r) { return r.id + ".ppm"; }

// Pixels outside the mask's bounding box are copied from `input`.
Tensor composite(const Tensor& input, const Tensor& edited, const region::RegionMask& mask) {
  if (mask.empty()) throw EmptyMaskError("edit: mask is empty");
  const auto box = region::mask_to_bbox(mask);
  Tensor out = input;
  for (std::size_t y = box.y_min; y < box.y_max; ++y)
    for (std::size_t x = box.x_min; x < box.x_max; ++x)
      for (std::size_t c = 0; c < out.dim(2); ++c) out.at(y, x, c) = edited.at(y, x, c);
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j, {"seed", "preset", "model", "train", "backend", "paths", "eval"}, "the config file");
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("preset")) c.preset = train::parse_preset(j.at("preset").get<std::string>());
    if (j.contains("model")) {
      c.model = j.at("model");
      train::ModelConfig::from_json(c.model, {}).validate();
    }
    if (j.contains("train")) {
      reject_unknown(j.at("train"), {"fusion_phase1", "fusion_phase2", "global_finetune", "editor"}, "train");
      for (const auto& [phase, body] : j.at("train").items()) {
        train::TrainConfig::from_json(body, train::preset_config(train::parse_phase(phase), c.preset)).validate();
        c.train[phase] = body;
      }
    }
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      reject_unknown(b, {"url", "model", "timeout_seconds", "max_retries", "max_in_flight"}, "backend");
      c.backend.url = b.value("url", c.backend.url);
      c.backend.model = b.value("model", c.backend.model);
      c.backend.timeout_seconds = b.value("timeout_seconds", c.backend.timeout_seconds);
      c.backend.max_retries = b.value("max_retries", c.backend.max_retries);
      c.backend.max_in_flight = b.value("max_in_flight", c.backend.max_in_flight);
    }
    if (j.contains("paths")) {
      reject_unknown(j.at("paths"), {"cache"}, "paths");
      c.cache_path = j.at("paths").value("cache", c.cache_path);
    }
    if (j.contains("eval")) {
      reject_unknown(j.at("eval"), {"extractor_seed"}, "eval");
      c.extractor_seed = j.at("eval").value("extractor_seed", c.extractor_seed);
    }
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config: {}", e.what()));
  } catch (const ConfigError& e) {
    throw UsageError(fmt::format("config: {}", e.what()));
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  if (path.empty()) return {};
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config {}: {}", path, e.what()));
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json t = json::object();
  for (const auto& [phase, body] : train) t[phase] = body;
  return {{"seed", seed},
          {"preset", train::preset_name(preset)},
          {"model", model},
          {"train", t},
          {"backend",
           {{"url", backend.url},
            {"model", backend.model},
            {"timeout_seconds", backend.timeout_seconds},
            {"max_retries", backend.max_retries},
            {"max_in_flight", backend.max_in_flight}}},
          {"paths", {{"cache", cache_path}}},
          {"eval", {{"extractor_seed", extractor_seed}}}};
}

train::ModelConfig RunConfig::model_config() const {
  train::ModelConfig base;
  base.seed = seed;
  auto m = train::ModelConfig::from_json(model, base);
  m.validate();
  return m;
}

train::TrainConfig RunConfig::train_config(train::Phase phase) const {
  auto c = train::preset_config(phase, preset, seed);
  if (const auto it = train.find(train::phase_name(phase)); it != train.end()) c = train::TrainConfig::from_json(it->second, c);
  c.validate();
  return c;
}

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  RunConfig config() const {
    RunConfig c = RunConfig::load(config_path);
    if (seed) c.seed = *seed;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed (overrides the config file)");
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t size = 32;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  if (a.n == 0) throw UsageError("synth: --n must be at least 1");
  claim_output(fs::path(a.out) / "synth.config.json",
               {{"command", "synth"}, {"n", a.n}, {"seed", a.seed}, {"size", a.size}});
  const std::string manifest = data::generate_synthetic(a.n, a.seed, a.out, a.size);
  std::cout << manifest << "\n";
  return kOk;
}

// describe ------------------------------------------------------------------

struct DescribeArgs {
  Common common;
  std::string manifest;
  std::string out;
  std::string cache;
  std::string backend_url;
  bool mock = false;
  std::uint64_t mock_seed = 0;
  std::size_t jobs = 0;
};

int cmd_describe(const DescribeArgs& a) {
  const RunConfig rc = a.common.config();
  std::unique_ptr<describe::VLMClient> client;
  if (a.mock) {
    client = std::make_unique<describe::MockVLM>(a.mock_seed);
  } else {
    std::string url = rc.backend.url;
    if (const char* env = std::getenv(describe::kBackendUrlEnv); env && *env) url = env;
    if (!a.backend_url.empty()) url = a.backend_url;
    if (url.empty())
      throw UsageError(fmt::format("describe: pass --mock, --backend-url, or set {}", describe::kBackendUrlEnv));
    client = std::make_unique<describe::HttpVLMClient>(
        describe::HttpBackendConfig{url, rc.backend.model, rc.backend.timeout_seconds});
  }

  auto m = load_records(a.manifest);
  const std::string out = a.out.empty() ? a.manifest : a.out;
  const fs::path out_dir = fs::absolute(out).parent_path();
  std::string cache = a.cache.empty() ? rc.cache_path : a.cache;
  if (cache.empty()) cache = (fs::absolute(a.manifest).parent_path() / "descriptions.jsonl").string();
  claim_output(out_dir / "describe.config.json",
               {{"command", "describe"}, {"backend", client->backend_id()}, {"model", rc.backend.model}});

  describe::DescriptionCache store(cache);
  describe::DescribeOptions opts;
  opts.model = rc.backend.model;
  opts.max_retries = rc.backend.max_retries;
  const std::size_t jobs = a.jobs > 0 ? a.jobs : rc.backend.max_in_flight;
  const auto stats = describe::describe_records(m.records, *client, store, opts, jobs);

  // Paths in the manifest stay relative to its own directory.
  if (fs::absolute(out).parent_path() != fs::absolute(a.manifest).parent_path())
    for (auto& r : m.records)
      r.source_image = fs::relative(r.resolve(r.source_image), out_dir).string(),
      r.target_image = fs::relative(r.resolve(r.target_image), out_dir).string(),
      r.mask = fs::relative(r.resolve(r.mask), out_dir).string();
  data::write_manifest(out, m.records);
  std::cout << fmt::format("described {} records: {} cache hits, {} misses\n", m.records.size(), stats.hits,
                           stats.misses);
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string phase;
  std::string manifest;
  std::string out;
  std::string init;
  std::string resume;
  std::vector<std::string> ablate;
  std::optional<std::size_t> steps;
};

train::Phase cli_phase(const std::string& s) {
  if (s == "fusion1") return train::Phase::kFusionPhase1;
  if (s == "fusion2") return train::Phase::kFusionPhase2;
  if (s == "global") return train::Phase::kGlobalFinetune;
  if (s == "editor") return train::Phase::kEditor;
  throw UsageError(fmt::format("train: unknown phase '{}'", s));
}

int cmd_train(const TrainArgs& a) {
  const RunConfig rc = a.common.config();
  const train::Phase phase = cli_phase(a.phase);
  train::TrainConfig cfg = rc.train_config(phase);
  if (a.steps) cfg.steps = *a.steps;
  cfg.validate();
  train::Ablation ablation;
  try {
    ablation = train::Ablation::parse(a.ablate);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (ablation.any() && phase != train::Phase::kEditor) throw UsageError("train: --ablate applies to the editor phase only");
  if (!a.init.empty() && !a.resume.empty()) throw UsageError("train: --init and --resume are exclusive");
  if (phase == train::Phase::kEditor && a.init.empty() && a.resume.empty())
    throw UsageError("train: the editor phase needs --init with a checkpoint from the fusion and global phases");
  if (phase == train::Phase::kFusionPhase2 && a.init.empty() && a.resume.empty())
    throw UsageError("train: fusion2 needs --init with a fusion1 checkpoint");

  auto m = load_records(a.manifest);
  std::size_t skipped = 0;
  const auto examples = train::make_examples(m.records, &skipped);

  std::unique_ptr<train::ModelBundle> model;
  std::optional<train::Checkpoint> resume;
  std::string init_digest;
  if (!a.resume.empty()) {
    resume = train::load_checkpoint(a.resume);
    model = train::ModelBundle::from_checkpoint(*resume);
    // The resumed phase is not complete yet.
    if (!model->phases().empty() && model->phases().back() == train::phase_name(phase)) model->phases().pop_back();
    // Only the run length may differ from the interrupted run.
    train::TrainConfig same_length = cfg;
    same_length.steps = resume->config.steps;
    same_length.epochs = resume->config.epochs;
    if (resume->config != same_length)
      throw ConfigError("train: --resume checkpoint was produced with a different training config");
  } else if (!a.init.empty()) {
    model = train::ModelBundle::from_checkpoint(train::load_checkpoint(a.init));
    init_digest = file_digest(a.init);
  } else {
    model = std::make_unique<train::ModelBundle>(rc.model_config(),
                                                 encoders::Vocabulary::build(train::corpus_texts(examples)));
  }
  auto need = [&](std::initializer_list<const char*> any_of, const char* what) {
    for (const char* p : any_of)
      if (model->has_phase(p)) return;
    throw ConfigError(fmt::format("train {}: checkpoint has no completed {} phase", a.phase, what));
  };
  if (phase == train::Phase::kFusionPhase2) need({"fusion_phase1"}, "fusion_phase1");
  if (phase == train::Phase::kEditor) {
    need({"fusion_phase1", "fusion_phase2"}, "fusion");
    need({"global_finetune"}, "global_finetune");
  }

  const fs::path out(a.out);
  claim_output(out / "train.config.json", {{"command", "train"},
                                            {"phase", train::phase_name(phase)},
                                            {"train", cfg.to_json()},
                                            {"model", model->config().to_json()},
                                            {"ablation", ablation.names()},
                                            {"init_sha256", init_digest},
                                            {"manifest_sha256", file_digest(a.manifest)}});

  train::TrainHooks hooks;
  const std::size_t total = cfg.total_steps(examples.size());
  hooks.on_step = [&](const train::MetricRow& row) {
    if (row.step % 50 == 0 || row.step == total)
      spdlog::info("{} step {}/{} loss {:.5f}", train::phase_name(phase), row.step, total, row.get("loss_total"));
  };
  const train::Checkpoint* res = resume ? &*resume : nullptr;
  train::Checkpoint ck;
  switch (phase) {
    case train::Phase::kFusionPhase1: ck = train::train_fusion(*model, examples, cfg, true, res, hooks); break;
    case train::Phase::kFusionPhase2: ck = train::train_fusion(*model, examples, cfg, false, res, hooks); break;
    case train::Phase::kGlobalFinetune: ck = train::train_global(*model, examples, cfg, res, hooks); break;
    case train::Phase::kEditor: ck = train::train_editor(*model, examples, cfg, ablation, res, hooks); break;
  }
  const std::string ckpt_path = (out / "checkpoint.rdck").string();
  train::save_checkpoint(ck, ckpt_path);
  train::write_metrics_csv((out / "metrics.csv").string(), ck.metrics_log);
  std::cout << fmt::format("{} sha256 {}\n", ckpt_path, file_digest(ckpt_path));
  return kOk;
}

// edit ----------------------------------------------------------------------

struct EditArgs {
  Common common;
  std::string checkpoint;
  std::string oracle_target;
  bool oracle = false;
  std::string image;
  std::string mask;
  std::string instruction;
  std::string manifest;
  bool use_masks = false;
  std::optional<std::size_t> steps;
  std::uint64_t edit_seed = 0;
  std::string out;
};

int cmd_edit(const EditArgs& a) {
  const bool batch = !a.manifest.empty();
  if (batch == !a.image.empty()) throw UsageError("edit: pass either --image or --manifest");
  if (!batch && a.instruction.empty()) throw UsageError("edit: --image needs --instruction");
  if (batch && (!a.oracle_target.empty() || !a.mask.empty()))
    throw UsageError("edit: --oracle-target and --mask apply to --image");
  if (!batch && (a.oracle || a.use_masks)) throw UsageError("edit: --oracle and --use-masks apply to --manifest");
  const bool any_oracle = a.oracle || !a.oracle_target.empty();
  if (a.checkpoint.empty() && !any_oracle) throw UsageError("edit: --checkpoint is required");

  const RunConfig rc = a.common.config();
  std::unique_ptr<train::ModelBundle> model;
  std::string ckpt_digest;
  if (!a.checkpoint.empty()) {
    model = train::ModelBundle::from_checkpoint(train::load_checkpoint(a.checkpoint));
    ckpt_digest = file_digest(a.checkpoint);
    if (!a.common.config_path.empty() && !rc.model.empty()) {
      const auto wanted = rc.model_config();
      const auto& have = model->config();
      if (wanted.schedule.steps != have.schedule.steps || wanted.schedule.beta_start != have.schedule.beta_start ||
          wanted.schedule.beta_end != have.schedule.beta_end)
        throw ConfigError("edit: checkpoint/schedule mismatch between --checkpoint and --config");
    }
    if (!any_oracle && !model->has_phase("editor"))
      spdlog::warn("edit: checkpoint has no trained editor; the denoiser is at initialization");
  } else {
    std::vector<std::string> texts{a.instruction};
    model = std::make_unique<train::ModelBundle>(rc.model_config(), encoders::Vocabulary::build(texts));
  }
  const std::size_t steps = a.steps.value_or(model->schedule().steps());
  if (steps > model->schedule().steps())
    throw ConfigError(fmt::format("edit: --steps {} exceeds the checkpoint schedule length {}", steps,
                                  model->schedule().steps()));

  json effective = {{"command", "edit"},   {"checkpoint_sha256", ckpt_digest}, {"oracle", any_oracle},
                    {"steps", steps},      {"seed", a.edit_seed},             {"use_masks", a.use_masks || !a.mask.empty()},
                    {"model", model->config().to_json()}};

  auto run_one = [&](const Tensor& source, const std::string& instruction, const Tensor* oracle_target) {
    if (oracle_target) {
      if (oracle_target->shape() != source.shape()) throw ShapeError("edit: oracle target and image differ in shape");
      const diffusion::OracleDenoiser oracle(model->schedule(), train::to_latent(*oracle_target));
      return train::edit_image(*model, oracle, source, instruction, steps, a.edit_seed);
    }
    return train::edit_image(*model, source, instruction, steps, a.edit_seed);
  };

  if (!batch) {
    effective["image_sha256"] = file_digest(a.image);
    effective["instruction"] = a.instruction;
    claim_output(a.out + ".config.json", effective);
    const Tensor source = data::read_image(a.image);
    std::optional<Tensor> target;
    if (!a.oracle_target.empty()) target = data::read_image(a.oracle_target);
    Tensor edited = run_one(source, a.instruction, target ? &*target : nullptr);
    if (!a.mask.empty()) edited = composite(source, edited, region::RegionMask::from_tensor(data::read_image(a.mask)));
    data::write_image(a.out, edited);
    std::cout << fmt::format("{} sha256 {}\n", a.out, file_digest(a.out));
    return kOk;
  }

  const auto m = load_records(a.manifest);
  effective["manifest_sha256"] = file_digest(a.manifest);
  const fs::path out(a.out);
  claim_output(out / "edit.config.json", effective);
  for (const auto& r : m.records) {
    const auto images = data::load_images(r);
    Tensor edited = run_one(images.source, r.instruction, a.oracle ? &images.target : nullptr);
    if (a.use_masks) edited = composite(images.source, edited, images.mask);
    data::write_image((out / edited_name(r)).string(), edited);
  }
  std::cout << fmt::format("edited {} records into {}\n", m.records.size(), out.string());
  return kOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string manifest;
  std::string edited;
  std::string checkpoint;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const RunConfig rc = a.common.config();
  const auto m = load_records(a.manifest);
  std::set<std::string> expected;
  for (const auto& r : m.records) expected.insert(edited_name(r));
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(a.edited))
    if (e.is_regular_file() && e.path().extension() == ".ppm") present.insert(e.path().filename().string());
  if (present != expected) {
    std::size_t missing = 0;
    for (const auto& n : expected) missing += !present.count(n);
    throw RangeError(fmt::format("eval: count mismatch: {} records, {} edited images in {} ({} missing)",
                                 expected.size(), present.size(), a.edited, missing));
  }
  std::vector<Tensor> edited;
  for (const auto& r : m.records) edited.push_back(data::read_image((fs::path(a.edited) / edited_name(r)).string()));

  const auto ck = train::load_checkpoint(a.checkpoint);
  const auto model = train::ModelBundle::from_checkpoint(ck);
  const json effective = {{"command", "eval"},
                          {"checkpoint_sha256", file_digest(a.checkpoint)},
                          {"manifest_sha256", file_digest(a.manifest)},
                          {"edited_count", edited.size()},
                          {"extractor_seed", rc.extractor_seed}};
  const fs::path out(a.out);
  claim_output(out / "eval.config.json", effective);

  const metrics::FeatureExtractor fx(rc.extractor_seed);
  const auto report = metrics::evaluate(metrics::make_samples(m.records, edited), model->enc(), fx,
                                        metrics::synthetic_class_prompts(), sha256_hex(std::string_view(effective.dump())));
  write_text(out / "report.json", report.to_json() + "\n");
  write_text(out / "report.txt", report.to_text());
  // Metric-vs-step series of the run that produced the checkpoint.
  write_text(out / "plot.csv", train::metrics_csv(ck.metrics_log));
  std::cout << report.to_text();
  return kOk;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("redit");
  if (!logger) logger = spdlog::stderr_color_mt("redit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Region-aware instruction editing: data, descriptions, training, editing and evaluation"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic edit corpus");
  s->add_option("--n", synth.n, "Number of records")->required();
  s->add_option("--seed", synth.seed, "Seed");
  s->add_option("--size", synth.size, "Image side in pixels")->check(CLI::Range(8, 512));
  s->add_option("--out", synth.out, "Output directory")->required();

  DescribeArgs desc;
  auto* d = app.add_subcommand("describe", "Fill full descriptions through a VLM backend");
  add_common(d, desc.common);
  d->add_option("--manifest", desc.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  d->add_option("--out", desc.out, "Output manifest (default: rewrite the input)");
  d->add_option("--cache", desc.cache, "Description cache (JSONL)");
  auto* mock = d->add_flag("--mock", desc.mock, "Use the offline mock backend");
  d->add_option("--mock-seed", desc.mock_seed, "Phrasing seed of the mock backend")->needs(mock);
  d->add_option("--backend-url", desc.backend_url, "http://host:port/path of the backend")->excludes(mock);
  d->add_option("--jobs", desc.jobs, "Concurrent backend requests")->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Run one training phase");
  add_common(t, tr.common);
  t->add_option("--phase", tr.phase, "fusion1, fusion2, global or editor")
      ->required()
      ->check(CLI::IsMember({"fusion1", "fusion2", "global", "editor"}));
  t->add_option("--manifest", tr.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--init", tr.init, "Checkpoint of the previous phase")->check(CLI::ExistingFile);
  t->add_option("--resume", tr.resume, "Checkpoint of an interrupted run of this phase")->check(CLI::ExistingFile);
  t->add_option("--ablate", tr.ablate, "no-region, no-global and/or no-gate (editor only)")
      ->check(CLI::IsMember({"no-region", "no-global", "no-gate", "no_region", "no_global", "no_gate"}));
  t->add_option("--steps", tr.steps, "Override the number of optimizer steps")->check(CLI::PositiveNumber);

  EditArgs ed;
  auto* e = app.add_subcommand("edit", "Edit an image, or every record of a manifest");
  add_common(e, ed.common);
  e->add_option("--checkpoint", ed.checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  e->add_option("--oracle-target", ed.oracle_target, "Use the analytic denoiser toward this image")
      ->check(CLI::ExistingFile);
  e->add_flag("--oracle", ed.oracle, "Batch mode: analytic denoiser toward each record's target");
  e->add_option("--image", ed.image, "Source image")->check(CLI::ExistingFile);
  e->add_option("--mask", ed.mask, "Keep pixels outside this mask's bounding box")->check(CLI::ExistingFile);
  e->add_option("--instruction", ed.instruction, "Edit instruction");
  e->add_option("--manifest", ed.manifest, "Edit every record of this manifest")->check(CLI::ExistingFile);
  e->add_flag("--use-masks", ed.use_masks, "Batch mode: keep pixels outside each record's mask box");
  e->add_option("--steps", ed.steps, "Noise level / reverse steps (default: schedule length)");
  e->add_option("--edit-seed", ed.edit_seed, "Sampling seed");
  e->add_option("--out", ed.out, "Output image (--image) or directory (--manifest)")->required();

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Score edited images against a manifest");
  add_common(v, ev.common);
  v->add_option("--manifest", ev.manifest, "Manifest of the evaluated records")->required()->check(CLI::ExistingFile);
  v->add_option("--edited", ev.edited, "Directory with <id>.ppm per record")->required()->check(CLI::ExistingDirectory);
  v->add_option("--checkpoint", ev.checkpoint, "Checkpoint providing the encoders")->required()->check(CLI::ExistingFile);
  v->add_option("--out", ev.out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsageError;
  }

  try {
    setup_logging(log_level);
    if (s->parsed()) return cmd_synth(synth);
    if (d->parsed()) return cmd_describe(desc);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_edit(ed);
    if (v->parsed()) return cmd_eval(ev);
  } catch (const UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return kUsageError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace redit::cli
