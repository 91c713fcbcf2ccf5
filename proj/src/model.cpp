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

#include "redit/model.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::train {

namespace {

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError(fmt::format("unknown key {}.{}", where, key));
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  return {
      {"embed_dim", embed_dim},
      {"image_size", image_size},
      {"seed", seed},
      {"fusion",
       {{"dim", fusion.dim},
        {"heads", fusion.heads},
        {"out_dim", fusion.out_dim},
        {"gate_bias_init", fusion.gate_bias_init},
        {"identity_transforms", fusion.identity_transforms}}},
      {"denoiser",
       {{"channels", denoiser.channels},
        {"hidden", denoiser.hidden},
        {"cond_dim", denoiser.cond_dim},
        {"time_dim", denoiser.time_dim},
        {"image_conditioned", denoiser.image_conditioned}}},
      {"schedule", {{"steps", schedule.steps}, {"beta_start", schedule.beta_start}, {"beta_end", schedule.beta_end}}},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j, const ModelConfig& base) {
  ModelConfig c = base;
  try {
    reject_unknown(j, {"embed_dim", "image_size", "seed", "fusion", "denoiser", "schedule"}, "model");
    read_key(j, "embed_dim", c.embed_dim);
    read_key(j, "image_size", c.image_size);
    read_key(j, "seed", c.seed);
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      reject_unknown(f, {"dim", "heads", "out_dim", "gate_bias_init", "identity_transforms"}, "model.fusion");
      read_key(f, "dim", c.fusion.dim);
      read_key(f, "heads", c.fusion.heads);
      read_key(f, "out_dim", c.fusion.out_dim);
      read_key(f, "gate_bias_init", c.fusion.gate_bias_init);
      read_key(f, "identity_transforms", c.fusion.identity_transforms);
    }
    if (j.contains("denoiser")) {
      const auto& d = j.at("denoiser");
      reject_unknown(d, {"channels", "hidden", "cond_dim", "time_dim", "image_conditioned"}, "model.denoiser");
      read_key(d, "channels", c.denoiser.channels);
      read_key(d, "hidden", c.denoiser.hidden);
      read_key(d, "cond_dim", c.denoiser.cond_dim);
      read_key(d, "time_dim", c.denoiser.time_dim);
      read_key(d, "image_conditioned", c.denoiser.image_conditioned);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      reject_unknown(s, {"steps", "beta_start", "beta_end"}, "model.schedule");
      read_key(s, "steps", c.schedule.steps);
      read_key(s, "beta_start", c.schedule.beta_start);
      read_key(s, "beta_end", c.schedule.beta_end);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad model config: {}", e.what()));
  }
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (fusion.dim != embed_dim) throw ConfigError("fusion.dim must equal embed_dim");
  if (fusion.out_dim != embed_dim) throw ConfigError("fusion.out_dim must equal embed_dim (region text space)");
  if (denoiser.cond_dim != embed_dim) throw ConfigError("denoiser.cond_dim must equal embed_dim");
  if (image_size < 16) throw ConfigError("image_size must be at least 16");
  if (schedule.steps == 0) throw ConfigError("schedule.steps must be positive");
}

ModelBundle::ModelBundle(ModelConfig config, encoders::Vocabulary vocab)
    : config_((config.validate(), config)),
      enc_(std::move(vocab), config_.embed_dim, mix_seed(config_.seed, 10)),
      fusion_(config_.fusion, mix_seed(config_.seed, 11)),
      denoiser_(config_.denoiser, mix_seed(config_.seed, 12)),
      schedule_(diffusion::make_schedule(config_.schedule.steps, config_.schedule.beta_start, config_.schedule.beta_end)) {}

std::unique_ptr<ModelBundle> ModelBundle::from_checkpoint(const Checkpoint& ckpt) {
  try {
    const auto& m = ckpt.model;
    auto config = ModelConfig::from_json(m.at("config"), ModelConfig{});
    auto vocab = encoders::Vocabulary::from_tokens(m.at("vocab").get<std::vector<std::string>>());
    auto bundle = std::make_unique<ModelBundle>(config, std::move(vocab));
    bundle->phases_ = m.at("phases").get<std::vector<std::string>>();
    bundle->load(ckpt.parameters);
    return bundle;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("checkpoint model section: {}", e.what()));
  }
}

nlohmann::json ModelBundle::describe() const {
  return {{"config", config_.to_json()}, {"vocab", enc_.vocab.tokens()}, {"phases", phases_}};
}

bool ModelBundle::has_phase(const std::string& p) const {
  return std::find(phases_.begin(), phases_.end(), p) != phases_.end();
}

std::vector<const ParamSet*> ModelBundle::groups() const {
  return {&enc_.region.image_params(), &enc_.region.text_params(), &enc_.global.image_params(),
          &enc_.global.text_params(),  &fusion_.params(),          &denoiser_.params()};
}

void ModelBundle::freeze_all() {
  enc_.region.set_trainable(false);
  enc_.global.set_trainable(false);
  fusion_.params().set_trainable(false);
  denoiser_.params().set_trainable(false);
}

TensorMap ModelBundle::state() const {
  TensorMap out;
  for (const ParamSet* g : groups()) out.merge(g->state());
  return out;
}

void ModelBundle::load(const TensorMap& state) {
  enc_.region.image_params().load(state);
  enc_.region.text_params().load(state);
  enc_.global.image_params().load(state);
  enc_.global.text_params().load(state);
  fusion_.params().load(state);
  denoiser_.params().load(state);
}

std::string ModelBundle::digest() const {
  std::string all;
  for (const ParamSet* g : groups()) all += g->digest();
  return sha256_hex(std::string_view(all));
}

Tensor ModelBundle::instruction_embedding(const std::string& instruction) const {
  return enc_.encode_text(instruction, encoders::Scale::kGlobal);
}

Tensor to_latent(const Tensor& image) {
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = 2.0 * image[i] - 1.0;
  return out;
}

Tensor from_latent(const Tensor& latent) {
  Tensor out(latent.shape());
  for (std::size_t i = 0; i < latent.size(); ++i) out[i] = std::clamp(0.5 * (latent[i] + 1.0), 0.0, 1.0);
  return out;
}

ag::Var latent_to_image(const ag::Var& latent) { return ag::scale(ag::add_scalar(latent, 1.0), 0.5); }

Tensor edit_image(const ModelBundle& model, const diffusion::Denoiser& denoiser, const Tensor& source,
                  const std::string& instruction, std::size_t steps, std::uint64_t seed) {
  diffusion::validate_latent(source, "edit source");
  const auto& schedule = model.schedule();
  if (steps > schedule.steps())
    throw ConfigError(fmt::format("edit requested {} steps but the schedule has {}", steps, schedule.steps()));
  if (steps == 0) return source;
  const Tensor x0 = to_latent(source);
  diffusion::Conditioning cond{model.instruction_embedding(instruction), Tensor()};
  if (model.config().denoiser.image_conditioned) cond.source = x0;

  std::mt19937_64 rng(mix_seed(seed, 0xed17));
  const Tensor x_start = diffusion::forward_sample(x0, steps, randn(x0.shape(), rng), schedule);
  const Tensor out = diffusion::reverse_chain(
      x_start, steps, [&](const Tensor& x, std::size_t t) { return denoiser.predict_noise_value(x, t, cond); },
      [&](std::size_t) { return randn(x0.shape(), rng); }, schedule);
  return from_latent(out);
}

Tensor edit_image(const ModelBundle& model, const Tensor& source, const std::string& instruction, std::size_t steps,
                  std::uint64_t seed) {
  return edit_image(model, model.denoiser(), source, instruction, steps, seed);
}

}  // namespace redit::train
