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

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "redit/checkpoint.hpp"
#include "redit/denoiser.hpp"
#include "redit/encoders.hpp"
#include "redit/fusion.hpp"

namespace redit::train {

struct ModelConfig {
  std::size_t embed_dim = 64;
  fusion::FusionConfig fusion = fusion::kDeskFusion;
  diffusion::ToyDenoiserConfig denoiser{};
  diffusion::SchedulePreset schedule = diffusion::kDeskSchedule;
  std::size_t image_size = 32;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  // Missing keys keep the values of `base`; unknown keys throw ConfigError.
  static ModelConfig from_json(const nlohmann::json& j, const ModelConfig& base);
  void validate() const;
};

/// Everything the editor needs at inference: both encoders, the fusion
/// module, the noise predictor and its schedule. Not copyable because
/// parameters are shared graph leaves.
class ModelBundle {
 public:
  ModelBundle(ModelConfig config, encoders::Vocabulary vocab);
  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  static std::unique_ptr<ModelBundle> from_checkpoint(const Checkpoint& ckpt);
  // Architecture, vocabulary and phases; pair with state() to checkpoint.
  nlohmann::json describe() const;

  const ModelConfig& config() const { return config_; }
  const encoders::EncoderPair& enc() const { return enc_; }
  encoders::EncoderPair& enc() { return enc_; }
  const fusion::FusionModule& fusion() const { return fusion_; }
  fusion::FusionModule& fusion() { return fusion_; }
  const diffusion::ToyDenoiser& denoiser() const { return denoiser_; }
  diffusion::ToyDenoiser& denoiser() { return denoiser_; }
  const diffusion::NoiseSchedule& schedule() const { return schedule_; }

  std::vector<std::string>& phases() { return phases_; }
  const std::vector<std::string>& phases() const { return phases_; }
  bool has_phase(const std::string& p) const;

  // All parameter groups, in a fixed order.
  std::vector<const ParamSet*> groups() const;
  void freeze_all();
  TensorMap state() const;
  void load(const TensorMap& state);
  std::string digest() const;

  // Instruction embedding fed to the denoiser (global text tower).
  Tensor instruction_embedding(const std::string& instruction) const;

 private:
  ModelConfig config_;
  encoders::EncoderPair enc_;
  fusion::FusionModule fusion_;
  diffusion::ToyDenoiser denoiser_;
  diffusion::NoiseSchedule schedule_;
  std::vector<std::string> phases_;
};

// Pixel images in [0, 1] map to latents in [-1, 1].
Tensor to_latent(const Tensor& image);
Tensor from_latent(const Tensor& latent);  // clamped to [0, 1]
ag::Var latent_to_image(const ag::Var& latent);  // unclamped, differentiable

/// SDEdit-style editing: noise the source latent to t = steps, then run the
/// reverse chain conditioned on the instruction and the source. steps = 0
/// returns the source unchanged. Deterministic in `seed`.
Tensor edit_image(const ModelBundle& model, const diffusion::Denoiser& denoiser, const Tensor& source,
                  const std::string& instruction, std::size_t steps, std::uint64_t seed);
Tensor edit_image(const ModelBundle& model, const Tensor& source, const std::string& instruction, std::size_t steps,
                  std::uint64_t seed);

}  // namespace redit::train
