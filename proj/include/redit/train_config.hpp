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
#include <string>
#include <vector>

#include <json.hpp>

#include "redit/losses.hpp"

namespace redit::train {

enum class Phase { kFusionPhase1, kFusionPhase2, kGlobalFinetune, kEditor };
enum class Preset { kDesk, kPaper };

std::string phase_name(Phase p);  // "fusion_phase1", ...
Phase parse_phase(const std::string& s);
std::string preset_name(Preset p);
Preset parse_preset(const std::string& s);

struct TrainConfig {
  Phase phase = Phase::kFusionPhase1;
  Preset preset = Preset::kDesk;
  // When steps is 0 the run length is epochs * ceil(N / batch_size).
  std::size_t epochs = 0;
  std::size_t steps = 0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t resolution = 32;
  double weight_decay = 0.01;
  double tau = losses::kDefaultTemperature;
  losses::LossWeights weights{};

  std::size_t total_steps(std::size_t n_examples) const;
  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep the values of `base`; unknown keys throw ConfigError.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);

  bool operator==(const TrainConfig&) const = default;
};

TrainConfig preset_config(Phase phase, Preset preset, std::uint64_t seed = 0);

struct Ablation {
  bool no_region = false;
  bool no_global = false;
  bool no_gate = false;

  bool any() const { return no_region || no_global || no_gate; }
  // "no_region" / "no-region" style names.
  static Ablation parse(const std::vector<std::string>& names);
  std::vector<std::string> names() const;
  bool operator==(const Ablation&) const = default;
};

}  // namespace redit::train
