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

#include "redit/train_config.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "redit/errors.hpp"

namespace redit::train {

namespace {

constexpr std::pair<Phase, const char*> kPhaseNames[] = {
    {Phase::kFusionPhase1, "fusion_phase1"},
    {Phase::kFusionPhase2, "fusion_phase2"},
    {Phase::kGlobalFinetune, "global_finetune"},
    {Phase::kEditor, "editor"},
};

}  // namespace

std::string phase_name(Phase p) {
  for (const auto& [phase, name] : kPhaseNames)
    if (phase == p) return name;
  throw ConfigError("unknown phase");
}

Phase parse_phase(const std::string& s) {
  for (const auto& [phase, name] : kPhaseNames)
    if (s == name) return phase;
  throw ConfigError(fmt::format("unknown phase '{}'", s));
}

std::string preset_name(Preset p) { return p == Preset::kDesk ? "desk" : "paper"; }

Preset parse_preset(const std::string& s) {
  if (s == "desk") return Preset::kDesk;
  if (s == "paper") return Preset::kPaper;
  throw ConfigError(fmt::format("unknown preset '{}'", s));
}

std::size_t TrainConfig::total_steps(std::size_t n_examples) const {
  if (steps > 0) return steps;
  const std::size_t per_epoch = (n_examples + batch_size - 1) / batch_size;
  return epochs * per_epoch;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (steps == 0 && epochs == 0) throw ConfigError("one of steps or epochs must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (weights.region < 0 || weights.global < 0 || weights.mse < 0) throw ConfigError("loss weights must be non-negative");
  if (resolution < 16) throw ConfigError("resolution must be at least 16");
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"phase", phase_name(phase)},
      {"preset", preset_name(preset)},
      {"epochs", epochs},
      {"steps", steps},
      {"learning_rate", learning_rate},
      {"batch_size", batch_size},
      {"seed", seed},
      {"resolution", resolution},
      {"weight_decay", weight_decay},
      {"tau", tau},
      {"loss_weights", {{"region", weights.region}, {"global", weights.global}, {"mse", weights.mse}}},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("training config must be an object");
  TrainConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "phase") c.phase = parse_phase(value.get<std::string>());
      else if (key == "preset") c.preset = parse_preset(value.get<std::string>());
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "steps") c.steps = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "resolution") c.resolution = value.get<std::size_t>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "loss_weights") {
        if (!value.is_object()) throw ConfigError("loss_weights must be an object");
        for (const auto& [wk, wv] : value.items()) {
          if (wk == "region") c.weights.region = wv.get<double>();
          else if (wk == "global") c.weights.global = wv.get<double>();
          else if (wk == "mse") c.weights.mse = wv.get<double>();
          else throw ConfigError(fmt::format("unknown key loss_weights.{}", wk));
        }
      } else {
        throw ConfigError(fmt::format("unknown training key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad training config: {}", e.what()));
  }
  c.validate();
  return c;
}

TrainConfig preset_config(Phase phase, Preset preset, std::uint64_t seed) {
  TrainConfig c;
  c.phase = phase;
  c.preset = preset;
  c.seed = seed;
  if (preset == Preset::kPaper) {
    c.resolution = 256;
    switch (phase) {
      case Phase::kFusionPhase1: c.epochs = 50, c.learning_rate = 1e-4, c.batch_size = 64; break;
      case Phase::kFusionPhase2: c.epochs = 20, c.learning_rate = 1e-5, c.batch_size = 64; break;
      case Phase::kGlobalFinetune: c.epochs = 20, c.learning_rate = 1e-5, c.batch_size = 32; break;
      case Phase::kEditor: c.steps = 9000, c.learning_rate = 1e-4, c.batch_size = 8; break;
    }
    return c;
  }
  c.resolution = 32;
  switch (phase) {
    case Phase::kFusionPhase1: c.steps = 300, c.learning_rate = 3e-3, c.batch_size = 8; break;
    case Phase::kFusionPhase2: c.steps = 100, c.learning_rate = 3e-4, c.batch_size = 8; break;
    case Phase::kGlobalFinetune: c.steps = 200, c.learning_rate = 2e-3, c.batch_size = 16; break;
    case Phase::kEditor: c.steps = 300, c.learning_rate = 5e-3, c.batch_size = 4; break;
  }
  return c;
}

Ablation Ablation::parse(const std::vector<std::string>& names) {
  Ablation a;
  for (std::string n : names) {
    std::replace(n.begin(), n.end(), '-', '_');
    if (n == "no_region") a.no_region = true;
    else if (n == "no_global") a.no_global = true;
    else if (n == "no_gate") a.no_gate = true;
    else throw ConfigError(fmt::format("unknown ablation '{}'", n));
  }
  return a;
}

std::vector<std::string> Ablation::names() const {
  std::vector<std::string> out;
  if (no_region) out.emplace_back("no_region");
  if (no_global) out.emplace_back("no_global");
  if (no_gate) out.emplace_back("no_gate");
  return out;
}

}  // namespace redit::train
