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
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "redit/model.hpp"
#include "redit/train_config.hpp"

namespace redit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Bad flags or a bad config file; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackendSection {
  std::string url;  // overridden by $REDIT_VLM_URL, then by --backend-url
  std::string model = "vlm";
  double timeout_seconds = 30.0;
  std::size_t max_retries = 3;
  std::size_t max_in_flight = 4;
};

/// Config file document. Every section is optional; unknown keys anywhere
/// are rejected.
///   {"seed": 0, "preset": "desk",
///    "model": {...ModelConfig...},
///    "train": {"fusion_phase1": {...TrainConfig...}, "editor": {...}, ...},
///    "backend": {"url", "model", "timeout_seconds", "max_retries", "max_in_flight"},
///    "paths": {"cache"},
///    "eval": {"extractor_seed"}}
struct RunConfig {
  std::uint64_t seed = 0;
  train::Preset preset = train::Preset::kDesk;
  nlohmann::json model = nlohmann::json::object();
  std::map<std::string, nlohmann::json> train;  // keyed by phase name
  BackendSection backend;
  std::string cache_path;
  std::uint64_t extractor_seed = 2024;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);  // empty path: defaults
  nlohmann::json to_json() const;

  train::ModelConfig model_config() const;
  train::TrainConfig train_config(train::Phase phase) const;
};

// Runs one command line. Never throws; returns the exit code.
int run(int argc, const char* const* argv);

}  // namespace redit::cli
