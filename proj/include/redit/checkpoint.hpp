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

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "redit/params.hpp"
#include "redit/train_config.hpp"

namespace redit::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Column order of the metrics CSV.
inline const std::vector<std::string> kMetricColumns = {"loss_total", "loss_mse", "loss_region", "loss_global"};

struct MetricRow {
  std::size_t step = 0;  // 1-indexed optimizer step
  std::map<std::string, double> values;

  double get(const std::string& key) const;
  bool operator==(const MetricRow&) const = default;
};

struct Checkpoint {
  nlohmann::json model;             // architecture, vocabulary, completed phases
  TrainConfig config;               // the phase that produced this checkpoint
  std::vector<std::string> ablation;
  std::size_t step = 0;
  std::vector<MetricRow> metrics_log;
  TensorMap parameters;
  TensorMap optimizer;              // AdamW moments of the producing phase
  std::size_t optimizer_step = 0;

  bool operator==(const Checkpoint&) const = default;
};

/// Container layout (all integers little-endian):
///   "RDCK" | u32 version | u64 metadata length | metadata JSON (sorted keys)
///   | f64 array payloads in metadata order | 32-byte SHA-256 of all prior bytes
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& what = "checkpoint");

// Writes through a temporary file and renames, so readers never see a
// partial checkpoint.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string metrics_csv(const std::vector<MetricRow>& log);
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& log);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

}  // namespace redit::train
