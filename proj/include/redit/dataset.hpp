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

#include <filesystem>
#include <string>
#include <vector>

#include "redit/region.hpp"

namespace redit::data {

/// One manifest line. Image paths are stored as written (relative to the
/// manifest's directory) and resolved against `base_dir` when loading.
struct EditRecord {
  std::string id;
  std::string source_image;
  std::string target_image;
  std::string mask;
  std::string instruction;
  std::string region_description;
  std::string full_description;  // may be empty until described

  std::filesystem::path base_dir;  // not serialized

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
  friend bool operator==(const EditRecord& a, const EditRecord& b) {
    return a.id == b.id && a.source_image == b.source_image && a.target_image == b.target_image && a.mask == b.mask &&
           a.instruction == b.instruction && a.region_description == b.region_description &&
           a.full_description == b.full_description;
  }
};

struct SkippedRecord {
  std::size_t line = 0;  // 1-based manifest line
  std::string id;
  std::string reason;
};

struct Manifest {
  std::vector<EditRecord> records;
  std::vector<SkippedRecord> skipped;
};

// Parses a JSONL manifest and validates every record against its files.
// Unparsable lines throw ConfigError naming the line; invalid records are
// listed in `skipped` ("empty mask", "size mismatch", "missing file ...",
// "empty instruction", "empty region description").
Manifest load_manifest(const std::string& path);

// Records are written with their paths as stored, one JSON object per line
// with sorted keys.
void write_manifest(const std::string& path, const std::vector<EditRecord>& records);

struct RecordImages {
  Tensor source;
  Tensor target;
  region::RegionMask mask;
};

RecordImages load_images(const EditRecord& record);

}  // namespace redit::data
