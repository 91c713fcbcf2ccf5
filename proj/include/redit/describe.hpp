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

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "redit/dataset.hpp"
#include "redit/vlm.hpp"

namespace redit::describe {

struct DescriptionRecord {
  std::string image_digest;  // sha256 of the image file bytes
  std::string instruction;
  std::string full_description;
  std::string region_description;
  std::string backend_id;
  std::string created_at;

  nlohmann::json to_json() const;
  static DescriptionRecord from_json(const nlohmann::json& j);
  bool operator==(const DescriptionRecord&) const = default;
};

using CacheKey = std::tuple<std::string, std::string, std::string>;  // digest, instruction, backend

/// Append-only JSONL cache with an in-memory index. Lookups take a shared
/// lock; inserts are serialized and written through before returning.
class DescriptionCache {
 public:
  // Empty path: memory only. Otherwise existing lines are loaded.
  explicit DescriptionCache(std::string path = "");

  std::optional<DescriptionRecord> find(const CacheKey& key) const;
  // Throws IoError when the line cannot be written.
  void insert(const DescriptionRecord& rec);
  std::size_t size() const;

 private:
  std::string path_;
  mutable std::shared_mutex mu_;
  std::map<CacheKey, DescriptionRecord> index_;
};

struct DescribeOptions {
  std::string model = "vlm";
  std::size_t max_retries = 3;  // attempts after the first on retryable errors
  std::function<std::string()> clock;  // ISO-8601 timestamps; defaults to UTC now
  std::function<void(std::size_t attempt)> backoff;  // defaults to a short sleep
};

struct DescribeResult {
  DescriptionRecord record;
  bool cache_hit = false;
};

// Cache hit: returns the stored record without calling the client.
// Otherwise renders the prompt, queries the client (with bounded retries
// on retryable errors) and stores the result.
DescribeResult describe(const std::string& image_path, const std::string& instruction, VLMClient& client,
                        DescriptionCache& cache, const DescribeOptions& options = {},
                        const std::string& region_description = "");

struct DescribeStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

// Fills full_description of every record from its target image. Up to
// `max_in_flight` client calls run at once; results keep record order.
DescribeStats describe_records(std::vector<data::EditRecord>& records, VLMClient& client, DescriptionCache& cache,
                               const DescribeOptions& options = {}, std::size_t max_in_flight = 1);

std::string utc_timestamp();

}  // namespace redit::describe
