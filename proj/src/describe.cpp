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

#include "redit/describe.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/prompt.hpp"

namespace redit::describe {

nlohmann::json DescriptionRecord::to_json() const {
  return {{"image_digest", image_digest},   {"instruction", instruction},
          {"full_description", full_description}, {"region_description", region_description},
          {"backend_id", backend_id},       {"created_at", created_at}};
}

DescriptionRecord DescriptionRecord::from_json(const nlohmann::json& j) {
  DescriptionRecord r;
  r.image_digest = j.at("image_digest").get<std::string>();
  r.instruction = j.at("instruction").get<std::string>();
  r.full_description = j.at("full_description").get<std::string>();
  r.region_description = j.value("region_description", "");
  r.backend_id = j.at("backend_id").get<std::string>();
  r.created_at = j.value("created_at", "");
  return r;
}

DescriptionCache::DescriptionCache(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;  // created on first insert
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = DescriptionRecord::from_json(nlohmann::json::parse(line));
      CacheKey key{rec.image_digest, rec.instruction, rec.backend_id};
      index_.insert_or_assign(std::move(key), std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptFileError(fmt::format("{}:{}: bad cache line: {}", path_, lineno, e.what()));
    }
  }
}

std::optional<DescriptionRecord> DescriptionCache::find(const CacheKey& key) const {
  std::shared_lock lock(mu_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void DescriptionCache::insert(const DescriptionRecord& rec) {
  std::unique_lock lock(mu_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open description cache " + path_);
    out << rec.to_json().dump() << '\n';
    out.flush();
    if (!out) throw IoError("failed writing description cache " + path_);
  }
  index_.insert_or_assign(CacheKey{rec.image_digest, rec.instruction, rec.backend_id}, rec);
}

std::size_t DescriptionCache::size() const {
  std::shared_lock lock(mu_);
  return index_.size();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DescribeResult describe(const std::string& image_path, const std::string& instruction, VLMClient& client,
                        DescriptionCache& cache, const DescribeOptions& options, const std::string& region_description) {
  const auto bytes = read_file_bytes(image_path);
  const std::string digest = sha256_hex(bytes);
  const CacheKey key{digest, instruction, client.backend_id()};
  if (auto hit = cache.find(key)) return {std::move(*hit), true};

  const VLMRequest request{options.model, build_prompt(instruction), base64_encode(bytes)};
  VLMResponse response;
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      response = client.complete(request);
      break;
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= options.max_retries) throw;
      spdlog::warn("VLM call failed (attempt {}): {}; retrying", attempt + 1, e.what());
      if (options.backoff) options.backoff(attempt);
      else std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min<std::size_t>(attempt, 5)));
    }
  }
  DescriptionRecord rec{digest,
                        instruction,
                        response.text,
                        region_description,
                        client.backend_id(),
                        options.clock ? options.clock() : utc_timestamp()};
  cache.insert(rec);
  return {std::move(rec), false};
}

DescribeStats describe_records(std::vector<data::EditRecord>& records, VLMClient& client, DescriptionCache& cache,
                               const DescribeOptions& options, std::size_t max_in_flight) {
  std::vector<DescribeResult> results(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        const auto& r = records[i];
        results[i] = describe(r.resolve(r.target_image), r.instruction, client, cache, options, r.region_description);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = records.size();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(records.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  DescribeStats stats;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].full_description = results[i].record.full_description;
    (results[i].cache_hit ? stats.hits : stats.misses)++;
  }
  return stats;
}

}  // namespace redit::describe
