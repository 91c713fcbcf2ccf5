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

#include <atomic>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace redit::describe {

/// Backend-neutral request and response. On the wire both are JSON objects:
///   request  {"model": str, "prompt": str, "image": base64 str}
///   response {"text": str, "usage": {"prompt_tokens": int, "completion_tokens": int}}
struct VLMRequest {
  std::string model;
  std::string prompt;
  std::string image_base64;

  bool operator==(const VLMRequest&) const = default;
};

struct VLMResponse {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;

  bool operator==(const VLMResponse&) const = default;
};

std::string encode_request(const VLMRequest& r);
VLMRequest decode_request(const std::string& body);
std::string encode_response(const VLMResponse& r);
VLMResponse decode_response(const std::string& body);

class VLMClient {
 public:
  virtual ~VLMClient() = default;
  // Throws BackendError on failure; retryable() tells whether a retry may help.
  virtual VLMResponse complete(const VLMRequest& request) = 0;
  // Part of the cache key: descriptions from different backends never mix.
  virtual std::string backend_id() const = 0;
};

struct HttpBackendConfig {
  std::string url;  // http://host[:port]/path
  std::string model = "vlm";
  double timeout_seconds = 30.0;
};

// Name of the environment variable that overrides HttpBackendConfig::url.
inline constexpr const char* kBackendUrlEnv = "REDIT_VLM_URL";

/// POSTs the JSON request to `url`. Plain HTTP only.
class HttpVLMClient final : public VLMClient {
 public:
  explicit HttpVLMClient(HttpBackendConfig config);
  VLMResponse complete(const VLMRequest& request) override;
  std::string backend_id() const override;

 private:
  HttpBackendConfig config_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

/// Offline stand-in for a VLM: reads the image, finds the background and
/// the coloured shapes on it, and writes a templated paragraph. Output
/// depends only on (seed, image bytes, instruction).
class MockVLM final : public VLMClient {
 public:
  explicit MockVLM(std::uint64_t seed = 0);
  VLMResponse complete(const VLMRequest& request) override;
  std::string backend_id() const override;

  std::size_t calls() const { return calls_.load(); }

 private:
  std::uint64_t seed_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace redit::describe
