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

#include "redit/vlm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/image_io.hpp"
#include "redit/synthetic.hpp"
#include "redit/tokenizer.hpp"

namespace redit::describe {

std::string encode_request(const VLMRequest& r) {
  return nlohmann::json{{"model", r.model}, {"prompt", r.prompt}, {"image", r.image_base64}}.dump();
}

VLMRequest decode_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return {j.at("model").get<std::string>(), j.at("prompt").get<std::string>(), j.at("image").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed VLM request: {}", e.what()));
  }
}

std::string encode_response(const VLMResponse& r) {
  return nlohmann::json{{"text", r.text},
                        {"usage", {{"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.completion_tokens}}}}
      .dump();
}

VLMResponse decode_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    VLMResponse r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("usage")) {
      const auto& u = j.at("usage");
      r.prompt_tokens = u.value("prompt_tokens", std::size_t{0});
      r.completion_tokens = u.value("completion_tokens", std::size_t{0});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(fmt::format("malformed VLM response: {}", e.what()), false);
  }
}

HttpVLMClient::HttpVLMClient(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, re)) throw ConfigError(fmt::format("unsupported backend URL '{}'", config_.url));
  host_ = m[1];
  if (m[2].matched) port_ = std::stoi(m[2]);
  path_ = m[3].matched ? std::string(m[3]) : "/";
  if (!(config_.timeout_seconds > 0)) throw ConfigError("backend timeout must be positive");
}

VLMResponse HttpVLMClient::complete(const VLMRequest& request) {
  httplib::Client cli(host_, port_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  const auto res = cli.Post(path_, encode_request(request), "application/json");
  if (!res) throw BackendError(fmt::format("VLM backend {}: {}", config_.url, httplib::to_string(res.error())), true);
  if (res->status != 200) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw BackendError(fmt::format("VLM backend {} returned HTTP {}", config_.url, res->status), retryable);
  }
  return decode_response(res->body);
}

std::string HttpVLMClient::backend_id() const { return fmt::format("http:{}#{}", config_.url, config_.model); }

namespace {

using Rgb = std::array<int, 3>;

struct Blob {
  Rgb color;
  std::size_t count = 0;
  std::size_t y0 = SIZE_MAX, x0 = SIZE_MAX, y1 = 0, x1 = 0;
  std::size_t top_width = 0, bottom_width = 0;
  double cy() const { return 0.5 * static_cast<double>(y0 + y1); }
  double cx() const { return 0.5 * static_cast<double>(x0 + x1); }
};

std::string nearest_color(const Rgb& c) {
  std::string best;
  long best_d = -1;
  auto consider = [&](const data::Color& p) {
    long d = 0;
    for (int k = 0; k < 3; ++k) d += static_cast<long>(c[k] - p.rgb[k]) * (c[k] - p.rgb[k]);
    if (best_d < 0 || d < best_d) best_d = d, best = p.name;
  };
  for (const auto& p : data::shape_palette()) consider(p);
  for (const auto& p : data::background_palette()) consider(p);
  return best;
}

// A square fills its box; an upright triangle is much wider at the bottom
// than at the top; a disc is symmetric.
std::string shape_word(const Blob& b) {
  const double area = static_cast<double>((b.y1 - b.y0 + 1) * (b.x1 - b.x0 + 1));
  if (static_cast<double>(b.count) / area > 0.9) return "square";
  if (b.bottom_width > b.top_width + 2) return "triangle";
  return "circle";
}

std::string place(const Blob& b, std::size_t h, std::size_t w) {
  const auto third = [](double v, std::size_t n, const char* lo, const char* mid, const char* hi) {
    const double f = v / static_cast<double>(n);
    return f < 1.0 / 3 ? lo : (f < 2.0 / 3 ? mid : hi);
  };
  const std::string v = third(b.cy(), h, "upper", "middle", "lower");
  const std::string hz = third(b.cx(), w, "left", "center", "right");
  return v == "middle" && hz == "center" ? "center" : v + " " + hz;
}

std::string relation(const Blob& a, const Blob& b) {
  const double dx = a.cx() - b.cx(), dy = a.cy() - b.cy();
  if (std::abs(dx) >= std::abs(dy)) return dx < 0 ? "left of" : "right of";
  return dy < 0 ? "above" : "below";
}

}  // namespace

MockVLM::MockVLM(std::uint64_t seed) : seed_(seed) {}

std::string MockVLM::backend_id() const { return fmt::format("mock-vlm/{}", seed_); }

VLMResponse MockVLM::complete(const VLMRequest& request) {
  ++calls_;
  const auto bytes = base64_decode(request.image_base64);
  const std::string raw(bytes.begin(), bytes.end());
  const Tensor img = data::decode_image(raw, "mock VLM image");
  const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
  auto rgb = [&](std::size_t y, std::size_t x) {
    Rgb v{};
    for (std::size_t k = 0; k < 3; ++k) v[k] = static_cast<int>(std::lround(img.at(y, x, std::min(k, c - 1)) * 255.0));
    return v;
  };

  std::map<Rgb, std::size_t> border;
  for (std::size_t x = 0; x < w; ++x) ++border[rgb(0, x)], ++border[rgb(h - 1, x)];
  for (std::size_t y = 0; y < h; ++y) ++border[rgb(y, 0)], ++border[rgb(y, w - 1)];
  const Rgb bg = std::max_element(border.begin(), border.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;

  // 4-connected components of identical colour.
  std::vector<int> label(h * w, -1);
  std::vector<Blob> blobs;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (label[y * w + x] >= 0 || rgb(y, x) == bg) continue;
      Blob b;
      b.color = rgb(y, x);
      const int id = static_cast<int>(blobs.size());
      std::vector<std::pair<std::size_t, std::size_t>> stack{{y, x}};
      label[y * w + x] = id;
      while (!stack.empty()) {
        const auto [py, px] = stack.back();
        stack.pop_back();
        ++b.count;
        b.y0 = std::min(b.y0, py), b.y1 = std::max(b.y1, py), b.x0 = std::min(b.x0, px), b.x1 = std::max(b.x1, px);
        const std::pair<long, long> nb[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        for (auto [dy, dx] : nb) {
          const long ny = static_cast<long>(py) + dy, nx = static_cast<long>(px) + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w)) continue;
          const std::size_t k = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (label[k] < 0 && rgb(ny, nx) == b.color) label[k] = id, stack.emplace_back(ny, nx);
        }
      }
      for (std::size_t x2 = b.x0; x2 <= b.x1; ++x2) {
        b.top_width += label[b.y0 * w + x2] == id;
        b.bottom_width += label[b.y1 * w + x2] == id;
      }
      blobs.push_back(b);
    }
  }
  std::erase_if(blobs, [](const Blob& b) { return b.count < 4; });

  std::mt19937_64 rng(mix_seed(seed_, fnv1a64(sha256_hex(bytes) + '\n' + request.prompt)));
  static const char* openers[] = {"The image shows", "The picture presents", "The frame holds"};
  static const char* finishes[] = {"smooth and evenly lit", "flat and uniformly colored", "crisp against the backdrop"};
  auto pick = [&](const char* const* opts) { return opts[std::uniform_int_distribution<int>(0, 2)(rng)]; };

  std::string text = fmt::format("{} a plain {} background under even, shadowless lighting.", pick(openers), nearest_color(bg));
  std::vector<std::string> names;
  for (const auto& b : blobs) {
    const std::string name = fmt::format("{} {}", nearest_color(b.color), shape_word(b));
    const std::size_t side = std::max(b.y1 - b.y0, b.x1 - b.x0) + 1;
    text += fmt::format(" A {} {} sits in the {} of the frame, its surface {}.", side <= 9 ? "small" : "medium", name,
                        place(b, h, w), pick(finishes));
    names.push_back(name);
  }
  if (blobs.size() >= 2) text += fmt::format(" The {} is {} the {}.", names[0], relation(blobs[0], blobs[1]), names[1]);
  if (blobs.empty()) text += " No distinct objects are visible.";

  // The prompt carries the instruction; quote it back for the edited region.
  std::string instruction;
  if (const auto q0 = request.prompt.find("instruction: \""); q0 != std::string::npos) {
    const auto start = q0 + 14;
    const auto q1 = request.prompt.find("\". For example", start);
    instruction = request.prompt.substr(start, q1 == std::string::npos ? std::string::npos : q1 - start);
  }
  if (!instruction.empty()) {
    text += fmt::format(" Regarding the edit \"{}\", the affected area shows {}.", instruction,
                        names.empty() ? "only bare background" : "the " + names.back());
  }
  VLMResponse r;
  r.text = text;
  r.prompt_tokens = encoders::split_words(request.prompt).size();
  r.completion_tokens = encoders::split_words(text).size();
  return r;
}

}  // namespace redit::describe
