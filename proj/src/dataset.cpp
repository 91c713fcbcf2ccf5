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

#include "redit/dataset.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "redit/errors.hpp"
#include "redit/image_io.hpp"

namespace redit::data {
namespace {

using nlohmann::json;

std::string field(const json& j, const char* key, bool required, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ConfigError(fmt::format("manifest line {}: missing field '{}'", line, key));
    return {};
  }
  if (!it->is_string()) throw ConfigError(fmt::format("manifest line {}: field '{}' must be a string", line, key));
  return it->get<std::string>();
}

// Empty string when the record is usable, otherwise the skip reason.
std::string validate(const EditRecord& r) {
  if (r.instruction.empty()) return "empty instruction";
  if (r.region_description.empty()) return "empty region description";
  for (const auto* p : {&r.source_image, &r.target_image, &r.mask}) {
    if (!std::filesystem::exists(r.resolve(*p))) return "missing file " + *p;
  }
  const RecordImages img = load_images(r);
  if (img.source.shape() != img.target.shape() || img.mask.height() != img.source.dim(0) || img.mask.width() != img.source.dim(1)) {
    return "size mismatch";
  }
  if (img.mask.empty()) return "empty mask";
  return {};
}

}  // namespace

RecordImages load_images(const EditRecord& r) {
  RecordImages out;
  out.source = read_image(r.resolve(r.source_image).string());
  out.target = read_image(r.resolve(r.target_image).string());
  const Tensor m = read_image(r.resolve(r.mask).string());
  if (m.dim(2) != 1) throw ShapeError("mask " + r.mask + " must be single-channel");
  out.mask = region::RegionMask::from_tensor(m);
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(fmt::format("manifest {} line {}: {}", path, line_no, e.what()));
    }
    if (!j.is_object()) throw ConfigError(fmt::format("manifest {} line {}: expected a JSON object", path, line_no));
    EditRecord r;
    r.id = field(j, "id", true, line_no);
    r.source_image = field(j, "source_image", true, line_no);
    r.target_image = field(j, "target_image", true, line_no);
    r.mask = field(j, "mask", true, line_no);
    r.instruction = field(j, "instruction", true, line_no);
    r.region_description = field(j, "region_description", true, line_no);
    r.full_description = field(j, "full_description", false, line_no);
    r.base_dir = base;
    if (std::string reason = validate(r); !reason.empty()) {
      m.skipped.push_back({line_no, r.id, std::move(reason)});
    } else {
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

void write_manifest(const std::string& path, const std::vector<EditRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path);
  for (const auto& r : records) {
    const json j = {{"id", r.id},
                    {"source_image", r.source_image},
                    {"target_image", r.target_image},
                    {"mask", r.mask},
                    {"instruction", r.instruction},
                    {"region_description", r.region_description},
                    {"full_description", r.full_description}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path);
}

}  // namespace redit::data
