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

#include "redit/synthetic.hpp"

#include <filesystem>
#include <random>
#include <set>

#include <fmt/format.h>

#include "redit/dataset.hpp"
#include "redit/errors.hpp"
#include "redit/image_io.hpp"

namespace redit::data {
namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool boxes_apart(const region::BoundingBox& a, const region::BoundingBox& b, std::size_t gap) {
  return a.x_max + gap <= b.x_min || b.x_max + gap <= a.x_min || a.y_max + gap <= b.y_min || b.y_max + gap <= a.y_min;
}

ShapeSpec sample_shape(std::mt19937_64& rng, std::size_t size) {
  ShapeSpec s;
  s.kind = static_cast<ShapeKind>(uniform(rng, 0, 2));
  s.r = uniform(rng, 3, 6);
  s.cy = uniform(rng, s.r, size - 1 - s.r);
  s.cx = uniform(rng, s.r, size - 1 - s.r);
  s.color = uniform(rng, 0, shape_palette().size() - 1);
  return s;
}

SyntheticScene sample_scene(std::mt19937_64& rng, std::size_t size) {
  SyntheticScene sc;
  sc.size = size;
  sc.background = uniform(rng, 0, background_palette().size() - 1);
  sc.edited = sample_shape(rng, size);
  do {
    sc.distractor = sample_shape(rng, size);
  } while (!boxes_apart(shape_bbox(sc.edited), shape_bbox(sc.distractor), 2) ||
           (sc.distractor.kind == sc.edited.kind && sc.distractor.color == sc.edited.color));
  sc.op = uniform(rng, 0, 1) == 0 ? EditOp::kRecolor : EditOp::kRemove;
  do {
    sc.new_color = uniform(rng, 0, shape_palette().size() - 1);
  } while (sc.new_color == sc.edited.color);
  return sc;
}

void paint(Tensor& img, std::size_t y, std::size_t x, const Color& c) {
  for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c.rgb[ch] / 255.0;
}

Tensor render(const SyntheticScene& s, bool edited) {
  Tensor img({s.size, s.size, 3});
  const auto& bg = background_palette()[s.background];
  const auto& pal = shape_palette();
  for (std::size_t y = 0; y < s.size; ++y) {
    for (std::size_t x = 0; x < s.size; ++x) {
      paint(img, y, x, bg);
      if (shape_contains(s.distractor, y, x)) paint(img, y, x, pal[s.distractor.color]);
      if (shape_contains(s.edited, y, x)) {
        if (!edited) {
          paint(img, y, x, pal[s.edited.color]);
        } else if (s.op == EditOp::kRecolor) {
          paint(img, y, x, pal[s.new_color]);
        }
      }
    }
  }
  return img;
}

std::string shape_phrase(const ShapeSpec& s) { return fmt::format("{} {}", shape_palette()[s.color].name, shape_name(s.kind)); }

}  // namespace

const std::vector<Color>& shape_palette() {
  static const std::vector<Color> p{{"red", {220, 30, 30}},    {"green", {30, 170, 50}},   {"blue", {40, 70, 220}},
                                    {"yellow", {240, 220, 30}}, {"purple", {140, 50, 180}}, {"orange", {250, 140, 20}}};
  return p;
}

const std::vector<Color>& background_palette() {
  static const std::vector<Color> p{{"white", {245, 245, 245}}, {"gray", {128, 128, 128}}, {"black", {20, 20, 20}}};
  return p;
}

const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kTriangle: return "triangle";
  }
  return "shape";
}

bool shape_contains(const ShapeSpec& s, std::size_t y, std::size_t x) {
  const auto dy = static_cast<long>(y) - static_cast<long>(s.cy);
  const auto dx = static_cast<long>(x) - static_cast<long>(s.cx);
  const auto r = static_cast<long>(s.r);
  if (dy < -r || dy > r || dx < -r || dx > r) return false;
  switch (s.kind) {
    case ShapeKind::kSquare: return true;
    case ShapeKind::kCircle: return dx * dx + dy * dy <= r * r;
    case ShapeKind::kTriangle: {
      const long k = dy + r;  // rows below the apex, 0 .. 2r
      return std::abs(dx) <= k / 2;
    }
  }
  return false;
}

region::BoundingBox shape_bbox(const ShapeSpec& s) { return {s.cx - s.r, s.cy - s.r, s.cx + s.r + 1, s.cy + s.r + 1}; }

std::vector<SyntheticScene> sample_scenes(std::size_t n, std::uint64_t seed, std::size_t size) {
  if (n == 0) throw RangeError("synthetic corpus needs n >= 1");
  if (size < 16) throw RangeError("synthetic images need size >= 16");
  std::mt19937_64 rng(seed);
  std::vector<SyntheticScene> out;
  std::set<std::string> seen;
  while (out.size() < n) {
    SyntheticScene sc = sample_scene(rng, size);
    if (seen.insert(scene_region_description(sc)).second) out.push_back(sc);
  }
  return out;
}

Tensor render_source(const SyntheticScene& s) { return render(s, false); }
Tensor render_target(const SyntheticScene& s) { return render(s, true); }

Tensor render_mask(const SyntheticScene& s) {
  Tensor m({s.size, s.size, 1});
  for (std::size_t y = 0; y < s.size; ++y)
    for (std::size_t x = 0; x < s.size; ++x) m.at(y, x, 0) = shape_contains(s.edited, y, x) ? 1.0 : 0.0;
  return m;
}

std::string relation_phrase(const SyntheticScene& s) {
  const long dy = static_cast<long>(s.edited.cy) - static_cast<long>(s.distractor.cy);
  const long dx = static_cast<long>(s.edited.cx) - static_cast<long>(s.distractor.cx);
  if (std::abs(dx) >= std::abs(dy)) return dx < 0 ? "left of" : "right of";
  return dy < 0 ? "above" : "below";
}

std::string scene_instruction(const SyntheticScene& s) {
  if (s.op == EditOp::kRecolor) return fmt::format("recolor the {} to {}", shape_name(s.edited.kind), shape_palette()[s.new_color].name);
  return fmt::format("remove the {}", shape_phrase(s.edited));
}

std::string scene_region_description(const SyntheticScene& s) {
  const std::string context = fmt::format("{} the {}", relation_phrase(s), shape_phrase(s.distractor));
  if (s.op == EditOp::kRecolor) {
    return fmt::format("a {} {} {}", shape_palette()[s.new_color].name, shape_name(s.edited.kind), context);
  }
  return fmt::format("plain {} background {}", background_palette()[s.background].name, context);
}

std::string scene_full_description(const SyntheticScene& s) {
  const char* bg = background_palette()[s.background].name;
  if (s.op == EditOp::kRecolor) {
    return fmt::format("a {} {} {} a {} on a plain {} background.", shape_palette()[s.new_color].name,
                       shape_name(s.edited.kind), relation_phrase(s), shape_phrase(s.distractor), bg);
  }
  return fmt::format("a {} alone on a plain {} background.", shape_phrase(s.distractor), bg);
}

std::string generate_synthetic(std::size_t n, std::uint64_t seed, const std::string& out_dir, std::size_t size) {
  const auto scenes = sample_scenes(n, seed, size);
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir, ec.message()));
  std::vector<EditRecord> records;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& sc = scenes[i];
    EditRecord r;
    r.id = fmt::format("syn_{:04d}", i);
    r.source_image = fmt::format("images/{}_source.ppm", r.id);
    r.target_image = fmt::format("images/{}_target.ppm", r.id);
    r.mask = fmt::format("masks/{}_mask.pgm", r.id);
    write_image((root / r.source_image).string(), render_source(sc));
    write_image((root / r.target_image).string(), render_target(sc));
    write_image((root / r.mask).string(), render_mask(sc));
    r.instruction = scene_instruction(sc);
    r.region_description = scene_region_description(sc);
    r.full_description = scene_full_description(sc);
    records.push_back(std::move(r));
  }
  const std::string manifest = (root / "manifest.jsonl").string();
  write_manifest(manifest, records);
  return manifest;
}

}  // namespace redit::data
