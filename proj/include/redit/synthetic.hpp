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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "redit/region.hpp"

namespace redit::data {

enum class ShapeKind { kSquare, kCircle, kTriangle };
enum class EditOp { kRecolor, kRemove };

struct Color {
  const char* name;
  std::array<std::uint8_t, 3> rgb;
};

const std::vector<Color>& shape_palette();
const std::vector<Color>& background_palette();
const char* shape_name(ShapeKind k);

/// A filled shape centred at (cy, cx) with "radius" r. Squares cover
/// [c - r, c + r] on both axes; circles are the pixels within distance r of
/// the centre; triangles have a single-pixel apex at row cy - r and widen by
/// one pixel each side every two rows down to the base row cy + r. All three
/// have the box [cx - r, cx + r + 1) x [cy - r, cy + r + 1).
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kSquare;
  std::size_t cy = 0, cx = 0, r = 1;
  std::size_t color = 0;  // index into shape_palette()
};

bool shape_contains(const ShapeSpec& s, std::size_t y, std::size_t x);
region::BoundingBox shape_bbox(const ShapeSpec& s);

struct SyntheticScene {
  std::size_t size = 32;
  std::size_t background = 0;  // index into background_palette()
  ShapeSpec edited;
  ShapeSpec distractor;
  EditOp op = EditOp::kRecolor;
  std::size_t new_color = 0;  // recolor target
};

// Scenes with pairwise distinct region descriptions.
std::vector<SyntheticScene> sample_scenes(std::size_t n, std::uint64_t seed, std::size_t size = 32);

Tensor render_source(const SyntheticScene& s);
Tensor render_target(const SyntheticScene& s);
Tensor render_mask(const SyntheticScene& s);  // H x W x 1, edited-shape pixels

std::string relation_phrase(const SyntheticScene& s);  // edited shape relative to the distractor
std::string scene_instruction(const SyntheticScene& s);
std::string scene_region_description(const SyntheticScene& s);
std::string scene_full_description(const SyntheticScene& s);

// Writes images/, masks/ and manifest.jsonl under `out_dir`; returns the
// manifest path.
std::string generate_synthetic(std::size_t n, std::uint64_t seed, const std::string& out_dir, std::size_t size = 32);

}  // namespace redit::data
