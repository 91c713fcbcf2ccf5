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
#include <vector>

#include "redit/autograd.hpp"
#include "redit/diffusion.hpp"

namespace redit::region {

using diffusion::Latent;

/// Binary H x W indicator of the editable region.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(std::size_t height, std::size_t width);
  RegionMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits);
  // Rank-2 (H, W) or rank-3 (H, W, 1) tensor; values >= threshold become 1.
  static RegionMask from_tensor(const Tensor& t, double threshold = 0.5);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  bool at(std::size_t y, std::size_t x) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t y, std::size_t x, bool on) { bits_[y * width_ + x] = on ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Half-open box: columns [x_min, x_max), rows [y_min, y_max).
struct BoundingBox {
  std::size_t x_min = 0;
  std::size_t y_min = 0;
  std::size_t x_max = 0;
  std::size_t y_max = 0;

  std::size_t width() const { return x_max - x_min; }
  std::size_t height() const { return y_max - y_min; }
  bool contains(std::size_t y, std::size_t x) const { return y >= y_min && y < y_max && x >= x_min && x < x_max; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Tightest box around the 1-pixels. Throws EmptyMaskError on an all-zero mask.
BoundingBox mask_to_bbox(const RegionMask& mask);

Latent crop(const Latent& latent, const BoundingBox& box);
ag::Var crop(const ag::Var& latent, const BoundingBox& box);

// Bilinear resize; the identity when the size is unchanged.
Latent resize_region(const Latent& latent, std::size_t out_h, std::size_t out_w);
ag::Var resize_region(const ag::Var& latent, std::size_t out_h, std::size_t out_w);

}  // namespace redit::region
