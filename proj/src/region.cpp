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

#include "redit/region.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::region {

RegionMask::RegionMask(std::size_t height, std::size_t width)
    : height_(height), width_(width), bits_(height * width, 0) {}

RegionMask::RegionMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (bits_.size() != height * width) throw ShapeError("mask bit count does not match its size");
  for (auto& b : bits_) b = b ? 1 : 0;
}

RegionMask RegionMask::from_tensor(const Tensor& t, double threshold) {
  if (!(t.rank() == 2 || (t.rank() == 3 && t.dim(2) == 1))) {
    throw ShapeError("mask tensor must be HxW or HxWx1, got " + shape_str(t.shape()));
  }
  RegionMask m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.size(); ++i) m.bits_[i] = t[i] >= threshold ? 1 : 0;
  return m;
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BoundingBox mask_to_bbox(const RegionMask& mask) {
  const std::size_t h = mask.height(), w = mask.width();
  std::size_t y0 = h, y1 = 0, x0 = w, x1 = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y + 1);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x + 1);
    }
  }
  if (y1 == 0) throw EmptyMaskError("region mask has no foreground pixels");
  return {x0, y0, x1, y1};
}

namespace {
void check_box(const Shape& shape, const BoundingBox& b) {
  if (shape.size() != 3) throw ShapeError("crop expects an HxWxC latent");
  if (!(b.x_min < b.x_max && b.y_min < b.y_max && b.x_max <= shape[1] && b.y_max <= shape[0])) {
    throw RangeError(fmt::format("box ({},{},{},{}) outside latent {}", b.x_min, b.y_min, b.x_max, b.y_max, shape_str(shape)));
  }
}
}  // namespace

Latent crop(const Latent& latent, const BoundingBox& box) { return crop(ag::constant(latent), box).value(); }

ag::Var crop(const ag::Var& latent, const BoundingBox& box) {
  check_box(latent.shape(), box);
  return ag::crop(latent, box.y_min, box.y_max, box.x_min, box.x_max);
}

Latent resize_region(const Latent& latent, std::size_t out_h, std::size_t out_w) {
  return resize_region(ag::constant(latent), out_h, out_w).value();
}

ag::Var resize_region(const ag::Var& latent, std::size_t out_h, std::size_t out_w) {
  return ag::resize_bilinear(latent, out_h, out_w);
}

}  // namespace redit::region
