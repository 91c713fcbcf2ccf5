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

#include <string>

#include "redit/tensor.hpp"

namespace redit::data {

// Binary PPM (P6, 3 channels) and PGM (P5, 1 channel), 8-bit. Values are
// mapped to [0, 1] on read; on write they are clamped and rounded.
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& image);

// Byte encoding used by write_image, exposed for digests and the VLM wire.
std::string encode_image(const Tensor& image);
Tensor decode_image(const std::string& bytes, const std::string& what = "image");

}  // namespace redit::data
