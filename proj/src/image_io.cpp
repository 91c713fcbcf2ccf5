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

#include "redit/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"

namespace redit::data {
namespace {

// Reads the next whitespace-separated header field, skipping '#' comments.
std::size_t header_int(const std::string& s, std::size_t& pos, const std::string& what) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos) throw CorruptFileError(what + ": malformed image header");
  return std::stoul(s.substr(start, pos - start));
}

}  // namespace

std::string encode_image(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3)) {
    throw ShapeError(fmt::format("encode_image: expected HxWx1 or HxWx3, got {}", shape_str(image.shape())));
  }
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  std::string out = fmt::format("{}\n{} {}\n255\n", c == 3 ? "P6" : "P5", w, h);
  out.reserve(out.size() + image.size());
  for (double v : image.storage()) {
    if (!std::isfinite(v)) throw RangeError("encode_image: non-finite pixel");
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  return out;
}

Tensor decode_image(const std::string& s, const std::string& what) {
  if (s.size() < 2 || s[0] != 'P' || (s[1] != '5' && s[1] != '6')) throw CorruptFileError(what + ": not a binary PPM/PGM file");
  const std::size_t c = s[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  const std::size_t w = header_int(s, pos, what);
  const std::size_t h = header_int(s, pos, what);
  const std::size_t maxval = header_int(s, pos, what);
  if (maxval != 255) throw CorruptFileError(fmt::format("{}: only 8-bit images are supported (maxval {})", what, maxval));
  if (w == 0 || h == 0) throw CorruptFileError(what + ": zero image dimension");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = w * h * c;
  if (s.size() < pos + n) throw CorruptFileError(fmt::format("{}: truncated raster ({} of {} bytes)", what, s.size() - std::min(s.size(), pos), n));
  Tensor t({h, w, c});
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<unsigned char>(s[pos + i]) / 255.0;
  return t;
}

Tensor read_image(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return decode_image(std::string(bytes.begin(), bytes.end()), path);
}

void write_image(const std::string& path, const Tensor& image) {
  const std::string bytes = encode_image(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing image " + path);
}

}  // namespace redit::data
