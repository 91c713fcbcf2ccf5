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

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "redit/dataset.hpp"
#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/image_io.hpp"
#include "redit/synthetic.hpp"
#include "test_util.hpp"

using namespace redit;
using namespace redit::data;
using redit::testing::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::string& path) {
  const auto b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

}  // namespace

TEST(ImageIo, RoundTripAndErrors) {
  TempDir dir;
  Tensor rgb({3, 4, 3});
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<double>(i % 256) / 255.0;
  write_image(dir.str("a.ppm"), rgb);
  EXPECT_EQ(read_image(dir.str("a.ppm")).storage(), rgb.storage());

  Tensor gray({2, 5, 1}, 1.0);
  gray[3] = 0.0;
  write_image(dir.str("m.pgm"), gray);
  EXPECT_EQ(read_image(dir.str("m.pgm")).storage(), gray.storage());

  const std::string bytes = encode_image(rgb);
  EXPECT_THROW(decode_image(bytes.substr(0, bytes.size() - 1)), CorruptFileError);
  EXPECT_THROW(decode_image("P3\n1 1\n255\n0 0 0"), CorruptFileError);
  EXPECT_THROW(encode_image(Tensor({2, 2, 2})), ShapeError);
  EXPECT_THROW(read_image(dir.str("missing.ppm")), IoError);
}

TEST(Manifest, EmptyFileAndParseErrors) {
  TempDir dir;
  write_text(dir.str("empty.jsonl"), "");
  const Manifest m = load_manifest(dir.str("empty.jsonl"));
  EXPECT_TRUE(m.records.empty());
  EXPECT_TRUE(m.skipped.empty());

  write_text(dir.str("bad.jsonl"), "\n{not json}\n");
  try {
    load_manifest(dir.str("bad.jsonl"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Manifest, SkipsInvalidRecordsWithReasons) {
  TempDir dir;
  const std::string manifest = generate_synthetic(3, 5, dir.str());
  Manifest ok = load_manifest(manifest);
  ASSERT_EQ(ok.records.size(), 3u);

  // Record 0: blank mask. Record 1: mask of the wrong size. Record 2: no instruction.
  write_image(dir.str("masks/blank.pgm"), Tensor({32, 32, 1}, 0.0));
  write_image(dir.str("masks/small.pgm"), Tensor({16, 32, 1}, 1.0));
  auto recs = ok.records;
  recs[0].mask = "masks/blank.pgm";
  recs[1].mask = "masks/small.pgm";
  recs[2].instruction = "";
  EditRecord missing = ok.records[0];
  missing.id = "ghost";
  missing.source_image = "images/nope.ppm";
  recs.push_back(missing);
  write_manifest(dir.str("broken.jsonl"), recs);

  const Manifest m = load_manifest(dir.str("broken.jsonl"));
  EXPECT_TRUE(m.records.empty());
  ASSERT_EQ(m.skipped.size(), 4u);
  EXPECT_EQ(m.skipped[0].reason, "empty mask");
  EXPECT_EQ(m.skipped[0].line, 1u);
  EXPECT_EQ(m.skipped[1].reason, "size mismatch");
  EXPECT_EQ(m.skipped[2].reason, "empty instruction");
  EXPECT_EQ(m.skipped[3].reason, "missing file images/nope.ppm");
}

TEST(Manifest, WriteLoadRoundTrip) {
  TempDir dir;
  const std::string manifest = generate_synthetic(4, 6, dir.str());
  const Manifest a = load_manifest(manifest);
  write_manifest(dir.str("copy.jsonl"), a.records);
  const Manifest b = load_manifest(dir.str("copy.jsonl"));
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(slurp(manifest), slurp(dir.str("copy.jsonl")));
}

TEST(Synthetic, DeterministicBytes) {
  TempDir a, b;
  const std::string ma = generate_synthetic(3, 7, a.str());
  const std::string mb = generate_synthetic(3, 7, b.str());
  EXPECT_EQ(slurp(ma), slurp(mb));
  for (const auto& r : load_manifest(ma).records) {
    EXPECT_EQ(sha256_file((a.path() / r.source_image).string()), sha256_file((b.path() / r.source_image).string()));
    EXPECT_EQ(sha256_file((a.path() / r.target_image).string()), sha256_file((b.path() / r.target_image).string()));
    EXPECT_EQ(sha256_file((a.path() / r.mask).string()), sha256_file((b.path() / r.mask).string()));
  }
  TempDir c;
  EXPECT_NE(slurp(generate_synthetic(3, 8, c.str())), slurp(ma));
}

TEST(Synthetic, ShapeRasterExamples) {
  const ShapeSpec tri{ShapeKind::kTriangle, 10, 10, 4, 0};
  // Apex row holds a single pixel; the base spans the full width.
  std::size_t apex = 0, base = 0;
  for (std::size_t x = 0; x < 32; ++x) apex += shape_contains(tri, 6, x), base += shape_contains(tri, 14, x);
  EXPECT_EQ(apex, 1u);
  EXPECT_EQ(base, 9u);
  EXPECT_TRUE(shape_contains(tri, 6, 10));

  const ShapeSpec circle{ShapeKind::kCircle, 8, 8, 3, 0};
  EXPECT_TRUE(shape_contains(circle, 5, 8));
  EXPECT_FALSE(shape_contains(circle, 5, 7));
  EXPECT_EQ(shape_bbox(circle), (region::BoundingBox{5, 5, 12, 12}));
}

TEST(Synthetic, ConstructionInvariants) {
  const auto scenes = sample_scenes(60, 11);
  std::set<std::string> descriptions;
  for (const auto& sc : scenes) {
    const Tensor src = render_source(sc), tgt = render_target(sc), mask = render_mask(sc);
    const auto m = region::RegionMask::from_tensor(mask);
    ASSERT_EQ(region::mask_to_bbox(m), shape_bbox(sc.edited));
    const auto& bg = background_palette()[sc.background].rgb;
    const auto& nc = shape_palette()[sc.new_color].rgb;
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x)
        for (std::size_t c = 0; c < 3; ++c) {
          if (!m.at(y, x)) {
            ASSERT_EQ(tgt.at(y, x, c), src.at(y, x, c));
          } else if (sc.op == EditOp::kRemove) {
            ASSERT_EQ(tgt.at(y, x, c), bg[c] / 255.0);
          } else {
            ASSERT_EQ(tgt.at(y, x, c), nc[c] / 255.0);
          }
        }
    EXPECT_TRUE(descriptions.insert(scene_region_description(sc)).second);
    const std::string instr = scene_instruction(sc);
    EXPECT_NE(instr.find(shape_name(sc.edited.kind)), std::string::npos);
  }
  std::set<EditOp> ops;
  for (const auto& sc : scenes) ops.insert(sc.op);
  EXPECT_EQ(ops.size(), 2u);
}

TEST(Synthetic, CorpusLoadsWithoutSkips) {
  TempDir dir;
  const Manifest m = load_manifest(generate_synthetic(10, 3, dir.str()));
  EXPECT_EQ(m.records.size(), 10u);
  EXPECT_TRUE(m.skipped.empty());
  for (const auto& r : m.records) EXPECT_FALSE(r.full_description.empty());
  EXPECT_THROW(generate_synthetic(0, 3, dir.str()), RangeError);
}
