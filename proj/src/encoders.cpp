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

#include "redit/encoders.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "redit/diffusion.hpp"
#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/ops.hpp"
#include "redit/region.hpp"

namespace redit::encoders {
namespace {

Tensor sinusoid_table(std::size_t n, std::size_t d) {
  Tensor t({n, d});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(100.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      t.at(p, i) = (i % 2 == 0) ? std::sin(static_cast<double>(p) * freq) : std::cos(static_cast<double>(p) * freq);
    }
  }
  return t;
}

std::size_t bigram_bucket(int a, int b, std::size_t buckets) {
  const std::uint64_t h = mix_seed(static_cast<std::uint64_t>(a) * 1000003ULL + static_cast<std::uint64_t>(b), 17);
  return static_cast<std::size_t>(h % buckets);
}

}  // namespace

EncoderSpec region_spec(std::size_t embed_dim) {
  EncoderSpec s;
  s.embed_dim = embed_dim;
  s.text_dim = embed_dim;
  s.max_text_tokens = kRegionTokenBudget;
  return s;
}

EncoderSpec global_spec(std::size_t embed_dim) {
  EncoderSpec s = region_spec(embed_dim);
  s.max_text_tokens = kGlobalTokenBudget;
  return s;
}

VisionLanguageEncoder::VisionLanguageEncoder(std::string name, EncoderSpec spec, std::size_t vocab_size, std::uint64_t seed)
    : name_(std::move(name)), spec_(spec) {
  if (spec.image_input_size % spec.patch_grid != 0) throw ConfigError("image size must be a multiple of the patch grid");
  std::mt19937_64 rng(seed);
  const std::size_t c = spec.channels, k = spec.conv_channels, d = spec.embed_dim;
  const std::string p = name_ + ".img";
  image_params_.add(p + ".conv1.w", randn({9 * c, k}, rng, 1.0 / std::sqrt(9.0 * c)));
  image_params_.add(p + ".conv1.b", Tensor({k}, 0.0));
  image_params_.add(p + ".conv2.w", randn({9 * k, k}, rng, 1.0 / std::sqrt(9.0 * k)));
  image_params_.add(p + ".conv2.b", Tensor({k}, 0.0));
  image_params_.add(p + ".embed.w", randn({k + c, d}, rng, 1.0 / std::sqrt(static_cast<double>(k + c))));
  image_params_.add(p + ".embed.b", Tensor({d}, 0.0));
  image_params_.add(p + ".mlp.w", randn({d, d}, rng, 1.0 / std::sqrt(static_cast<double>(d))));
  image_params_.add(p + ".mlp.b", Tensor({d}, 0.0));
  image_params_.add(p + ".pool.w", randn({d, d}, rng, 1.0 / std::sqrt(static_cast<double>(d))));
  image_params_.add(p + ".pool.b", Tensor({d}, 0.0));
  positions_ = sinusoid_table(spec.patch_grid * spec.patch_grid, d);

  const std::string t = name_ + ".txt";
  text_params_.add(t + ".unigram", randn({vocab_size, spec.text_dim}, rng, 1.0));
  text_params_.add(t + ".bigram", randn({spec.bigram_buckets, spec.text_dim}, rng, 1.0));
  text_params_.add(t + ".proj.w", randn({spec.text_dim, d}, rng, 1.0 / std::sqrt(static_cast<double>(spec.text_dim))));
  text_params_.add(t + ".proj.b", Tensor({d}, 0.0));
}

void VisionLanguageEncoder::set_trainable(bool trainable) {
  image_params_.set_trainable(trainable);
  text_params_.set_trainable(trainable);
}

ag::Var VisionLanguageEncoder::prepare_image(const ag::Var& latent) const {
  diffusion::validate_latent(latent.value(), "encoder input");
  return region::resize_region(latent, spec_.image_input_size, spec_.image_input_size);
}

ag::Var VisionLanguageEncoder::image_tokens(const ag::Var& image) const {
  const auto& sh = image.shape();
  if (sh.size() != 3 || sh[0] != spec_.image_input_size || sh[1] != spec_.image_input_size || sh[2] != spec_.channels) {
    throw ShapeError(fmt::format("{}: expected {}x{}x{} input, got {}", name_, spec_.image_input_size,
                                 spec_.image_input_size, spec_.channels, shape_str(sh)));
  }
  const std::string p = name_ + ".img";
  const auto& P = image_params_;
  ag::Var x = ag::gelu(ag::conv2d(image, P.get(p + ".conv1.w"), P.get(p + ".conv1.b"), 3, 1));
  x = ag::gelu(ag::conv2d(x, P.get(p + ".conv2.w"), P.get(p + ".conv2.b"), 3, 2));
  // Pooled conv features plus pooled raw colour per patch.
  const std::size_t pool = spec_.image_input_size / spec_.patch_grid;
  const std::size_t n = spec_.patch_grid * spec_.patch_grid;
  const ag::Var feat = ag::reshape(ag::avg_pool2d(x, pool), {n, spec_.conv_channels});
  const ag::Var colour = ag::reshape(ag::avg_pool2d(image, pool), {n, spec_.channels});
  ag::Var tok = ag::linear(ag::concat_cols({feat, colour}), P.get(p + ".embed.w"), P.get(p + ".embed.b"));
  tok = ag::add(tok, ag::constant(positions_));
  return ag::add(tok, ag::linear(ag::gelu(tok), P.get(p + ".mlp.w"), P.get(p + ".mlp.b")));
}

ag::Var VisionLanguageEncoder::image_embedding(const ag::Var& image) const {
  const std::string p = name_ + ".img";
  const ag::Var pooled = ag::mean_rows(image_tokens(image));
  const ag::Var proj = ag::linear(ag::reshape(pooled, {1, spec_.embed_dim}), image_params_.get(p + ".pool.w"),
                                  image_params_.get(p + ".pool.b"));
  return ag::l2_normalize(ag::reshape(proj, {spec_.embed_dim}));
}

ag::Var VisionLanguageEncoder::text_embedding(const TextTokens& tokens, std::vector<std::string>* warnings) const {
  if (tokens.ids.empty()) throw ShapeError("text_embedding: token sequence is empty (expected at least padding)");
  std::vector<int> ids = tokens.ids;
  if (ids.size() > spec_.max_text_tokens) {
    const auto msg = fmt::format("{}: {} tokens exceed the {}-token budget; truncated", name_, ids.size(), spec_.max_text_tokens);
    spdlog::warn(msg);
    if (warnings) warnings->push_back(msg);
    ids.resize(spec_.max_text_tokens);
  }
  const std::string t = name_ + ".txt";
  const auto& P = text_params_;
  ag::Var bag = ag::embedding_bag_mean(P.get(t + ".unigram"), ids);
  if (ids.size() >= 2) {
    std::vector<int> bigrams;
    bigrams.reserve(ids.size() - 1);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
      bigrams.push_back(static_cast<int>(bigram_bucket(ids[i], ids[i + 1], spec_.bigram_buckets)));
    bag = ag::add(bag, ag::embedding_bag_mean(P.get(t + ".bigram"), bigrams));
  }
  const ag::Var proj = ag::linear(ag::reshape(bag, {1, spec_.text_dim}), P.get(t + ".proj.w"), P.get(t + ".proj.b"));
  return ag::l2_normalize(ag::reshape(proj, {spec_.embed_dim}));
}

EncoderPair::EncoderPair(Vocabulary v, std::size_t embed_dim, std::uint64_t seed)
    : vocab(std::move(v)),
      region("region_enc", region_spec(embed_dim), vocab.size(), mix_seed(seed, 1)),
      global("global_enc", global_spec(embed_dim), vocab.size(), mix_seed(seed, 2)) {}

TextTokens EncoderPair::tokenize(std::string_view text, Scale s) const {
  return encoders::tokenize(text, vocab, get(s).spec().max_text_tokens);
}

Tensor EncoderPair::encode_text(std::string_view text, Scale s, std::vector<std::string>* warnings) const {
  // Tokenize without a cap so the tower itself records the truncation.
  const auto tokens = encoders::tokenize(text, vocab, std::numeric_limits<std::size_t>::max());
  return get(s).text_embedding(tokens, warnings).value();
}

Tensor EncoderPair::encode_image(const Tensor& image, Scale s) const {
  const auto& enc = get(s);
  const ag::Var prepared = enc.prepare_image(ag::constant(image));
  return s == Scale::kRegion ? enc.image_tokens(prepared).value() : enc.image_embedding(prepared).value();
}

Tensor EncoderPair::encode_images(const std::vector<Tensor>& images, Scale s) const {
  if (images.empty()) throw ShapeError("encode_images: empty batch");
  std::vector<double> data;
  Shape item;
  for (const auto& img : images) {
    const Tensor e = encode_image(img, s);
    item = e.shape();
    data.insert(data.end(), e.storage().begin(), e.storage().end());
  }
  Shape shape{images.size()};
  shape.insert(shape.end(), item.begin(), item.end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace redit::encoders
