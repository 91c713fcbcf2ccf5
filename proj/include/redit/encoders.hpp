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
#include <string>
#include <vector>

#include "redit/params.hpp"
#include "redit/tokenizer.hpp"

namespace redit::encoders {

enum class Scale { kRegion, kGlobal };

struct EncoderSpec {
  std::size_t image_input_size = 16;  // square side fed to the image tower
  std::size_t embed_dim = 64;
  std::size_t max_text_tokens = kRegionTokenBudget;
  std::size_t channels = 3;
  std::size_t conv_channels = 16;
  std::size_t patch_grid = 4;  // tokens = patch_grid^2
  std::size_t text_dim = 64;
  std::size_t bigram_buckets = 1024;
};

EncoderSpec region_spec(std::size_t embed_dim = 64);
EncoderSpec global_spec(std::size_t embed_dim = 64);

/// Toy dual-tower vision-language encoder.
///
/// Image tower: two 3x3 convolutions, average pooling to a patch grid, and a
/// per-token MLP with a fixed sinusoidal position table. It yields a token
/// map (region scale, consumed by fusion) or a pooled unit vector (global
/// scale). Text tower: mean of unigram and hashed-bigram embeddings followed
/// by a linear map and unit normalization.
///
/// Image and text parameters live in separate sets so either tower can be
/// frozen on its own.
class VisionLanguageEncoder {
 public:
  VisionLanguageEncoder(std::string name, EncoderSpec spec, std::size_t vocab_size, std::uint64_t seed);

  // Input must already be image_input_size square (see prepare_image).
  ag::Var image_tokens(const ag::Var& image) const;
  ag::Var image_embedding(const ag::Var& image) const;

  // Resizes an arbitrary H x W x C latent to the tower's input size.
  ag::Var prepare_image(const ag::Var& latent) const;

  // Over-budget inputs are truncated; a warning is logged and appended to
  // `warnings` when given.
  ag::Var text_embedding(const TextTokens& tokens, std::vector<std::string>* warnings = nullptr) const;

  const EncoderSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  ParamSet& image_params() { return image_params_; }
  const ParamSet& image_params() const { return image_params_; }
  ParamSet& text_params() { return text_params_; }
  const ParamSet& text_params() const { return text_params_; }
  void set_trainable(bool trainable);

 private:
  std::string name_;
  EncoderSpec spec_;
  Tensor positions_;
  ParamSet image_params_;
  ParamSet text_params_;
};

/// Region-scale and global-scale encoders sharing one vocabulary.
struct EncoderPair {
  Vocabulary vocab;
  VisionLanguageEncoder region;
  VisionLanguageEncoder global;

  EncoderPair(Vocabulary v, std::size_t embed_dim, std::uint64_t seed);

  const VisionLanguageEncoder& get(Scale s) const { return s == Scale::kRegion ? region : global; }

  TextTokens tokenize(std::string_view text, Scale s) const;
  // encode_text(tokenize(text)) with the scale's budget.
  Tensor encode_text(std::string_view text, Scale s, std::vector<std::string>* warnings = nullptr) const;
  // Region scale returns the (L, d) token map; global scale a unit d-vector.
  Tensor encode_image(const Tensor& image, Scale s) const;
  // Images encoded one by one and stacked: (N, d) global, (N, L, d) region.
  Tensor encode_images(const std::vector<Tensor>& images, Scale s) const;
};

}  // namespace redit::encoders
