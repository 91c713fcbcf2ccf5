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
#include <utility>
#include <vector>

#include "redit/params.hpp"

namespace redit::fusion {

// (tokens, dim) feature map.
using FeatureMap = Tensor;

struct FusionConfig {
  std::size_t dim = 64;
  std::size_t heads = 2;
  std::size_t out_dim = 64;
  // 0 opens the gate halfway at init; -2 starts mostly closed.
  double gate_bias_init = 0.0;
  // Start both input transforms as the identity map.
  bool identity_transforms = false;
};

inline constexpr FusionConfig kPaperFusion{512, 8, 512, 0.0, false};
inline constexpr FusionConfig kDeskFusion{64, 2, 64, 0.0, false};

enum class GateMode {
  kLearned,  // g = sigmoid(W_g e_r + b_g)
  kBypass,   // g = 1: context always flows in (ablation)
};

/// Gated cross-attention fusion of a region token map with the full-image
/// token map.
///
///   e_r', e_f' = T_r(e_r), T_f(e_f)          pointwise residual MLPs
///   h          = MHA(Q = e_r', K = V = e_f')
///   g          = sigmoid(W_g e_r' + b_g)
///   z          = e_r' + g * h
///   f_r        = W_p LayerNorm(z) + b_p       per token
///
/// fuse() mean-pools f_r over tokens and unit-normalizes it.
class FusionModule {
 public:
  FusionModule(const FusionConfig& config, std::uint64_t seed);

  std::pair<ag::Var, ag::Var> transform_inputs(const ag::Var& region, const ag::Var& full) const;

  // Fills `weights` (one (Lq, Lkv) matrix per head) when non-null.
  ag::Var cross_attend(const ag::Var& q_tokens, const ag::Var& kv_tokens, std::vector<Tensor>* weights = nullptr) const;

  ag::Var gate(const ag::Var& region_tokens) const;

  // Per-token projection output, before pooling.
  ag::Var fuse_tokens(const ag::Var& region, const ag::Var& full, GateMode mode = GateMode::kLearned) const;

  // Pooled, unit-norm fused region embedding.
  ag::Var fuse(const ag::Var& region, const ag::Var& full, GateMode mode = GateMode::kLearned) const;
  Tensor fuse(const FeatureMap& region, const FeatureMap& full, GateMode mode = GateMode::kLearned) const;

  const FusionConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  ag::Var transform(const ag::Var& x, const std::string& prefix) const;
  void check_map(const ag::Var& x, const char* what) const;

  FusionConfig config_;
  ParamSet params_;
};

// Plain (L, d) layer normalization without affine terms.
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

}  // namespace redit::fusion
