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

#include "redit/fusion.hpp"

#include <cmath>
#include <string_view>

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::fusion {

FusionModule::FusionModule(const FusionConfig& config, std::uint64_t seed) : config_(config) {
  const std::size_t d = config.dim;
  if (d == 0 || config.heads == 0 || d % config.heads != 0) {
    throw ShapeError(fmt::format("fusion dim {} must be divisible by heads {}", d, config.heads));
  }
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (const char* name : {"fusion.cnn_r", "fusion.cnn_f"}) {
    const std::string p(name);
    params_.add(p + ".w1", randn({d, d}, rng, s));
    params_.add(p + ".b1", Tensor({d}, 0.0));
    params_.add(p + ".w2", config.identity_transforms ? Tensor({d, d}, 0.0) : randn({d, d}, rng, 0.5 * s));
    params_.add(p + ".b2", Tensor({d}, 0.0));
  }
  // No key bias: it shifts every score of a query row equally, so softmax
  // cancels it and its gradient is identically zero.
  for (const char* proj : {"q", "k", "v", "o"}) {
    params_.add(fmt::format("fusion.attn.w{}", proj), randn({d, d}, rng, s));
    if (std::string_view(proj) != "k") params_.add(fmt::format("fusion.attn.b{}", proj), Tensor({d}, 0.0));
  }
  params_.add("fusion.gate.w", randn({d, d}, rng, s));
  params_.add("fusion.gate.b", Tensor({d}, config.gate_bias_init));
  params_.add("fusion.ln.gamma", Tensor({d}, 1.0));
  params_.add("fusion.ln.beta", Tensor({d}, 0.0));
  params_.add("fusion.proj.w", randn({d, config.out_dim}, rng, s));
  params_.add("fusion.proj.b", Tensor({config.out_dim}, 0.0));
}

void FusionModule::check_map(const ag::Var& x, const char* what) const {
  if (x.value().rank() != 2 || x.shape()[0] == 0 || x.shape()[1] != config_.dim) {
    throw ShapeError(fmt::format("fusion {}: expected (L, {}) feature map, got {}", what, config_.dim, shape_str(x.shape())));
  }
}

ag::Var FusionModule::transform(const ag::Var& x, const std::string& p) const {
  const ag::Var hidden = ag::gelu(ag::linear(x, params_.get(p + ".w1"), params_.get(p + ".b1")));
  return ag::add(x, ag::linear(hidden, params_.get(p + ".w2"), params_.get(p + ".b2")));
}

std::pair<ag::Var, ag::Var> FusionModule::transform_inputs(const ag::Var& region, const ag::Var& full) const {
  check_map(region, "region input");
  check_map(full, "full-image input");
  return {transform(region, "fusion.cnn_r"), transform(full, "fusion.cnn_f")};
}

ag::Var FusionModule::cross_attend(const ag::Var& q_tokens, const ag::Var& kv_tokens, std::vector<Tensor>* weights) const {
  check_map(q_tokens, "query tokens");
  check_map(kv_tokens, "key/value tokens");
  const std::size_t heads = config_.heads;
  const std::size_t dh = config_.dim / heads;
  const ag::Var q = ag::linear(q_tokens, params_.get("fusion.attn.wq"), params_.get("fusion.attn.bq"));
  const ag::Var k = ag::matmul(kv_tokens, params_.get("fusion.attn.wk"));
  const ag::Var v = ag::linear(kv_tokens, params_.get("fusion.attn.wv"), params_.get("fusion.attn.bv"));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ag::Var> outs;
  outs.reserve(heads);
  if (weights) weights->clear();
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const ag::Var qh = ag::slice_cols(q, hd * dh, dh);
    const ag::Var kh = ag::slice_cols(k, hd * dh, dh);
    const ag::Var vh = ag::slice_cols(v, hd * dh, dh);
    const ag::Var attn = ag::softmax_rows(ag::scale(ag::matmul(qh, ag::transpose(kh)), inv_sqrt));
    if (weights) weights->push_back(attn.value());
    outs.push_back(ag::matmul(attn, vh));
  }
  const ag::Var merged = heads == 1 ? outs[0] : ag::concat_cols(outs);
  return ag::linear(merged, params_.get("fusion.attn.wo"), params_.get("fusion.attn.bo"));
}

ag::Var FusionModule::gate(const ag::Var& region_tokens) const {
  check_map(region_tokens, "gate input");
  return ag::sigmoid(ag::linear(region_tokens, params_.get("fusion.gate.w"), params_.get("fusion.gate.b")));
}

ag::Var FusionModule::fuse_tokens(const ag::Var& region, const ag::Var& full, GateMode mode) const {
  auto [er, ef] = transform_inputs(region, full);
  const ag::Var h = cross_attend(er, ef);
  const ag::Var gated = mode == GateMode::kBypass ? h : ag::mul(gate(er), h);
  const ag::Var z = ag::add(er, gated);
  const ag::Var normed = ag::layer_norm_rows(z, params_.get("fusion.ln.gamma"), params_.get("fusion.ln.beta"));
  return ag::linear(normed, params_.get("fusion.proj.w"), params_.get("fusion.proj.b"));
}

ag::Var FusionModule::fuse(const ag::Var& region, const ag::Var& full, GateMode mode) const {
  return ag::l2_normalize(ag::mean_rows(fuse_tokens(region, full, mode)));
}

Tensor FusionModule::fuse(const FeatureMap& region, const FeatureMap& full, GateMode mode) const {
  return fuse(ag::constant(region), ag::constant(full), mode).value();
}

Tensor layer_norm(const Tensor& x, double eps) {
  const std::size_t d = x.dim(1);
  return ag::layer_norm_rows(ag::constant(x), ag::constant(Tensor({d}, 1.0)), ag::constant(Tensor({d}, 0.0)), eps).value();
}

}  // namespace redit::fusion
