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

#include "redit/optimizer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "redit/errors.hpp"

namespace redit::train {

AdamW::AdamW(std::vector<std::pair<std::string, ag::Var>> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0.0)) throw ConfigError("AdamW: learning rate must be positive");
  for (const auto& [name, var] : params_) {
    m_.emplace_back(var.shape(), 0.0);
    v_.emplace_back(var.shape(), 0.0);
  }
}

void AdamW::step() {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ag::Var& p = params_[i].second;
    const Tensor g = p.grad();
    Tensor& w = p.mutable_value();
    auto& m = m_[i].storage();
    auto& v = v_[i].storage();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1, vhat = v[k] / c2;
      w[k] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w[k]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

TensorMap AdamW::state() const {
  TensorMap out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace("m/" + params_[i].first, m_[i]);
    out.emplace("v/" + params_[i].first, v_[i]);
  }
  return out;
}

void AdamW::load_state(const TensorMap& state, std::size_t step) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (auto [prefix, dst] : {std::pair{"m/", &m_[i]}, std::pair{"v/", &v_[i]}}) {
      const auto it = state.find(prefix + params_[i].first);
      if (it == state.end()) throw ConfigError(fmt::format("optimizer state lacks {}{}", prefix, params_[i].first));
      if (it->second.shape() != dst->shape()) throw ShapeError(fmt::format("optimizer state {} has the wrong shape", it->first));
      *dst = it->second;
    }
  }
  step_ = step;
}

std::vector<std::pair<std::string, ag::Var>> collect(const std::vector<const ParamSet*>& sets) {
  std::vector<std::pair<std::string, ag::Var>> out;
  for (const ParamSet* s : sets)
    for (const auto& [name, var] : s->items()) out.emplace_back(name, var);
  return out;
}

}  // namespace redit::train
