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

#include "redit/params.hpp"

#include <cstring>

#include <fmt/format.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"

namespace redit {

ag::Var& ParamSet::add(const std::string& name, Tensor init) {
  auto [it, inserted] = params_.emplace(name, ag::Var(std::move(init), trainable_));
  if (!inserted) throw ConfigError("duplicate parameter name " + name);
  return it->second;
}

ag::Var& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const ag::Var& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

void ParamSet::set_trainable(bool trainable) {
  trainable_ = trainable;
  for (auto& [_, v] : params_) v.node()->requires_grad = trainable;
}

void ParamSet::zero_grad() {
  for (auto& [_, v] : params_) v.zero_grad();
}

TensorMap ParamSet::state() const {
  TensorMap out;
  for (const auto& [name, v] : params_) out.emplace(name, v.value());
  return out;
}

void ParamSet::load(const TensorMap& state) {
  for (auto& [name, v] : params_) {
    auto it = state.find(name);
    if (it == state.end()) throw ConfigError("checkpoint is missing parameter " + name);
    if (it->second.shape() != v.shape()) {
      throw ShapeError(fmt::format("parameter {}: checkpoint shape {} vs model {}", name,
                                   shape_str(it->second.shape()), shape_str(v.shape())));
    }
    v.mutable_value() = it->second;
  }
}

std::string ParamSet::digest() const {
  std::string buf;
  for (const auto& [name, v] : params_) {
    buf += name;
    buf.push_back('\0');
    const auto& d = v.value().storage();
    buf.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  }
  return sha256_hex(buf);
}

Tensor randn(Shape shape, std::mt19937_64& rng, double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> nd(0.0, stddev);
  for (auto& v : t.storage()) v = nd(rng);
  return t;
}

}  // namespace redit
