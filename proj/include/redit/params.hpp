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
#include <map>
#include <random>
#include <string>

#include "redit/autograd.hpp"

namespace redit {

using TensorMap = std::map<std::string, Tensor>;

/// Named set of trainable leaves. Names are fully qualified
/// ("fusion.attn.wq") so sets from several modules can be merged into one
/// checkpoint without collisions.
class ParamSet {
 public:
  ag::Var& add(const std::string& name, Tensor init);
  ag::Var& get(const std::string& name);
  const ag::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const std::map<std::string, ag::Var>& items() const { return params_; }
  std::size_t count() const;

  // Marks every leaf as requiring (or not) a gradient. Frozen leaves act as
  // constants on the backward pass.
  void set_trainable(bool trainable);
  bool trainable() const { return trainable_; }
  void zero_grad();

  TensorMap state() const;
  // Loads every owned name from `state`; throws if one is missing or mis-shaped.
  void load(const TensorMap& state);
  std::string digest() const;

 private:
  std::map<std::string, ag::Var> params_;
  bool trainable_ = true;
};

// Gaussian init with standard deviation `stddev`.
Tensor randn(Shape shape, std::mt19937_64& rng, double stddev = 1.0);

}  // namespace redit
