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
#include <utility>
#include <vector>

#include "redit/params.hpp"

namespace redit::train {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay over a fixed list of named leaves.
class AdamW {
 public:
  AdamW(std::vector<std::pair<std::string, ag::Var>> params, AdamWConfig config);

  // Reads each leaf's accumulated gradient and updates its value in place.
  void step();
  void zero_grad();

  std::size_t steps() const { return step_; }
  const std::vector<std::pair<std::string, ag::Var>>& params() const { return params_; }

  // Moments keyed "m/<name>" and "v/<name>".
  TensorMap state() const;
  void load_state(const TensorMap& state, std::size_t step);

 private:
  std::vector<std::pair<std::string, ag::Var>> params_;
  AdamWConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t step_ = 0;
};

// Trainable leaves of each set, in name order.
std::vector<std::pair<std::string, ag::Var>> collect(const std::vector<const ParamSet*>& sets);

}  // namespace redit::train
