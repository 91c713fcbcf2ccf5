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

#include "redit/autograd.hpp"

namespace redit::losses {

// 1 - cos(a, b), in [0, 2]. Throws SingularityError on a zero-norm input.
ag::Var cosine_loss(const ag::Var& a, const ag::Var& b);
double cosine_loss(const Tensor& a, const Tensor& b);

struct LossWeights {
  double region = 1.0;
  double global = 1.0;
  double mse = 1.0;

  bool operator==(const LossWeights&) const = default;
};

// weights.region * region + weights.global * global + weights.mse * mse.
ag::Var total_loss(const ag::Var& region, const ag::Var& global, const ag::Var& mse, const LossWeights& weights = {});

// Mean of squared differences over every entry.
ag::Var denoising_mse(const ag::Var& eps_hat, const ag::Var& eps);

inline constexpr double kDefaultTemperature = 0.07;

/// Symmetric (image->text and text->image) softmax cross-entropy over the
/// N x N similarity matrix Z T^T / tau, averaged over both directions.
/// Rows of Z and T must be unit-norm (checked to 1e-4).
ag::Var symmetric_contrastive(const ag::Var& z, const ag::Var& t, double tau = kDefaultTemperature);
double symmetric_contrastive(const Tensor& z, const Tensor& t, double tau = kDefaultTemperature);

}  // namespace redit::losses
