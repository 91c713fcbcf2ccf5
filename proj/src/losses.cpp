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

#include "redit/losses.hpp"

#include <cmath>

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::losses {

ag::Var cosine_loss(const ag::Var& a, const ag::Var& b) {
  if (a.value().rank() != 1) throw ShapeError("cosine_loss expects vectors, got " + shape_str(a.shape()));
  require_same_shape(a.value(), b.value(), "cosine_loss");
  return ag::add_scalar(ag::scale(ag::dot(ag::l2_normalize(a), ag::l2_normalize(b)), -1.0), 1.0);
}

double cosine_loss(const Tensor& a, const Tensor& b) { return cosine_loss(ag::constant(a), ag::constant(b)).value().item(); }

ag::Var total_loss(const ag::Var& region, const ag::Var& global, const ag::Var& mse, const LossWeights& w) {
  if (w.region < 0 || w.global < 0 || w.mse < 0) {
    throw RangeError(fmt::format("loss weights must be nonnegative, got ({}, {}, {})", w.region, w.global, w.mse));
  }
  for (const auto* v : {&region, &global, &mse}) {
    if (v->value().size() != 1 || !std::isfinite(v->value()[0])) throw RangeError("loss components must be finite scalars");
  }
  return ag::add(ag::add(ag::scale(region, w.region), ag::scale(global, w.global)), ag::scale(mse, w.mse));
}

ag::Var denoising_mse(const ag::Var& eps_hat, const ag::Var& eps) {
  require_same_shape(eps_hat.value(), eps.value(), "denoising_mse");
  return ag::mean(ag::square(ag::sub(eps_hat, eps)));
}

ag::Var symmetric_contrastive(const ag::Var& z, const ag::Var& t, double tau) {
  if (!(tau > 0.0)) throw RangeError(fmt::format("temperature must be positive, got {}", tau));
  if (z.value().rank() != 2 || t.value().rank() != 2) throw ShapeError("symmetric_contrastive expects (N, d) batches");
  if (z.shape() != t.shape()) {
    throw ShapeError(fmt::format("batch mismatch: {} vs {}", shape_str(z.shape()), shape_str(t.shape())));
  }
  const std::size_t n = z.shape()[0], d = z.shape()[1];
  if (n == 0) throw ShapeError("symmetric_contrastive needs N >= 1");
  for (const auto* b : {&z.value(), &t.value()}) {
    for (std::size_t i = 0; i < n; ++i) {
      const double nrm = l2_norm(b->data().subspan(i * d, d));
      if (std::abs(nrm - 1.0) > 1e-4) throw RangeError(fmt::format("row {} has norm {}, expected unit norm", i, nrm));
    }
  }
  const ag::Var logits = ag::scale(ag::matmul(z, ag::transpose(t)), 1.0 / tau);
  const ag::Var z_to_t = ag::sum(ag::diag(ag::log_softmax_rows(logits)));
  const ag::Var t_to_z = ag::sum(ag::diag(ag::log_softmax_rows(ag::transpose(logits))));
  return ag::scale(ag::add(z_to_t, t_to_z), -1.0 / (2.0 * static_cast<double>(n)));
}

double symmetric_contrastive(const Tensor& z, const Tensor& t, double tau) {
  return symmetric_contrastive(ag::constant(z), ag::constant(t), tau).value().item();
}

}  // namespace redit::losses
