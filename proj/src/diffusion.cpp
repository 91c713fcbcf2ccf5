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

#include "redit/diffusion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::diffusion {
namespace {

constexpr double kSingularEps = 1e-12;

void check_pair(const Latent& a, const Latent& b, const char* op) {
  validate_latent(a, op);
  require_same_shape(a, b, op);
}

Latent affine(const Latent& a, double ca, const Latent& b, double cb) {
  Latent out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * a[i] + cb * b[i];
  return out;
}

}  // namespace

void validate_latent(const Latent& x, const char* what) {
  if (x.rank() != 3 || x.dim(0) == 0 || x.dim(1) == 0 || x.dim(2) == 0) {
    throw ShapeError(fmt::format("{}: latent must be HxWxC with positive axes, got {}", what, shape_str(x.shape())));
  }
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double b : betas_) {
    alphas_.push_back(1.0 - b);
    running *= (1.0 - b);
    alpha_bars_.push_back(running);
  }
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw RangeError("noise schedule needs at least one step");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
      throw RangeError(fmt::format("beta at t={} is {}, must lie in (0, 1)", i + 1, betas[i]));
    }
  }
  NoiseSchedule s(std::move(betas));
  for (std::size_t i = 1; i < s.alpha_bars_.size(); ++i) {
    if (!(s.alpha_bars_[i] < s.alpha_bars_[i - 1])) throw RangeError("alpha_bar must be strictly decreasing");
  }
  return s;
}

NoiseSchedule NoiseSchedule::from_betas_unchecked(std::vector<double> betas) { return NoiseSchedule(std::move(betas)); }

std::size_t NoiseSchedule::index(std::size_t t) const {
  if (t < 1 || t > betas_.size()) throw RangeError(fmt::format("timestep {} outside [1, {}]", t, betas_.size()));
  return t - 1;
}

NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw RangeError("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw RangeError(fmt::format("need 0 < beta_start <= beta_end < 1, got {} and {}", beta_start, beta_end));
  }
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  return NoiseSchedule::from_betas(std::move(betas));
}

Latent forward_step(const Latent& x_prev, std::size_t t, const Latent& noise, const NoiseSchedule& schedule) {
  check_pair(x_prev, noise, "forward_step");
  const double b = schedule.beta(t);
  return affine(x_prev, std::sqrt(1.0 - b), noise, std::sqrt(b));
}

Latent forward_sample(const Latent& x0, std::size_t t, const Latent& noise, const NoiseSchedule& schedule) {
  check_pair(x0, noise, "forward_sample");
  const double ab = schedule.alpha_bar(t);
  return affine(x0, std::sqrt(ab), noise, std::sqrt(1.0 - ab));
}

Latent predict_x0(const Latent& x_t, std::size_t t, const Latent& eps_hat, const NoiseSchedule& schedule) {
  check_pair(x_t, eps_hat, "predict_x0");
  const double ab = schedule.alpha_bar(t);
  if (ab < kSingularEps) throw SingularityError(fmt::format("predict_x0: alpha_bar({}) = {} too small", t, ab));
  const double inv = 1.0 / std::sqrt(ab);
  return affine(x_t, inv, eps_hat, -std::sqrt(1.0 - ab) * inv);
}

ag::Var predict_x0(const ag::Var& x_t, std::size_t t, const ag::Var& eps_hat, const NoiseSchedule& schedule) {
  check_pair(x_t.value(), eps_hat.value(), "predict_x0");
  const double ab = schedule.alpha_bar(t);
  if (ab < kSingularEps) throw SingularityError(fmt::format("predict_x0: alpha_bar({}) = {} too small", t, ab));
  const double inv = 1.0 / std::sqrt(ab);
  return ag::add(ag::scale(x_t, inv), ag::scale(eps_hat, -std::sqrt(1.0 - ab) * inv));
}

double reverse_sigma(std::size_t t, const NoiseSchedule& schedule, ReverseVariance variance) {
  const double b = schedule.beta(t);
  if (variance == ReverseVariance::kBeta) return std::sqrt(b);
  if (t == 1) return 0.0;
  return std::sqrt(b * (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - schedule.alpha_bar(t)));
}

Latent reverse_step(const Latent& x_t, std::size_t t, const Latent& eps_hat, const Latent& z,
                    const NoiseSchedule& schedule, ReverseVariance variance) {
  check_pair(x_t, eps_hat, "reverse_step");
  require_same_shape(x_t, z, "reverse_step");
  const double b = schedule.beta(t);
  const double ab = schedule.alpha_bar(t);
  if (ab >= 1.0 - kSingularEps) throw SingularityError(fmt::format("reverse_step: alpha_bar({}) = {} too close to 1", t, ab));
  const double inv = 1.0 / std::sqrt(1.0 - b);
  const double eps_coef = b / std::sqrt(1.0 - ab);
  const double sigma = reverse_sigma(t, schedule, variance);
  Latent out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv * (x_t[i] - eps_coef * eps_hat[i]) + sigma * z[i];
  return out;
}

Latent reverse_chain(Latent x, std::size_t from_t, const std::function<Latent(const Latent&, std::size_t)>& eps_fn,
                     const std::function<Latent(std::size_t)>& noise_fn, const NoiseSchedule& schedule,
                     ReverseVariance variance) {
  if (from_t > schedule.steps()) {
    throw RangeError(fmt::format("reverse chain start {} exceeds schedule length {}", from_t, schedule.steps()));
  }
  for (std::size_t t = from_t; t >= 1; --t) {
    const Latent eps = eps_fn(x, t);
    const Latent z = t > 1 ? noise_fn(t) : Latent(x.shape(), 0.0);
    x = reverse_step(x, t, eps, z, schedule, variance);
  }
  return x;
}

}  // namespace redit::diffusion
