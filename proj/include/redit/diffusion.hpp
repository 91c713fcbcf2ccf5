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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "redit/autograd.hpp"
#include "redit/tensor.hpp"

namespace redit::diffusion {

// (height, width, channels), every axis >= 1.
using Latent = Tensor;

void validate_latent(const Latent& x, const char* what);

/// Variance schedule with 1-indexed timesteps: beta(1) .. beta(T).
class NoiseSchedule {
 public:
  // Validates 0 < beta < 1 and strictly decreasing alpha_bar.
  static NoiseSchedule from_betas(std::vector<double> betas);
  // Skips validation. Only for degenerate limits in tests (beta = 0).
  static NoiseSchedule from_betas_unchecked(std::vector<double> betas);

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t t) const { return betas_[index(t)]; }
  double alpha(std::size_t t) const { return alphas_[index(t)]; }
  double alpha_bar(std::size_t t) const { return alpha_bars_[index(t)]; }

  std::span<const double> betas() const { return betas_; }
  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> alpha_bars() const { return alpha_bars_; }

 private:
  explicit NoiseSchedule(std::vector<double> betas);
  std::size_t index(std::size_t t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

// Linear betas from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end);

struct SchedulePreset {
  std::size_t steps;
  double beta_start;
  double beta_end;
};
inline constexpr SchedulePreset kPaperSchedule{1000, 1e-4, 0.02};
// Betas scaled by 1000 / T so that alpha_bar_T is as small as with the long schedule.
inline constexpr SchedulePreset kDeskSchedule{50, 2e-3, 0.4};

// Variance of the reverse-step noise term.
enum class ReverseVariance { kBeta, kPosterior };

// sqrt(1 - beta_t) x_prev + sqrt(beta_t) noise
Latent forward_step(const Latent& x_prev, std::size_t t, const Latent& noise, const NoiseSchedule& schedule);

// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise
Latent forward_sample(const Latent& x0, std::size_t t, const Latent& noise, const NoiseSchedule& schedule);

// (x_t - sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_bar_t)
Latent predict_x0(const Latent& x_t, std::size_t t, const Latent& eps_hat, const NoiseSchedule& schedule);
ag::Var predict_x0(const ag::Var& x_t, std::size_t t, const ag::Var& eps_hat, const NoiseSchedule& schedule);

double reverse_sigma(std::size_t t, const NoiseSchedule& schedule, ReverseVariance variance);

Latent reverse_step(const Latent& x_t, std::size_t t, const Latent& eps_hat, const Latent& z,
                    const NoiseSchedule& schedule, ReverseVariance variance = ReverseVariance::kBeta);

// Runs reverse_step from `from_t` down to 1. `eps_fn(x_t, t)` predicts the
// noise; `noise_fn(t)` supplies z for t > 1 (z = 0 at the final step).
Latent reverse_chain(Latent x, std::size_t from_t, const std::function<Latent(const Latent&, std::size_t)>& eps_fn,
                     const std::function<Latent(std::size_t)>& noise_fn, const NoiseSchedule& schedule,
                     ReverseVariance variance = ReverseVariance::kBeta);

}  // namespace redit::diffusion
