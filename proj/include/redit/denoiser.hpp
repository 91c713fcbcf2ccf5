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

#include "redit/diffusion.hpp"
#include "redit/params.hpp"

namespace redit::diffusion {

/// Conditioning passed to the noise predictor: the instruction embedding
/// and, for image-conditioned editors, the source latent stacked onto the
/// noisy input along the channel axis.
struct Conditioning {
  Tensor text;
  Tensor source;  // empty when the denoiser is not image-conditioned
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  // eps_theta(x_t, t, c). Output has the shape of x_t and is differentiable
  // with respect to x_t and the denoiser's parameters.
  virtual ag::Var predict_noise(const ag::Var& x_t, std::size_t t, const Conditioning& cond) const = 0;

  Latent predict_noise_value(const Latent& x_t, std::size_t t, const Conditioning& cond) const {
    return predict_noise(ag::constant(x_t), t, cond).value();
  }
};

struct ToyDenoiserConfig {
  std::size_t channels = 3;
  std::size_t hidden = 16;
  std::size_t cond_dim = 64;
  std::size_t time_dim = 16;
  bool image_conditioned = true;
};

// Sinusoidal embedding of a (1-indexed) timestep.
Tensor timestep_embedding(std::size_t t, std::size_t dim);

/// Small dilated convolutional noise predictor. Timestep and instruction
/// embeddings modulate the first two hidden layers through a per-channel
/// scale and shift.
class ToyDenoiser final : public Denoiser {
 public:
  ToyDenoiser(const ToyDenoiserConfig& config, std::uint64_t seed);

  ag::Var predict_noise(const ag::Var& x_t, std::size_t t, const Conditioning& cond) const override;

  const ToyDenoiserConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  ToyDenoiserConfig config_;
  ParamSet params_;
};

/// Returns the noise implied by a known clean latent:
/// (x_t - sqrt(alpha_bar_t) x0) / sqrt(1 - alpha_bar_t). Feeding it to the
/// reverse chain reconstructs x0 exactly at t = 1.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(NoiseSchedule schedule, Latent x0);

  ag::Var predict_noise(const ag::Var& x_t, std::size_t t, const Conditioning& cond) const override;

 private:
  NoiseSchedule schedule_;
  Latent x0_;
};

}  // namespace redit::diffusion
