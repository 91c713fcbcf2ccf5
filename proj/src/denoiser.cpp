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

#include "redit/denoiser.hpp"

#include <cmath>

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/ops.hpp"

namespace redit::diffusion {

Tensor timestep_embedding(std::size_t t, std::size_t dim) {
  Tensor e({dim});
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(static_cast<double>(t) * freq);
    e[half + i] = std::cos(static_cast<double>(t) * freq);
  }
  return e;
}

ToyDenoiser::ToyDenoiser(const ToyDenoiserConfig& config, std::uint64_t seed) : config_(config) {
  std::mt19937_64 rng(seed);
  const std::size_t in_ch = config.channels * (config.image_conditioned ? 2 : 1);
  const std::size_t h = config.hidden;
  const std::size_t emb = config.time_dim + config.cond_dim;
  auto conv = [&](const std::string& name, std::size_t cin, std::size_t cout, double gain) {
    params_.add(name + ".w", randn({9 * cin, cout}, rng, gain / std::sqrt(9.0 * static_cast<double>(cin))));
    params_.add(name + ".b", Tensor({cout}, 0.0));
  };
  conv("denoiser.conv1", in_ch, h, 1.0);
  conv("denoiser.conv2", h, h, 1.0);
  conv("denoiser.conv3", h, h, 1.0);
  conv("denoiser.conv_out", h, config.channels, 0.5);
  params_.add("denoiser.skip.w", Tensor({in_ch, config.channels}, 0.0));
  params_.add("denoiser.skip.b", Tensor({config.channels}, 0.0));
  params_.add("denoiser.film.w", randn({emb, 4 * h}, rng, 0.1 / std::sqrt(static_cast<double>(emb))));
  params_.add("denoiser.film.b", Tensor({4 * h}, 0.0));
}

ag::Var ToyDenoiser::predict_noise(const ag::Var& x_t, std::size_t t, const Conditioning& cond) const {
  validate_latent(x_t.value(), "denoiser input");
  if (x_t.shape()[2] != config_.channels) {
    throw ShapeError(fmt::format("denoiser expects {} channels, got {}", config_.channels, x_t.shape()[2]));
  }
  if (cond.text.rank() != 1 || cond.text.size() != config_.cond_dim) {
    throw ShapeError(fmt::format("conditioning must be a {}-vector, got {}", config_.cond_dim, shape_str(cond.text.shape())));
  }
  ag::Var input = x_t;
  if (config_.image_conditioned) {
    require_same_shape(x_t.value(), cond.source, "denoiser source conditioning");
    input = ag::concat_channels(x_t, ag::constant(cond.source));
  }
  const std::size_t h = config_.hidden;

  Tensor emb({1, config_.time_dim + config_.cond_dim});
  const Tensor te = timestep_embedding(t, config_.time_dim);
  std::copy(te.storage().begin(), te.storage().end(), emb.storage().begin());
  std::copy(cond.text.storage().begin(), cond.text.storage().end(),
            emb.storage().begin() + static_cast<std::ptrdiff_t>(config_.time_dim));
  const ag::Var film = ag::linear(ag::constant(std::move(emb)), params_.get("denoiser.film.w"), params_.get("denoiser.film.b"));
  auto film_part = [&](std::size_t k) { return ag::reshape(ag::slice_cols(film, k * h, h), {h}); };

  auto conv = [&](const ag::Var& x, const std::string& name, std::size_t dilation) {
    return ag::conv2d(x, params_.get(name + ".w"), params_.get(name + ".b"), 3, dilation);
  };
  auto modulate = [&](const ag::Var& x, std::size_t k) {
    return ag::add_lastdim(ag::mul_lastdim(x, ag::add_scalar(film_part(2 * k), 1.0)), film_part(2 * k + 1));
  };

  ag::Var y = ag::gelu(modulate(conv(input, "denoiser.conv1", 1), 0));
  y = ag::gelu(modulate(conv(y, "denoiser.conv2", 2), 1));
  y = ag::gelu(conv(y, "denoiser.conv3", 4));
  // 1x1 skip from the input: at large t the noise is close to x_t itself.
  const ag::Var skip = ag::conv2d(input, params_.get("denoiser.skip.w"), params_.get("denoiser.skip.b"), 1, 1);
  return ag::add(conv(y, "denoiser.conv_out", 1), skip);
}

OracleDenoiser::OracleDenoiser(NoiseSchedule schedule, Latent x0) : schedule_(std::move(schedule)), x0_(std::move(x0)) {
  validate_latent(x0_, "oracle target");
}

ag::Var OracleDenoiser::predict_noise(const ag::Var& x_t, std::size_t t, const Conditioning&) const {
  require_same_shape(x_t.value(), x0_, "oracle denoiser");
  const double ab = schedule_.alpha_bar(t);
  const double denom = std::sqrt(1.0 - ab);
  if (denom < 1e-12) throw SingularityError("oracle denoiser: alpha_bar too close to 1");
  return ag::scale(ag::sub(x_t, ag::constant(ag::scale(ag::constant(x0_), std::sqrt(ab)).value())), 1.0 / denom);
}

}  // namespace redit::diffusion
