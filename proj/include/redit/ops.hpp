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
#include <vector>

#include "redit/autograd.hpp"

// Differentiable tensor operations. Matrices are (rows, cols); images and
// latents are (height, width, channels).
namespace redit::ag {

// Elementwise, same shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var gelu(const Var& a);  // tanh approximation
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);

// Reductions to a single element.
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);

// Broadcast a rank-1 vector over the last axis of x.
Var add_lastdim(const Var& x, const Var& bias);
Var mul_lastdim(const Var& x, const Var& scale);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// x (N, in) times w (in, out) plus b (out).
Var linear(const Var& x, const Var& w, const Var& b);

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// Rank-1: v / ||v||. Rank-2: each row normalized.
Var l2_normalize(const Var& v, double min_norm = 1e-12);

Var mean_rows(const Var& a);  // (N, D) -> (D)
Var row(const Var& a, std::size_t i);
Var diag(const Var& a);  // (N, N) -> (N)
Var stack(const std::vector<Var>& rows);  // each (D) -> (N, D)
Var slice_cols(const Var& a, std::size_t start, std::size_t len);
Var concat_cols(const std::vector<Var>& parts);
Var reshape(const Var& a, Shape shape);

// Image ops on (H, W, C).
// w has shape (k*k*Cin, Cout) with row index (ky*k + kx)*Cin + c; zero "same" padding.
Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t kernel, std::size_t dilation = 1);
Var avg_pool2d(const Var& x, std::size_t k);
Var crop(const Var& x, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1);
// Half-pixel-centre bilinear interpolation with edge clamping.
Var resize_bilinear(const Var& x, std::size_t out_h, std::size_t out_w);
Var concat_channels(const Var& a, const Var& b);

// Mean of table rows selected by ids; table is (V, D).
Var embedding_bag_mean(const Var& table, const std::vector<int>& ids);

}  // namespace redit::ag
