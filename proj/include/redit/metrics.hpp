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
#include <string>
#include <vector>

#include "redit/dataset.hpp"
#include "redit/encoders.hpp"

namespace redit::metrics {

// a.b / (|a| |b|); throws SingularityError on a zero vector.
double cosine_similarity_metric(const Tensor& a, const Tensor& b);

struct Moments {
  Tensor mean;  // (d)
  Tensor cov;   // (d, d), unbiased
};

// Rows of `features` (N, d) are samples; requires N >= 2.
Moments feature_moments(const Tensor& features);

// |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}). Covariances must be
// symmetric and PSD up to eigenvalues of -1e-8.
double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2, const Tensor& cov2);
double frechet_distance(const Moments& a, const Moments& b);

// exp(mean_i KL(p_i || mean_j p_j)) for an (N, K) row-stochastic matrix.
double inception_score(const Tensor& probs);

/// Fixed, randomly initialized three-layer convolutional stack used for
/// the perceptual distance and the DINO-style similarity.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(std::uint64_t seed = 2024, std::size_t channels = 3);

  // Per-layer (H_l, W_l, C_l) feature maps.
  std::vector<Tensor> features(const Tensor& image) const;
  // Unit-norm concatenation of each layer's spatial mean.
  Tensor pooled(const Tensor& image) const;
  std::size_t layers() const { return weights_.size(); }

 private:
  std::size_t channels_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

// Sum over layers of the mean (over positions) squared difference between
// channel-unit-normalized features. Uniform layer weights.
double perceptual_distance(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor);

struct MetricReport {
  double clip_i = 0.0;              // edited vs source, global image embeddings
  double clip_t = 0.0;              // alias of clip_t_description
  double clip_t_instruction = 0.0;  // edited image vs instruction text
  double clip_t_description = 0.0;  // edited image vs full target description
  double dino = 0.0;                // edited vs source, extractor features
  double lpips_like = 0.0;          // edited vs target
  double fid = 0.0;                 // edited vs target global embeddings
  double is_score = 1.0;
  std::size_t n_samples = 0;
  std::string config_digest;

  std::string to_json() const;
  std::string to_text() const;
};

struct EvalSample {
  Tensor source;
  Tensor target;
  Tensor edited;
  std::string instruction;
  std::string full_description;
};

// Classes used by the zero-shot classifier behind the inception score.
std::vector<std::string> synthetic_class_prompts();

MetricReport evaluate(const std::vector<EvalSample>& samples, const encoders::EncoderPair& enc,
                      const FeatureExtractor& extractor, const std::vector<std::string>& class_prompts,
                      const std::string& config_digest);

// Loads source/target images for each record and pairs them with `edited`.
std::vector<EvalSample> make_samples(const std::vector<data::EditRecord>& records, const std::vector<Tensor>& edited);

}  // namespace redit::metrics
