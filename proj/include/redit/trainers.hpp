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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "redit/checkpoint.hpp"
#include "redit/dataset.hpp"
#include "redit/model.hpp"
#include "redit/region.hpp"
#include "redit/train_config.hpp"

namespace redit::train {

struct TrainExample {
  std::string id;
  Tensor source;  // (H, W, C) in [0, 1]
  Tensor target;
  region::BoundingBox box;
  std::string instruction;
  std::string region_description;
  std::string full_description;
};

// Loads images and bounding boxes. Records with an empty mask are skipped
// and counted in `skipped`.
std::vector<TrainExample> make_examples(const std::vector<data::EditRecord>& records, std::size_t* skipped = nullptr);

// Every text in the examples, for building a vocabulary.
std::vector<std::string> corpus_texts(const std::vector<TrainExample>& examples);

struct TrainHooks {
  std::function<void(const MetricRow&)> on_step;
};

// Example indices for 0-indexed `step`: a seed-determined permutation per
// epoch, cut into consecutive batches.
std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::size_t step);

// Phase 1 (freeze_backbone) optimizes only the fusion module; phase 2 also
// updates the region encoder. Loss: symmetric contrastive between fused
// region embeddings and region-description embeddings.
Checkpoint train_fusion(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        bool freeze_backbone, const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});

// Contrastive finetune of the global encoder on (target image, full description).
Checkpoint train_global(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});

// Denoiser training with frozen encoders and fusion.
Checkpoint train_editor(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        const Ablation& ablation = {}, const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});

// Wraps the bundle's current state (no optimizer moments) as a checkpoint.
Checkpoint snapshot(const ModelBundle& model, const TrainConfig& config);

/// Constant inputs of one editor training example.
struct EditorExample {
  Tensor x0;      // target latent
  Tensor source;  // source latent
  region::BoundingBox box;
  Tensor instruction;  // global text embedding
  Tensor region_text;  // region text embedding
  Tensor full_text;    // global text embedding of the full description
};

EditorExample prepare_editor_example(const ModelBundle& model, const TrainExample& ex);

struct EditorTerms {
  ag::Var total;
  ag::Var mse;
  ag::Var region;  // zero constant when ablated
  ag::Var global;  // zero constant when ablated
  ag::Var x0_hat;
};

// One-sample editor objective at timestep t with injected noise eps.
EditorTerms editor_loss(const ModelBundle& model, const diffusion::Denoiser& denoiser, const EditorExample& ex,
                        std::size_t t, const Tensor& eps, const losses::LossWeights& weights, const Ablation& ablation);

// Fused region embeddings (N, d) and region-text embeddings (N, d).
std::pair<Tensor, Tensor> fusion_embeddings(const ModelBundle& model, const std::vector<TrainExample>& data,
                                            fusion::GateMode mode = fusion::GateMode::kLearned);
// Global image embeddings of the targets and full-description embeddings.
std::pair<Tensor, Tensor> global_embeddings(const ModelBundle& model, const std::vector<TrainExample>& data);

// Fraction of rows of Z T^T whose argmax is the diagonal entry.
double retrieval_accuracy(const Tensor& z, const Tensor& t);

}  // namespace redit::train
