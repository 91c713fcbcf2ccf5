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

#include "redit/trainers.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"
#include "redit/optimizer.hpp"
#include "redit/ops.hpp"

namespace redit::train {

namespace {

using encoders::Scale;

std::string digest_of(const std::vector<const ParamSet*>& sets) {
  std::string all;
  for (const ParamSet* s : sets) all += s->digest();
  return sha256_hex(std::string_view(all));
}

ag::Var zero_scalar() { return ag::constant(Tensor({1}, 0.0)); }

// One optimization step: returns the differentiable batch loss and the
// logged values.
using StepFn = std::function<std::pair<ag::Var, MetricRow>(const std::vector<std::size_t>& batch, std::size_t step)>;

struct Loop {
  std::vector<const ParamSet*> trainable;
  std::vector<const ParamSet*> frozen;
  StepFn step;
};

Checkpoint run_loop(ModelBundle& model, std::size_t n, const TrainConfig& config, const Ablation& ablation,
                    const Checkpoint* resume, const TrainHooks& hooks, const Loop& loop) {
  const std::string phase = phase_name(config.phase);
  AdamW opt(collect(loop.trainable), {config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  const std::size_t total = config.total_steps(n);

  std::vector<MetricRow> log;
  std::size_t start = 0;
  if (resume) {
    if (resume->config.phase != config.phase)
      throw ConfigError(fmt::format("cannot resume {} from a {} checkpoint", phase, phase_name(resume->config.phase)));
    if (resume->step > total) throw ConfigError(fmt::format("checkpoint step {} is past the run length {}", resume->step, total));
    model.load(resume->parameters);
    opt.load_state(resume->optimizer, resume->optimizer_step);
    log = resume->metrics_log;
    start = resume->step;
  }

  const std::string frozen_before = digest_of(loop.frozen);
  for (std::size_t step = start; step < total; ++step) {
    opt.zero_grad();
    auto [loss, row] = loop.step(batch_indices(n, config.batch_size, config.seed, step), step);
    if (loss.requires_grad()) loss.backward();
    opt.step();
    row.step = step + 1;
    if (hooks.on_step) hooks.on_step(row);
    log.push_back(std::move(row));
  }
  if (digest_of(loop.frozen) != frozen_before) throw Error(fmt::format("frozen parameters drifted during {}", phase));

  if (model.phases().empty() || model.phases().back() != phase) model.phases().push_back(phase);
  model.freeze_all();

  Checkpoint c = snapshot(model, config);
  c.ablation = ablation.names();
  c.step = total;
  c.metrics_log = std::move(log);
  c.optimizer = opt.state();
  c.optimizer_step = opt.steps();
  return c;
}

MetricRow row_of(double total, double mse, double region, double global) {
  return {0, {{"loss_total", total}, {"loss_mse", mse}, {"loss_region", region}, {"loss_global", global}}};
}

void require_examples(const std::vector<TrainExample>& data, const char* who) {
  if (data.empty()) throw RangeError(fmt::format("{}: empty dataset", who));
}

ag::Var embed_text(const encoders::EncoderPair& enc, const std::string& text, Scale s) {
  return enc.get(s).text_embedding(enc.tokenize(text, s));
}

}  // namespace

std::vector<TrainExample> make_examples(const std::vector<data::EditRecord>& records, std::size_t* skipped) {
  std::vector<TrainExample> out;
  std::size_t empty = 0;
  for (const auto& r : records) {
    auto images = data::load_images(r);
    const auto& mask = images.mask;
    if (mask.empty()) {
      ++empty;
      continue;
    }
    out.push_back({r.id, std::move(images.source), std::move(images.target), region::mask_to_bbox(mask), r.instruction,
                   r.region_description, r.full_description});
  }
  if (empty > 0) spdlog::warn("skipped {} record(s) with an empty mask", empty);
  if (skipped) *skipped = empty;
  return out;
}

std::vector<std::string> corpus_texts(const std::vector<TrainExample>& examples) {
  std::vector<std::string> out;
  for (const auto& e : examples) {
    out.push_back(e.instruction);
    out.push_back(e.region_description);
    out.push_back(e.full_description);
  }
  return out;
}

std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::size_t step) {
  if (n == 0 || batch_size == 0) throw RangeError("batch_indices: empty dataset or batch");
  const std::size_t per_epoch = (n + batch_size - 1) / batch_size;
  const std::size_t epoch = step / per_epoch, k = step % per_epoch;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0xba7c4 + epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t lo = k * batch_size, hi = std::min(n, lo + batch_size);
  return {perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi)};
}

Checkpoint snapshot(const ModelBundle& model, const TrainConfig& config) {
  Checkpoint c;
  c.model = model.describe();
  c.config = config;
  c.parameters = model.state();
  return c;
}

Checkpoint train_fusion(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        bool freeze_backbone, const Checkpoint* resume, const TrainHooks& hooks) {
  require_examples(data, "train_fusion");
  config.validate();
  if (config.phase != Phase::kFusionPhase1 && config.phase != Phase::kFusionPhase2)
    throw ConfigError("train_fusion needs a fusion phase config");
  model.freeze_all();
  model.fusion().params().set_trainable(true);
  if (!freeze_backbone) model.enc().region.set_trainable(true);

  const auto& enc = model.enc();
  const auto& renc = enc.region;
  const auto& fus = model.fusion();

  // With a frozen backbone the token maps and text embeddings are constants.
  std::vector<Tensor> region_tok, full_tok, text;
  if (freeze_backbone) {
    for (const auto& ex : data) {
      region_tok.push_back(renc.image_tokens(renc.prepare_image(ag::constant(region::crop(ex.target, ex.box)))).value());
      full_tok.push_back(renc.image_tokens(renc.prepare_image(ag::constant(ex.target))).value());
      text.push_back(embed_text(enc, ex.region_description, Scale::kRegion).value());
    }
  }

  Loop loop;
  loop.trainable = {&fus.params()};
  if (freeze_backbone) {
    loop.frozen = model.groups();
    loop.frozen.erase(std::find(loop.frozen.begin(), loop.frozen.end(), &fus.params()));
  } else {
    loop.trainable.push_back(&renc.image_params());
    loop.trainable.push_back(&renc.text_params());
    loop.frozen = {&enc.global.image_params(), &enc.global.text_params(), &model.denoiser().params()};
  }
  loop.step = [&](const std::vector<std::size_t>& batch, std::size_t) {
    std::vector<ag::Var> z, t;
    for (std::size_t i : batch) {
      const auto& ex = data[i];
      if (freeze_backbone) {
        z.push_back(fus.fuse(ag::constant(region_tok[i]), ag::constant(full_tok[i])));
        t.push_back(ag::constant(text[i]));
      } else {
        const ag::Var img = ag::constant(ex.target);
        const ag::Var r = renc.image_tokens(renc.prepare_image(region::crop(img, ex.box)));
        const ag::Var f = renc.image_tokens(renc.prepare_image(img));
        z.push_back(fus.fuse(r, f));
        t.push_back(embed_text(enc, ex.region_description, Scale::kRegion));
      }
    }
    ag::Var loss = losses::symmetric_contrastive(ag::stack(z), ag::stack(t), config.tau);
    const double v = loss.value()[0];
    return std::pair{loss, row_of(v, 0.0, v, 0.0)};
  };
  return run_loop(model, data.size(), config, {}, resume, hooks, loop);
}

Checkpoint train_global(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        const Checkpoint* resume, const TrainHooks& hooks) {
  require_examples(data, "train_global");
  for (const auto& ex : data)
    if (ex.full_description.empty()) throw ConfigError(fmt::format("record {} has no full description", ex.id));
  config.validate();
  if (config.phase != Phase::kGlobalFinetune) throw ConfigError("train_global needs a global_finetune config");
  model.freeze_all();
  model.enc().global.set_trainable(true);

  const auto& enc = model.enc();
  const auto& genc = enc.global;
  std::vector<encoders::TextTokens> tokens;
  for (const auto& ex : data) tokens.push_back(enc.tokenize(ex.full_description, Scale::kGlobal));

  Loop loop;
  loop.trainable = {&genc.image_params(), &genc.text_params()};
  loop.frozen = {&enc.region.image_params(), &enc.region.text_params(), &model.fusion().params(),
                 &model.denoiser().params()};
  loop.step = [&](const std::vector<std::size_t>& batch, std::size_t) {
    std::vector<ag::Var> z, t;
    for (std::size_t i : batch) {
      z.push_back(genc.image_embedding(genc.prepare_image(ag::constant(data[i].target))));
      t.push_back(genc.text_embedding(tokens[i]));
    }
    ag::Var loss = losses::symmetric_contrastive(ag::stack(z), ag::stack(t), config.tau);
    const double v = loss.value()[0];
    return std::pair{loss, row_of(v, 0.0, 0.0, v)};
  };
  return run_loop(model, data.size(), config, {}, resume, hooks, loop);
}

EditorExample prepare_editor_example(const ModelBundle& model, const TrainExample& ex) {
  if (ex.region_description.empty() || ex.full_description.empty())
    throw ConfigError(fmt::format("record {} is missing a description", ex.id));
  const auto& enc = model.enc();
  return {to_latent(ex.target),
          to_latent(ex.source),
          ex.box,
          model.instruction_embedding(ex.instruction),
          embed_text(enc, ex.region_description, Scale::kRegion).value(),
          embed_text(enc, ex.full_description, Scale::kGlobal).value()};
}

EditorTerms editor_loss(const ModelBundle& model, const diffusion::Denoiser& denoiser, const EditorExample& ex,
                        std::size_t t, const Tensor& eps, const losses::LossWeights& weights, const Ablation& ablation) {
  const auto& schedule = model.schedule();
  const ag::Var x_t = ag::constant(diffusion::forward_sample(ex.x0, t, eps, schedule));
  diffusion::Conditioning cond{ex.instruction, model.config().denoiser.image_conditioned ? ex.source : Tensor()};
  const ag::Var eps_hat = denoiser.predict_noise(x_t, t, cond);

  EditorTerms out;
  out.mse = losses::denoising_mse(eps_hat, ag::constant(eps));
  out.x0_hat = diffusion::predict_x0(x_t, t, eps_hat, schedule);
  const ag::Var image = latent_to_image(out.x0_hat);

  losses::LossWeights w = weights;
  out.region = zero_scalar();
  if (ablation.no_region) {
    w.region = 0.0;
  } else {
    const auto& renc = model.enc().region;
    const ag::Var r = renc.image_tokens(renc.prepare_image(region::crop(image, ex.box)));
    const ag::Var f = renc.image_tokens(renc.prepare_image(image));
    const auto mode = ablation.no_gate ? fusion::GateMode::kBypass : fusion::GateMode::kLearned;
    out.region = losses::cosine_loss(model.fusion().fuse(r, f, mode), ag::constant(ex.region_text));
  }
  out.global = zero_scalar();
  if (ablation.no_global) {
    w.global = 0.0;
  } else {
    const auto& genc = model.enc().global;
    out.global = losses::cosine_loss(genc.image_embedding(genc.prepare_image(image)), ag::constant(ex.full_text));
  }
  out.total = losses::total_loss(out.region, out.global, out.mse, w);
  return out;
}

Checkpoint train_editor(ModelBundle& model, const std::vector<TrainExample>& data, const TrainConfig& config,
                        const Ablation& ablation, const Checkpoint* resume, const TrainHooks& hooks) {
  config.validate();
  if (config.phase != Phase::kEditor) throw ConfigError("train_editor needs an editor config");
  std::vector<EditorExample> prepared;
  std::size_t empty = 0;
  for (const auto& ex : data) {
    if (ex.box.width() == 0 || ex.box.height() == 0) {
      ++empty;
      continue;
    }
    prepared.push_back(prepare_editor_example(model, ex));
  }
  if (empty > 0) spdlog::warn("train_editor: skipped {} record(s) with an empty mask", empty);
  if (prepared.empty()) throw RangeError("train_editor: empty dataset");

  model.freeze_all();
  model.denoiser().params().set_trainable(true);
  const auto& den = model.denoiser();
  const std::size_t T = model.schedule().steps();

  Loop loop;
  loop.trainable = {&den.params()};
  loop.frozen = model.groups();
  loop.frozen.pop_back();
  loop.step = [&](const std::vector<std::size_t>& batch, std::size_t step) {
    std::vector<ag::Var> totals;
    double mse = 0, reg = 0, glo = 0;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& ex = prepared[batch[k]];
      std::mt19937_64 rng(mix_seed(mix_seed(config.seed, 0x7e57 + step), k));
      const std::size_t t = std::uniform_int_distribution<std::size_t>(1, T)(rng);
      const Tensor eps = randn(ex.x0.shape(), rng);
      const EditorTerms terms = editor_loss(model, den, ex, t, eps, config.weights, ablation);
      totals.push_back(ag::reshape(terms.total, {1}));
      mse += terms.mse.value()[0] * inv;
      reg += terms.region.value()[0] * inv;
      glo += terms.global.value()[0] * inv;
    }
    ag::Var loss = ag::mean(ag::stack(totals));
    return std::pair{loss, row_of(loss.value()[0], mse, reg, glo)};
  };
  return run_loop(model, prepared.size(), config, ablation, resume, hooks, loop);
}

std::pair<Tensor, Tensor> fusion_embeddings(const ModelBundle& model, const std::vector<TrainExample>& data,
                                            fusion::GateMode mode) {
  require_examples(data, "fusion_embeddings");
  const auto& enc = model.enc();
  std::vector<Tensor> z, t;
  for (const auto& ex : data) {
    const Tensor r = enc.encode_image(region::crop(ex.target, ex.box), Scale::kRegion);
    const Tensor f = enc.encode_image(ex.target, Scale::kRegion);
    z.push_back(model.fusion().fuse(r, f, mode));
    t.push_back(enc.encode_text(ex.region_description, Scale::kRegion));
  }
  auto rows = [](const std::vector<Tensor>& v) {
    std::vector<ag::Var> vars;
    for (const auto& x : v) vars.push_back(ag::constant(x));
    return ag::stack(vars).value();
  };
  return {rows(z), rows(t)};
}

std::pair<Tensor, Tensor> global_embeddings(const ModelBundle& model, const std::vector<TrainExample>& data) {
  require_examples(data, "global_embeddings");
  std::vector<Tensor> imgs;
  for (const auto& ex : data) imgs.push_back(ex.target);
  std::vector<ag::Var> t;
  for (const auto& ex : data) t.push_back(ag::constant(model.enc().encode_text(ex.full_description, Scale::kGlobal)));
  return {model.enc().encode_images(imgs, Scale::kGlobal), ag::stack(t).value()};
}

double retrieval_accuracy(const Tensor& z, const Tensor& t) {
  if (z.rank() != 2 || z.shape() != t.shape()) throw ShapeError("retrieval_accuracy: expected matching (N, d) inputs");
  const std::size_t n = z.dim(0), d = z.dim(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += z.at(i, k) * t.at(j, k);
      if (s > best_s) best_s = s, best = j;
    }
    hits += best == i;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace redit::train
