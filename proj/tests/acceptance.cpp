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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "gradcheck.hpp"
#include "redit/describe.hpp"
#include "redit/diffusion.hpp"
#include "redit/digest.hpp"
#include "redit/fusion.hpp"
#include "redit/losses.hpp"
#include "redit/metrics.hpp"
#include "redit/ops.hpp"
#include "redit/prompt.hpp"
#include "redit/region.hpp"
#include "redit/synthetic.hpp"
#include "redit/trainers.hpp"
#include "redit/vlm.hpp"
#include "test_util.hpp"

using namespace redit;
using redit::testing::gradcheck;
using redit::testing::random_tensor;
using redit::testing::random_unit_rows;
using redit::testing::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

// ---- 1: diffusion round trip ----

Outcome diffusion_round_trip() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> side(1, 8), steps(1, 200);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = diffusion::make_schedule(steps(rng), 1e-4, 0.02);
    std::uniform_int_distribution<std::size_t> pick_t(1, s.steps());
    const std::size_t t = pick_t(rng);
    const Tensor x0 = random_tensor({side(rng), side(rng), 3}, rng);
    const Tensor eps = randn(x0.shape(), rng);
    const Tensor back = diffusion::predict_x0(diffusion::forward_sample(x0, t, eps, s), t, eps, s);
    worst = std::max(worst, max_abs_diff(back, x0) / std::max(l2_norm(x0.data()), 1e-300));
  }
  return {worst < 1e-5, fmt::format("100 samples, worst relative error {:.2e} (tol 1e-5)", worst)};
}

// ---- 2: gradient suite ----

Outcome gradient_suite() {
  std::mt19937_64 rng(2002);
  std::vector<std::pair<std::string, double>> errs;

  fusion::FusionConfig fc;
  fc.dim = 8;
  fc.heads = 2;
  fc.out_dim = 6;
  fusion::FusionModule f(fc, 13);
  ag::Var r = ag::parameter(random_tensor({3, 8}, rng));
  ag::Var full = ag::parameter(random_tensor({4, 8}, rng));
  const Tensor w = random_tensor({6}, rng);
  auto fuse_fn = [&] { return ag::dot(f.fuse(r, full), ag::constant(w)); };
  for (const auto& [name, _] : f.params().items()) errs.emplace_back(name, gradcheck(fuse_fn, f.params().get(name)));
  errs.emplace_back("fuse.region_input", gradcheck(fuse_fn, r));
  errs.emplace_back("fuse.full_input", gradcheck(fuse_fn, full));

  ag::Var a = ag::parameter(random_tensor({6}, rng)), b = ag::parameter(random_tensor({6}, rng));
  auto cos = [&] { return losses::cosine_loss(a, b); };
  errs.emplace_back("cosine_loss.a", gradcheck(cos, a));
  errs.emplace_back("cosine_loss.b", gradcheck(cos, b));

  ag::Var e1 = ag::parameter(random_tensor({3, 3, 2}, rng)), e2 = ag::parameter(random_tensor({3, 3, 2}, rng));
  auto mse = [&] { return losses::denoising_mse(e1, e2); };
  errs.emplace_back("denoising_mse.eps_hat", gradcheck(mse, e1));
  errs.emplace_back("denoising_mse.eps", gradcheck(mse, e2));

  ag::Var zr = ag::parameter(random_tensor({4, 5}, rng)), tr = ag::parameter(random_tensor({4, 5}, rng));
  auto con = [&] { return losses::symmetric_contrastive(ag::l2_normalize(zr), ag::l2_normalize(tr), 0.2); };
  errs.emplace_back("symmetric_contrastive.z", gradcheck(con, zr));
  errs.emplace_back("symmetric_contrastive.t", gradcheck(con, tr));

  ag::Var lr = ag::parameter(Tensor::scalar(0.4)), lg = ag::parameter(Tensor::scalar(0.7)),
          lm = ag::parameter(Tensor::scalar(1.1));
  auto tot = [&] { return losses::total_loss(ag::square(lr), ag::square(lg), ag::square(lm), {0.5, 2.0, 1.5}); };
  errs.emplace_back("total_loss.region", gradcheck(tot, lr));
  errs.emplace_back("total_loss.global", gradcheck(tot, lg));
  errs.emplace_back("total_loss.mse", gradcheck(tot, lm));

  ag::Var x = ag::parameter(random_tensor({5, 6, 2}, rng));
  const Tensor wc = random_tensor({3, 3, 2}, rng);
  auto crop_fn = [&] { return ag::dot(region::crop(x, {1, 2, 4, 5}), ag::constant(wc)); };
  errs.emplace_back("crop", gradcheck(crop_fn, x));
  const Tensor wr = random_tensor({7, 4, 2}, rng);
  auto resize_fn = [&] { return ag::dot(region::resize_region(x, 7, 4), ag::constant(wr)); };
  errs.emplace_back("resize_region", gradcheck(resize_fn, x));
  auto both = [&] { return ag::dot(region::resize_region(region::crop(x, {0, 1, 5, 4}), 7, 4), ag::constant(wr)); };
  errs.emplace_back("crop+resize", gradcheck(both, x));

  const auto worst = std::max_element(errs.begin(), errs.end(), [](auto& p, auto& q) { return p.second < q.second; });
  return {worst->second < 1e-4,
          fmt::format("{} checks, worst {} at {:.2e} (tol 1e-4)", errs.size(), worst->first, worst->second)};
}

// ---- 3: contrastive oracle ----

double contrastive_oracle(const Tensor& z, const Tensor& t, double tau) {
  const std::size_t n = z.dim(0), d = z.dim(1);
  auto sim = [&](const Tensor& p, std::size_t i, const Tensor& q, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += p.at(i, k) * q.at(j, k);
    return s / tau;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double den_zt = 0.0, den_tz = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      den_zt += std::exp(sim(z, i, t, j));
      den_tz += std::exp(sim(t, i, z, j));
    }
    total += -std::log(std::exp(sim(z, i, t, i)) / den_zt) - std::log(std::exp(sim(t, i, z, i)) / den_tz);
  }
  return total / (2.0 * static_cast<double>(n));
}

Outcome contrastive() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> tau_dist(0.05, 1.0);
  double worst = 0.0;
  for (int batch = 0; batch < 50; ++batch) {
    const std::size_t n = 1 + batch % 8;
    const Tensor z = random_unit_rows(n, 6, rng), t = random_unit_rows(n, 6, rng);
    const double tau = tau_dist(rng);
    worst = std::max(worst, std::abs(losses::symmetric_contrastive(z, t, tau) - contrastive_oracle(z, t, tau)));
  }
  const Tensor eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  const double hand = losses::symmetric_contrastive(eye, eye, 1.0);
  const bool ok = worst < 1e-8 && std::abs(hand - 0.31326) < 1e-5;
  return {ok, fmt::format("50 batches, worst |diff| {:.2e} (tol 1e-8); N=2 hand case {:.6f} (0.31326 +- 1e-5)", worst, hand)};
}

// ---- 4: closed gate ----

Outcome closed_gate() {
  std::mt19937_64 rng(4004);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 20; ++trial) {
    fusion::FusionConfig fc;
    fc.dim = 8;
    fc.heads = 2;
    fc.out_dim = 6;
    fusion::FusionModule f(fc, 100 + trial);
    f.params().get("fusion.gate.b").mutable_value().fill(-20.0);
    const Tensor r = random_tensor({3 + trial % 3, 8}, rng);
    const Tensor full = random_tensor({5, 8}, rng);
    const Tensor base = f.fuse(r, full);

    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor permuted({5, 8});
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 8; ++j) permuted.at(i, j) = full.at(perm[i], j);
    worst = std::max(worst, max_abs_diff(base, f.fuse(r, permuted)));

    Tensor replaced = full;
    std::uniform_int_distribution<std::size_t> row(0, 4);
    const std::size_t k = row(rng);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (std::size_t j = 0; j < 8; ++j) replaced.at(k, j) = u(rng);
    worst = std::max(worst, max_abs_diff(base, f.fuse(r, replaced)));
    worst = std::max(worst, max_abs_diff(base, f.fuse(r, random_tensor({1 + trial % 7, 8}, rng, -3.0, 3.0))));
  }
  return {worst < 1e-7, fmt::format("20 trials, worst output change {:.2e} (tol 1e-7)", worst)};
}

// ---- 5: bbox oracle ----

region::BoundingBox scan_oracle(const region::RegionMask& m) {
  std::size_t x0 = m.width(), y0 = m.height(), x1 = 0, y1 = 0;
  for (std::size_t y = 0; y < m.height(); ++y)
    for (std::size_t x = 0; x < m.width(); ++x)
      if (m.at(y, x)) {
        x0 = std::min(x0, x), y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1), y1 = std::max(y1, y + 1);
      }
  return {x0, y0, x1, y1};
}

Outcome bbox() {
  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<std::size_t> side(1, 40);
  std::uniform_real_distribution<double> dens(0.001, 0.5);
  std::size_t match = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t h = side(rng), w = side(rng);
    std::bernoulli_distribution on(dens(rng));
    region::RegionMask m(h, w);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) m.set(y, x, on(rng));
    if (m.empty()) m.set(rng() % h, rng() % w, true);
    if (region::mask_to_bbox(m) == scan_oracle(m)) ++match;
  }
  return {match == 1000, fmt::format("{}/1000 masks match the exhaustive scan", match)};
}

// ---- 6: metric formulas ----

Outcome metric_formulas() {
  std::mt19937_64 rng(6006);
  const Tensor mu = random_tensor({4}, rng);
  const Tensor a = random_tensor({4, 4}, rng);
  Tensor cov({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t k = 0; k < 4; ++k) cov.at(i, j) += a.at(i, k) * a.at(j, k);
      if (i == j) cov.at(i, j) += 0.1;
    }
  const double fid_same = metrics::frechet_distance(mu, cov, mu, cov);
  const Tensor one({1, 1}, 1.0);
  const double fid_1d = metrics::frechet_distance(Tensor({1}, 0.0), one, Tensor({1}, 1.0), one);

  Tensor same({6, 5});
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> row(5);
  double z = 0.0;
  for (auto& v : row) z += (v = u(rng));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) same.at(i, j) = row[j] / z;
  const double is_same = metrics::inception_score(same);
  Tensor onehot({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) onehot.at(i, i) = 1.0;
  const double is_onehot = metrics::inception_score(onehot);

  const bool ok = std::abs(fid_same) < 1e-8 && std::abs(fid_1d - 1.0) < 1e-8 && std::abs(is_same - 1.0) < 1e-8 &&
                  std::abs(is_onehot - 4.0) < 1e-6;
  return {ok, fmt::format("FID same {:.1e}, FID 1-D {:.10f}, IS same {:.10f}, IS one-hot {:.8f}", fid_same, fid_1d,
                          is_same, is_onehot)};
}

// ---- shared corpus helpers ----

std::vector<train::TrainExample> corpus(std::size_t n, std::uint64_t seed, const std::string& dir) {
  return train::make_examples(data::load_manifest(data::generate_synthetic(n, seed, dir)).records);
}

std::unique_ptr<train::ModelBundle> fresh_model(const std::vector<train::TrainExample>& vocab_source,
                                                std::uint64_t seed) {
  train::ModelConfig mc;
  mc.seed = seed;
  return std::make_unique<train::ModelBundle>(mc, encoders::Vocabulary::build(train::corpus_texts(vocab_source)));
}

// ---- 7: fusion efficacy and permutation control ----

Outcome fusion_efficacy(const std::string& root) {
  using train::Phase;
  std::vector<std::string> parts;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ex = corpus(8, seed, fmt::format("{}/fusion{}", root, seed));
    auto m = fresh_model(ex, seed);
    const auto cfg = train::preset_config(Phase::kFusionPhase1, train::Preset::kDesk, seed);
    std::size_t reached = 0;
    train::TrainHooks hooks;
    hooks.on_step = [&](const train::MetricRow& row) {
      if (reached == 0 && row.step % 10 == 0) {
        const auto [z, t] = train::fusion_embeddings(*m, ex);
        if (train::retrieval_accuracy(z, t) == 1.0) reached = row.step;
      }
    };
    train::train_fusion(*m, ex, cfg, true, nullptr, hooks);
    const auto [z, t] = train::fusion_embeddings(*m, ex);
    const double acc = train::retrieval_accuracy(z, t);
    if (acc == 1.0 && reached == 0) reached = cfg.steps;
    const bool seed_ok = acc == 1.0 && reached > 0 && reached <= 500;
    ok &= seed_ok;
    parts.push_back(fmt::format("seed {} {:.0f}/8 (first 8/8 by step {})", seed, acc * 8, reached));
  }

  // Shuffled pairs: train on deranged descriptions, score held-out records.
  std::size_t hits = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto all = corpus(16, 100 + seed, fmt::format("{}/perm{}", root, seed));
    std::vector<train::TrainExample> tr(all.begin(), all.begin() + 8), held(all.begin() + 8, all.end());
    auto shuffled = tr;
    for (std::size_t i = 0; i < 8; ++i) {
      shuffled[i].region_description = tr[(i + 1) % 8].region_description;
      shuffled[i].full_description = tr[(i + 3) % 8].full_description;
    }
    auto m = fresh_model(all, seed);
    train::train_fusion(*m, shuffled, train::preset_config(Phase::kFusionPhase1, train::Preset::kDesk, seed), true);
    const auto [z, t] = train::fusion_embeddings(*m, held);
    hits += static_cast<std::size_t>(std::lround(train::retrieval_accuracy(z, t) * 8));
    total += 8;
  }
  const double p = 1.0 / 8.0, rate = static_cast<double>(hits) / static_cast<double>(total);
  const double bound = p + 2.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));
  ok &= rate <= bound;
  parts.push_back(fmt::format("shuffled control {}/{} held-out hits = {:.3f} (chance 0.125, bound {:.3f})", hits,
                              total, rate, bound));
  std::string detail;
  for (const auto& s : parts) detail += (detail.empty() ? "" : "; ") + s;
  return {ok, detail};
}

// ---- 8 and 9: editor training and ablations share the trained encoders ----

struct EditorRun {
  std::vector<train::MetricRow> log;
  double clip_i = 0.0, clip_t = 0.0;
};

struct SeedRuns {
  EditorRun full, no_region, no_global, no_gate;
};

constexpr std::size_t kEditSamples = 4;  // sampling seeds per record

EditorRun run_editor(const train::Checkpoint& pre, const std::vector<train::TrainExample>& ex, std::uint64_t seed,
                     const train::Ablation& ablation, const metrics::FeatureExtractor& fx) {
  auto m = train::ModelBundle::from_checkpoint(pre);
  const auto ck =
      train::train_editor(*m, ex, train::preset_config(train::Phase::kEditor, train::Preset::kDesk, seed), ablation);
  std::vector<metrics::EvalSample> samples;
  for (std::size_t k = 0; k < kEditSamples; ++k)
    for (const auto& e : ex)
      samples.push_back({e.source, e.target, train::edit_image(*m, e.source, e.instruction, m->schedule().steps(), 99 + k),
                         e.instruction, e.full_description});
  const auto r = metrics::evaluate(samples, m->enc(), fx, metrics::synthetic_class_prompts(), "");
  return {ck.metrics_log, r.clip_i, r.clip_t};
}

std::vector<SeedRuns> editor_runs(const std::string& root) {
  using train::Phase;
  std::vector<SeedRuns> out;
  const metrics::FeatureExtractor fx;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ex = corpus(8, seed, fmt::format("{}/editor{}", root, seed));
    auto m = fresh_model(ex, seed);
    train::train_fusion(*m, ex, train::preset_config(Phase::kFusionPhase1, train::Preset::kDesk, seed), true);
    const auto pre = train::train_global(*m, ex, train::preset_config(Phase::kGlobalFinetune, train::Preset::kDesk, seed));
    SeedRuns s;
    s.full = run_editor(pre, ex, seed, {}, fx);
    s.no_region = run_editor(pre, ex, seed, {true, false, false}, fx);
    s.no_global = run_editor(pre, ex, seed, {false, true, false}, fx);
    s.no_gate = run_editor(pre, ex, seed, {false, false, true}, fx);
    out.push_back(std::move(s));
  }
  return out;
}

double window_mean(const std::vector<train::MetricRow>& log, const std::string& key, std::size_t begin,
                   std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log[i].get(key);
  return s / static_cast<double>(end - begin);
}

Outcome editor_trend(const std::vector<SeedRuns>& runs) {
  bool ok = true;
  std::string detail;
  for (std::size_t seed = 0; seed < runs.size(); ++seed) {
    const auto& log = runs[seed].full.log;
    if (log.size() < 20) return {false, fmt::format("seed {}: only {} logged steps", seed, log.size())};
    const double ref = window_mean(log, "loss_total", 0, 10);
    double best = ref;
    std::size_t best_step = 10;
    for (std::size_t end = 10; end <= std::min<std::size_t>(log.size(), 300); ++end) {
      const double ma = window_mean(log, "loss_total", end - 10, end);
      if (ma < best) best = ma, best_step = log[end - 1].step;
    }
    bool seed_ok = best < 0.5 * ref;
    std::string branches;
    for (const char* key : {"loss_mse", "loss_region", "loss_global"}) {
      const double first = window_mean(log, key, 0, 10), last = window_mean(log, key, log.size() - 10, log.size());
      seed_ok &= last < first;
      branches += fmt::format(" {} {:.3f}->{:.3f}", key + 5, first, last);
    }
    ok &= seed_ok;
    detail += fmt::format("{}seed {}: MA10 {:.3f} -> best {:.3f} at step {} ({:.0f}%);{}", seed ? "; " : "", seed, ref,
                          best, best_step, 100.0 * best / ref, branches);
  }
  return {ok, detail};
}

Outcome ablation_direction(const std::vector<SeedRuns>& runs) {
  bool ok = true;
  std::string detail;
  const std::pair<const char*, EditorRun SeedRuns::*> variants[] = {
      {"no_region", &SeedRuns::no_region}, {"no_global", &SeedRuns::no_global}, {"no_gate", &SeedRuns::no_gate}};
  for (const auto& [name, member] : variants) {
    std::size_t wins = 0;
    for (const auto& s : runs) {
      const EditorRun& v = s.*member;
      if (s.full.clip_i > v.clip_i && s.full.clip_t > v.clip_t) ++wins;
    }
    ok &= wins >= 2;
    detail += fmt::format("{}{} {}/3", detail.empty() ? "" : ", ", name, wins);
  }
  detail += " seeds with full strictly better on both (need >= 2)";
  for (std::size_t seed = 0; seed < runs.size(); ++seed) {
    const auto& s = runs[seed];
    detail += fmt::format("; seed {} clip_i/clip_t full {:.3f}/{:.3f} no_region {:.3f}/{:.3f} no_global {:.3f}/{:.3f} "
                          "no_gate {:.3f}/{:.3f}",
                          seed, s.full.clip_i, s.full.clip_t, s.no_region.clip_i, s.no_region.clip_t,
                          s.no_global.clip_i, s.no_global.clip_t, s.no_gate.clip_i, s.no_gate.clip_t);
  }
  return {ok, detail};
}

// ---- 10: prompt fidelity and cache idempotence ----

Outcome prompt_fidelity(const std::string& root) {
  std::ifstream in(std::string(REDIT_TEST_FIXTURES) + "/instructions.json");
  const auto instructions = nlohmann::json::parse(in).get<std::vector<std::string>>();
  const std::vector<std::string> markers = {"overview of the setting",
                                            "description of each major object",
                                            "If humans or animals are present",
                                            "background elements: furniture",
                                            "Clear spatial relationships",
                                            "targeted in the editing instruction",
                                            "Style Requirement"};
  std::size_t good = 0;
  for (const auto& instr : instructions) {
    const std::string p = describe::build_prompt(instr);
    bool ok = describe::count_occurrences(p, instr) == 1;
    std::size_t pos = 0;
    for (const auto& marker : markers) {
      const auto at = p.find(marker, pos);
      ok &= at != std::string::npos;
      if (at != std::string::npos) pos = at + marker.size();
    }
    good += ok;
  }

  auto records = data::load_manifest(data::generate_synthetic(6, 10, root + "/describe")).records;
  const std::string cache_path = root + "/describe/descriptions.jsonl";
  std::size_t first_calls = 0, second_calls = 0;
  describe::DescribeStats second;
  {
    describe::MockVLM mock(1);
    describe::DescriptionCache cache(cache_path);
    describe::describe_records(records, mock, cache, {}, 2);
    first_calls = mock.calls();
  }
  {
    describe::MockVLM mock(1);
    describe::DescriptionCache cache(cache_path);
    second = describe::describe_records(records, mock, cache, {}, 2);
    second_calls = mock.calls();
  }
  const bool ok = instructions.size() == 20 && good == 20 && first_calls == records.size() && second_calls == 0 &&
                  second.hits == records.size();
  return {ok, fmt::format("{}/{} prompts complete with the instruction exactly once; mock calls {} then {} on rerun "
                          "({} cache hits)",
                          good, instructions.size(), first_calls, second_calls, second.hits)};
}

// ---- 11: end-to-end determinism through the CLI executable ----

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& root) {
  const std::string cli = REDIT_CLI_PATH;
  auto pipeline = [&](const std::string& dir) {
    const std::vector<std::string> cmds = {
        fmt::format("synth --n 8 --seed 11 --out {}/data", dir),
        fmt::format("describe --manifest {}/data/manifest.jsonl --mock", dir),
        fmt::format("train --phase fusion1 --manifest {0}/data/manifest.jsonl --out {0}/fusion --seed 11", dir),
        fmt::format("edit --checkpoint {0}/fusion/checkpoint.rdck --manifest {0}/data/manifest.jsonl --out {0}/edited "
                    "--steps 10 --edit-seed 3",
                    dir),
        fmt::format("eval --manifest {0}/data/manifest.jsonl --edited {0}/edited --checkpoint {0}/fusion/checkpoint.rdck "
                    "--out {0}/report",
                    dir)};
    for (const auto& c : cmds) {
      const std::string line = fmt::format("\"{}\" --log-level off {} > \"{}/log.txt\" 2>&1", cli, c, dir);
      if (std::system(line.c_str()) != 0) throw std::runtime_error("command failed: " + c);
    }
  };
  const std::string a = root + "/run_a", b = root + "/run_b";
  std::filesystem::create_directories(a);
  std::filesystem::create_directories(b);
  pipeline(a);
  pipeline(b);
  const bool manifest = slurp(a + "/data/manifest.jsonl") == slurp(b + "/data/manifest.jsonl");
  const std::string da = sha256_file(a + "/fusion/checkpoint.rdck"), db = sha256_file(b + "/fusion/checkpoint.rdck");
  auto report_metrics = [](const std::string& path) {
    auto j = nlohmann::json::parse(slurp(path));
    j.erase("config_digest");  // hashes the echoed config, which names the run directory
    return j.dump();
  };
  const bool reports = report_metrics(a + "/report/report.json") == report_metrics(b + "/report/report.json");
  return {manifest && da == db && reports,
          fmt::format("manifests {}, checkpoint digests {} ({}...), report metrics {}", manifest ? "identical" : "differ",
                      da == db ? "identical" : "differ", da.substr(0, 16), reports ? "identical" : "differ")};
}

}  // namespace

int main() {
  TempDir root("redit_acceptance");
  report(1, "diffusion round trip", diffusion_round_trip);
  report(2, "gradient suite", gradient_suite);
  report(3, "contrastive oracle", contrastive);
  report(4, "closed-gate invariance", closed_gate);
  report(5, "bbox oracle", bbox);
  report(6, "metric formulas", metric_formulas);
  report(7, "fusion training efficacy", [&] { return fusion_efficacy(root.str()); });

  std::vector<SeedRuns> runs;
  std::string run_error;
  const auto start = std::chrono::steady_clock::now();
  try {
    runs = editor_runs(root.str());
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  std::printf("editor training and sampling for criteria 8 and 9 (3 seeds x 4 variants): %.1f s\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  auto guarded = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!run_error.empty()) return {false, "editor runs failed: " + run_error};
      return fn(runs);
    };
  };
  report(8, "editor training trend", guarded(editor_trend));
  report(9, "ablation direction", guarded(ablation_direction));
  report(10, "prompt fidelity and cache idempotence", [&] { return prompt_fidelity(root.str()); });
  report(11, "pipeline determinism", [&] { return determinism(root.str()); });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
