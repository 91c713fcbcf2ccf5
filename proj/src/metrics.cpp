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

#include "redit/metrics.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "redit/errors.hpp"
#include "redit/ops.hpp"
#include "redit/synthetic.hpp"

namespace redit::metrics {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNegEigTolerance = 1e-8;
constexpr double kZeroShotTemperature = 0.07;

MatrixXd to_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.dim(0) != t.dim(1)) throw ShapeError(fmt::format("{} must be square, got {}", what, shape_str(t.shape())));
  MatrixXd m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m(i, j) = t.at(i, j);
  return m;
}

// Symmetric PSD square root; eigenvalues in [-tol, 0) are clipped to 0.
MatrixXd psd_sqrt(const MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kNegEigTolerance) throw RangeError(fmt::format("{} is not positive semidefinite (eigenvalue {})", what, ev(i)));
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_symmetric(const MatrixXd& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw RangeError(fmt::format("{} is not symmetric", what));
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  const std::size_t d = rows.front().size();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = rows[i][j];
  return out;
}

}  // namespace

double cosine_similarity_metric(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("cosine similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw SingularityError("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Moments feature_moments(const Tensor& features) {
  if (features.rank() != 2) throw ShapeError("feature_moments expects an (N, d) matrix");
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (n < 2) throw RangeError("covariance needs at least two samples");
  Moments m{Tensor({d}, 0.0), Tensor({d, d}, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += features.at(i, j) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        m.cov.at(a, b) += (features.at(i, a) - m.mean[a]) * (features.at(i, b) - m.mean[b]) / static_cast<double>(n - 1);
  return m;
}

double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2, const Tensor& cov2) {
  if (mu1.size() != mu2.size() || cov1.shape() != cov2.shape() || cov1.rank() != 2 || cov1.dim(0) != mu1.size()) {
    throw ShapeError("frechet_distance: inconsistent moment shapes");
  }
  const MatrixXd s1 = to_matrix(cov1, "cov1"), s2 = to_matrix(cov2, "cov2");
  check_symmetric(s1, "cov1");
  check_symmetric(s2, "cov2");
  // tr((S1 S2)^{1/2}) = tr((R S2 R)^{1/2}) with R = S1^{1/2}; the inner
  // product is symmetric PSD so a self-adjoint solver applies.
  const MatrixXd r = psd_sqrt(s1, "cov1");
  psd_sqrt(s2, "cov2");
  MatrixXd inner = r * s2 * r;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()(i);
    if (ev < -kNegEigTolerance) throw RangeError(fmt::format("frechet_distance: negative eigenvalue {} in covariance product", ev));
    tr_sqrt += std::sqrt(std::max(ev, 0.0));
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) diff += (mu1[i] - mu2[i]) * (mu1[i] - mu2[i]);
  return std::max(0.0, diff + s1.trace() + s2.trace() - 2.0 * tr_sqrt);
}

double frechet_distance(const Moments& a, const Moments& b) { return frechet_distance(a.mean, a.cov, b.mean, b.cov); }

double inception_score(const Tensor& probs) {
  if (probs.rank() != 2 || probs.dim(0) == 0 || probs.dim(1) == 0) throw ShapeError("inception_score expects an (N, K) matrix");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  std::vector<double> marginal(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = probs.at(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw RangeError(fmt::format("inception_score: row {} has entry {} outside [0, 1]", i, p));
      s += p;
      marginal[j] += p / static_cast<double>(n);
    }
    if (std::abs(s - 1.0) > 1e-6) throw RangeError(fmt::format("inception_score: row {} sums to {}", i, s));
  }
  double kl_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double kl = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = probs.at(i, j);
      if (p > 0.0) kl += p * (std::log(p) - std::log(marginal[j]));
    }
    kl_mean += kl / static_cast<double>(n);
  }
  return std::exp(kl_mean);
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed, std::size_t channels) : channels_(channels) {
  std::mt19937_64 rng(seed);
  const std::size_t widths[] = {channels, 8, 12, 16};
  for (std::size_t l = 0; l < 3; ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    weights_.push_back(randn({9 * in, out}, rng, 1.0 / std::sqrt(9.0 * static_cast<double>(in))));
    biases_.push_back(randn({out}, rng, 0.1));
  }
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& image) const {
  diffusion::validate_latent(image, "feature extractor input");
  if (image.dim(2) != channels_) throw ShapeError(fmt::format("feature extractor expects {} channels", channels_));
  std::vector<Tensor> out;
  ag::Var x = ag::constant(image);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    x = ag::tanh(ag::conv2d(x, ag::constant(weights_[l]), ag::constant(biases_[l]), 3, l + 1));
    out.push_back(x.value());
  }
  return out;
}

Tensor FeatureExtractor::pooled(const Tensor& image) const {
  std::vector<double> v;
  for (const auto& f : features(image)) {
    const std::size_t c = f.dim(2), positions = f.dim(0) * f.dim(1);
    std::vector<double> m(c, 0.0);
    for (std::size_t p = 0; p < positions; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) m[ch] += f[p * c + ch] / static_cast<double>(positions);
    v.insert(v.end(), m.begin(), m.end());
  }
  const std::size_t len = v.size();
  Tensor t({len}, std::move(v));
  const double n = l2_norm(t.data());
  if (n <= 1e-12) throw SingularityError("pooled features vanish");
  for (auto& e : t.storage()) e /= n;
  return t;
}

double perceptual_distance(const Tensor& a, const Tensor& b, const FeatureExtractor& extractor) {
  if (a.shape() != b.shape()) throw ShapeError(fmt::format("perceptual_distance: {} vs {}", shape_str(a.shape()), shape_str(b.shape())));
  const auto fa = extractor.features(a), fb = extractor.features(b);
  double total = 0.0;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    const std::size_t c = fa[l].dim(2), positions = fa[l].dim(0) * fa[l].dim(1);
    double layer = 0.0;
    for (std::size_t p = 0; p < positions; ++p) {
      double na = 0.0, nb = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        na += fa[l][p * c + ch] * fa[l][p * c + ch];
        nb += fb[l][p * c + ch] * fb[l][p * c + ch];
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double d = fa[l][p * c + ch] / na - fb[l][p * c + ch] / nb;
        layer += d * d;
      }
    }
    total += layer / static_cast<double>(positions);
  }
  return total;
}

std::string MetricReport::to_json() const {
  const nlohmann::json j = {{"clip_i", clip_i},
                            {"clip_t", clip_t},
                            {"clip_t_instruction", clip_t_instruction},
                            {"clip_t_description", clip_t_description},
                            {"dino", dino},
                            {"lpips_like", lpips_like},
                            {"fid", fid},
                            {"is_score", is_score},
                            {"n_samples", n_samples},
                            {"config_digest", config_digest}};
  return j.dump(2) + "\n";
}

std::string MetricReport::to_text() const {
  std::string out = fmt::format("{:<20} {:>12}\n", "metric", "value");
  auto row = [&](const char* name, double v) { out += fmt::format("{:<20} {:>12.6f}\n", name, v); };
  row("clip_i", clip_i);
  row("clip_t", clip_t);
  row("clip_t_instruction", clip_t_instruction);
  row("clip_t_description", clip_t_description);
  row("dino", dino);
  row("lpips_like", lpips_like);
  row("fid", fid);
  row("is_score", is_score);
  out += fmt::format("{:<20} {:>12}\n", "n_samples", n_samples);
  out += fmt::format("{:<20} {}\n", "config_digest", config_digest);
  return out;
}

std::vector<std::string> synthetic_class_prompts() {
  std::vector<std::string> out;
  for (const auto& c : data::shape_palette())
    for (auto k : {data::ShapeKind::kSquare, data::ShapeKind::kCircle, data::ShapeKind::kTriangle})
      out.push_back(fmt::format("a {} {}", c.name, data::shape_name(k)));
  return out;
}

MetricReport evaluate(const std::vector<EvalSample>& samples, const encoders::EncoderPair& enc,
                      const FeatureExtractor& extractor, const std::vector<std::string>& class_prompts,
                      const std::string& config_digest) {
  using encoders::Scale;
  if (samples.size() < 2) throw RangeError("evaluate needs at least two samples (FID covariance)");
  if (class_prompts.empty()) throw ConfigError("evaluate needs at least one class prompt");
  std::vector<Tensor> class_emb;
  for (const auto& p : class_prompts) class_emb.push_back(enc.encode_text(p, Scale::kGlobal));

  MetricReport r;
  r.n_samples = samples.size();
  r.config_digest = config_digest;
  const double n = static_cast<double>(samples.size());
  std::vector<Tensor> edited_emb, target_emb;
  Tensor probs({samples.size(), class_prompts.size()});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.edited.shape() != s.source.shape() || s.target.shape() != s.source.shape()) {
      throw ShapeError(fmt::format("evaluate: sample {} images differ in shape", i));
    }
    if (s.full_description.empty()) throw ConfigError(fmt::format("evaluate: sample {} has no full description", i));
    const Tensor e = enc.encode_image(s.edited, Scale::kGlobal);
    const Tensor src = enc.encode_image(s.source, Scale::kGlobal);
    edited_emb.push_back(e);
    target_emb.push_back(enc.encode_image(s.target, Scale::kGlobal));
    r.clip_i += cosine_similarity_metric(e, src) / n;
    r.clip_t_instruction += cosine_similarity_metric(e, enc.encode_text(s.instruction, Scale::kGlobal)) / n;
    r.clip_t_description += cosine_similarity_metric(e, enc.encode_text(s.full_description, Scale::kGlobal)) / n;
    r.dino += cosine_similarity_metric(extractor.pooled(s.edited), extractor.pooled(s.source)) / n;
    r.lpips_like += perceptual_distance(s.edited, s.target, extractor) / n;

    std::vector<double> logits(class_emb.size());
    double mx = -1e300;
    for (std::size_t k = 0; k < class_emb.size(); ++k) {
      logits[k] = cosine_similarity_metric(e, class_emb[k]) / kZeroShotTemperature;
      mx = std::max(mx, logits[k]);
    }
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t k = 0; k < logits.size(); ++k) probs.at(i, k) = logits[k] / z;
  }
  r.clip_t = r.clip_t_description;
  r.fid = frechet_distance(feature_moments(stack_rows(edited_emb)), feature_moments(stack_rows(target_emb)));
  r.is_score = inception_score(probs);
  return r;
}

std::vector<EvalSample> make_samples(const std::vector<data::EditRecord>& records, const std::vector<Tensor>& edited) {
  if (records.size() != edited.size()) {
    throw RangeError(fmt::format("{} records but {} edited images", records.size(), edited.size()));
  }
  std::vector<EvalSample> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto img = data::load_images(records[i]);
    out.push_back({img.source, img.target, edited[i], records[i].instruction, records[i].full_description});
  }
  return out;
}

}  // namespace redit::metrics
