// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/evaluate.hpp"

#include <cmath>

#include "avlab/featureio/avfe.hpp"
#include "avlab/featureio/resample.hpp"
#include "avlab/losses/losses.hpp"

namespace avlab::train {

namespace {

std::string meta_input(const model::Checkpoint& ckpt) {
  if (ckpt.meta.contains("input")) return ckpt.meta.at("input").get<std::string>();
  return ckpt.params.architecture() == model::Architecture::teacher ? "audio_visual" : "visual";
}

model::ForwardOptions forward_options(const model::Checkpoint& ckpt) {
  model::ForwardOptions f;
  f.fusion = model::parse_fusion_mode(ckpt.meta.value("fusion", std::string("adaptive")));
  f.use_prompt = ckpt.meta.value("use_prompt", true);
  return f;
}

double meta_tau(const model::Checkpoint& ckpt) { return ckpt.meta.value("tau", losses::LossConfig{}.tau); }

}  // namespace

Matrix<double> class_curves(std::span<const float> a, const Matrix<float>& m, double tau) {
  if (m.rows() != a.size()) throw DimensionError("class_curves: A and M frame counts differ");
  Matrix<double> out(m.rows(), m.cols());
  std::vector<double> e(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < m.cols(); ++c) mx = std::max(mx, double(m(i, c)) / tau);
    double z = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) z += e[c] = std::exp(double(m(i, c)) / tau - mx);
    for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = double(a[i]) * e[c] / z;
  }
  return out;
}

Matrix<float> score_matrix(const model::DetectionOutput& det) {
  const std::size_t n = det.a.size(), C = det.m.cols();
  Matrix<float> s(n, 1 + C);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, 0) = det.a[i];
    for (std::size_t c = 0; c < C; ++c) s(i, 1 + c) = det.m(i, c);
  }
  return s;
}

DataOptions data_options_for(const model::Checkpoint& ckpt, bool load_gt) {
  DataOptions opt;
  opt.stride = ckpt.meta.value("stride", std::size_t{1});
  opt.max_len = ckpt.meta.value("max_len", std::size_t{256});
  const auto input = meta_input(ckpt);
  opt.need_visual = input != "audio";
  opt.need_audio = input == "audio" || (input == "audio_visual" && forward_options(ckpt).fusion == model::FusionMode::adaptive);
  opt.load_gt = load_gt;
  return opt;
}

std::vector<Matrix<float>> score_samples(const model::Checkpoint& ckpt, const std::vector<VideoSample>& samples) {
  const auto input = meta_input(ckpt);
  const auto fwd = forward_options(ckpt);
  std::vector<Matrix<float>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const Matrix<float>& x = input == "audio" ? *s.audio : s.visual;
    const Matrix<float>* audio = input == "audio_visual" && s.audio ? &*s.audio : nullptr;
    out.push_back(score_matrix(model::detect(ckpt.params, x, audio, fwd)));
  }
  return out;
}

metrics::VideoScores to_video_scores(const VideoSample& sample, const Matrix<float>& scores, double tau) {
  if (scores.cols() < 3) throw DataError("score matrix for '" + sample.record.video_id + "' has too few columns");
  const std::size_t n = scores.rows(), C = scores.cols() - 1;
  std::vector<float> a(n);
  Matrix<float> m(n, C);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = scores(i, 0);
    for (std::size_t c = 0; c < C; ++c) m(i, c) = scores(i, 1 + c);
  }
  const auto curves = class_curves(a, m, tau);

  metrics::VideoScores vs;
  vs.video_id = sample.record.video_id;
  vs.gt = sample.frame_gt;
  const std::size_t raw = sample.raw_frames;
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = a[i];
  vs.a = io::expand_to_raw(col, raw);
  vs.class_curves = Matrix<double>(raw, C);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = curves(i, c);
    const auto full = io::expand_to_raw(col, raw);
    for (std::size_t r = 0; r < raw; ++r) vs.class_curves(r, c) = full[r];
  }
  return vs;
}

metrics::EvalReport evaluate(const model::Checkpoint& ckpt, const io::Manifest& manifest,
                             const metrics::ProposalConfig& proposals) {
  const auto samples = load_samples(manifest, data_options_for(ckpt, true));
  const auto scores = score_samples(ckpt, samples);
  const double tau = meta_tau(ckpt);
  std::vector<metrics::VideoScores> videos;
  for (std::size_t i = 0; i < samples.size(); ++i) videos.push_back(to_video_scores(samples[i], scores[i], tau));
  std::vector<std::string> classes;
  if (ckpt.meta.contains("classes")) {
    classes = ckpt.meta.at("classes").get<std::vector<std::string>>();
  } else {
    classes = class_names_for(manifest);
  }
  return metrics::evaluate_scores(videos, classes, proposals);
}

void write_score_dump(const model::Checkpoint& ckpt, const io::Manifest& manifest,
                      const std::filesystem::path& out_dir) {
  const auto samples = load_samples(manifest, data_options_for(ckpt, false));
  const auto scores = score_samples(ckpt, samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    io::FeatureSequence seq;
    seq.video_id = samples[i].record.video_id;
    seq.modality = io::Modality::scores;
    seq.data = scores[i];
    io::write_features(seq, out_dir / (seq.video_id + ".scores.avfe"));
  }
}

metrics::EvalReport evaluate_score_dump(const io::Manifest& manifest, const std::filesystem::path& scores_dir,
                                        double tau, const metrics::ProposalConfig& proposals) {
  DataOptions opt;
  opt.need_visual = false;
  opt.load_gt = true;
  const auto samples = load_samples(manifest, opt);
  const auto classes = class_names_for(manifest);
  std::vector<metrics::VideoScores> videos;
  for (const auto& s : samples) {
    const auto path = scores_dir / (s.record.video_id + ".scores.avfe");
    auto seq = io::read_features(path);
    if (seq.modality != io::Modality::scores) {
      throw DataError(path.string() + " is not a score dump (tag " + std::to_string(static_cast<int>(seq.modality)) + ")");
    }
    if (seq.dim() != 1 + classes.size()) {
      throw DataError(path.string() + ": " + std::to_string(seq.dim()) + " columns, expected 1 + " +
                      std::to_string(classes.size()));
    }
    videos.push_back(to_video_scores(s, seq.data, tau));
  }
  return metrics::evaluate_scores(videos, classes, proposals);
}

}  // namespace avlab::train
