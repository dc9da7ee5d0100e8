// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/featureio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "avlab/common/rng.hpp"

namespace avlab::io {

namespace {

using Vec = std::vector<double>;

Vec gaussian(Rng& rng, std::size_t n, double scale) {
  Vec v(n);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return v;
}

Vec unit(Rng& rng, std::size_t n) {
  Vec v = gaussian(rng, n, 1.0);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

struct World {
  std::vector<Vec> prototypes;     // C x latent_dim
  std::vector<double> visual_proj;  // latent_dim x d
  std::vector<double> audio_proj;
};

World make_world(const SynthConfig& cfg, Rng& rng) {
  World w;
  const std::size_t ld = cfg.latent_dim;
  Vec normal = gaussian(rng, ld, 1.0);
  w.prototypes.push_back(normal);
  for (std::size_t c = 1; c < cfg.classes.size(); ++c) {
    Vec dir = unit(rng, ld);
    Vec p(ld);
    for (std::size_t i = 0; i < ld; ++i) p[i] = normal[i] + cfg.separation * std::sqrt(double(ld)) * dir[i];
    w.prototypes.push_back(std::move(p));
  }
  const double s = 1.0 / std::sqrt(double(ld));
  w.visual_proj = gaussian(rng, ld * cfg.d, s);
  w.audio_proj = gaussian(rng, ld * cfg.d, s);
  return w;
}

// Lays out 1-3 contiguous, non-adjacent segments covering `total` frames.
std::vector<std::pair<std::size_t, std::size_t>> place_segments(Rng& rng, std::size_t n, std::size_t total) {
  std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 3));
  while (k > 1 && (total < 2 * k || n - total < k + 1)) --k;
  // Segment lengths: random composition of total into k parts, each >= 2.
  std::vector<std::size_t> lengths(k, 2);
  for (std::size_t extra = total - 2 * k; extra > 0; --extra) {
    lengths[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))] += 1;
  }
  // Gaps: k + 1 parts summing to n - total, interior gaps >= 1.
  std::vector<std::size_t> gaps(k + 1, 0);
  for (std::size_t i = 1; i < k; ++i) gaps[i] = 1;
  for (std::size_t free = n - total - (k - 1); free > 0; --free) {
    gaps[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k)))] += 1;
  }
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  std::size_t pos = gaps[0];
  for (std::size_t i = 0; i < k; ++i) {
    segs.emplace_back(pos, pos + lengths[i]);
    pos += lengths[i] + gaps[i + 1];
  }
  return segs;
}

SynthVideo make_video(const SynthConfig& cfg, const World& w, Rng& rng, const std::string& id, bool anomalous,
                      bool with_gt) {
  const std::size_t n = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.min_len), static_cast<std::int64_t>(cfg.max_len)));
  const std::size_t ld = cfg.latent_dim, d = cfg.d, C = cfg.classes.size();

  SynthVideo v;
  v.frame_gt.assign(n, 0);
  v.audio_only.assign(n, 0);
  std::size_t cls = 0;
  if (anomalous) {
    cls = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(C) - 1));
    const double jitter = rng.uniform(0.6, 1.4);
    std::size_t total = static_cast<std::size_t>(std::lround(cfg.segment_fraction * jitter * double(n)));
    total = std::clamp<std::size_t>(total, 2, n - 2);
    for (const auto& [s, e] : place_segments(rng, n, total)) {
      const bool hidden = rng.bernoulli(cfg.audio_only_separable_fraction);
      for (std::size_t i = s; i < e; ++i) {
        v.frame_gt[i] = static_cast<std::uint8_t>(cls);
        v.audio_only[i] = hidden ? 1 : 0;
      }
    }
  }

  const Vec scene_v = gaussian(rng, d, cfg.scene_scale);
  const Vec scene_a = gaussian(rng, d, cfg.scene_scale);

  v.visual.video_id = id;
  v.visual.modality = Modality::visual;
  v.visual.data = Matrix<float>(n, d);
  v.audio.video_id = id;
  v.audio.modality = Modality::audio;
  v.audio.data = Matrix<float>(n, d);

  Vec lat_a(ld), lat_v(ld);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& pa = w.prototypes[v.frame_gt[i]];
    const Vec& pv = v.audio_only[i] ? w.prototypes[0] : pa;
    for (std::size_t j = 0; j < ld; ++j) {
      const double shared = rng.normal(0.0, cfg.latent_noise);
      lat_a[j] = pa[j] + shared;
      lat_v[j] = pv[j] + shared;
    }
    for (std::size_t c = 0; c < d; ++c) {
      double xv = scene_v[c], xa = scene_a[c];
      for (std::size_t j = 0; j < ld; ++j) {
        xv += lat_v[j] * w.visual_proj[j * d + c];
        xa += lat_a[j] * w.audio_proj[j * d + c];
      }
      v.visual.data(i, c) = static_cast<float>(xv + rng.normal(0.0, cfg.noise_scale));
      v.audio.data(i, c) = static_cast<float>(xa + rng.normal(0.0, cfg.noise_scale));
    }
  }

  v.record.video_id = id;
  v.record.visual_path = "features/" + id + ".visual.avfe";
  v.record.audio_path = "features/" + id + ".audio.avfe";
  v.record.label.assign(C, 0);
  v.record.label[cls] = 1;
  if (with_gt) v.record.frame_gt_path = "gt/" + id + ".avgt";
  return v;
}

std::vector<bool> anomaly_flags(Rng& rng, std::size_t n, double ratio) {
  const auto n_anom = static_cast<std::size_t>(std::lround(ratio * double(n)));
  std::vector<bool> flags(n, false);
  std::fill_n(flags.begin(), std::min(n_anom, n), true);
  std::shuffle(flags.begin(), flags.end(), rng.engine());
  return flags;
}

}  // namespace

void SynthConfig::validate() const {
  auto frac = [](double x, const char* key) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string("synth.") + key + " must lie in [0, 1]");
  };
  frac(anomaly_ratio, "anomaly_ratio");
  frac(audio_only_separable_fraction, "audio_only_separable_fraction");
  if (!(segment_fraction > 0.0 && segment_fraction <= 0.5)) {
    throw ConfigError("synth.segment_fraction must lie in (0, 0.5]");
  }
  if (min_len < 8) throw ConfigError("synth.min_len must be >= 8");
  if (max_len < min_len) throw ConfigError("synth.max_len must be >= synth.min_len");
  if (d == 0) throw ConfigError("synth.d must be positive");
  if (latent_dim == 0) throw ConfigError("synth.latent_dim must be positive");
  if (classes.size() < 2) throw ConfigError("synth.classes needs the normal class and at least one anomaly class");
  if (classes.front() != "normal") throw ConfigError("synth.classes[0] must be \"normal\"");
  if (classes.size() > 255) throw ConfigError("synth.classes supports at most 255 classes");
  if (noise_scale < 0.0 || latent_noise < 0.0 || scene_scale < 0.0 || separation < 0.0) {
    throw ConfigError("synth noise and separation scales must be non-negative");
  }
}

SynthDataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, "data");
  const World world = make_world(cfg, rng);
  SynthDataset out;
  const auto train_flags = anomaly_flags(rng, cfg.n_train, cfg.anomaly_ratio);
  const auto test_flags = anomaly_flags(rng, cfg.n_test, cfg.anomaly_ratio);
  char id[32];
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    std::snprintf(id, sizeof id, "train_%04zu", i);
    out.train.push_back(make_video(cfg, world, rng, id, train_flags[i], false));
  }
  for (std::size_t i = 0; i < cfg.n_test; ++i) {
    std::snprintf(id, sizeof id, "test_%04zu", i);
    out.test.push_back(make_video(cfg, world, rng, id, test_flags[i], true));
  }
  return out;
}

void synth_write(const SynthDataset& data, const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "features");
  std::filesystem::create_directories(out_dir / "gt");
  auto write_split = [&](const std::vector<SynthVideo>& videos, const char* name) {
    std::vector<VideoRecord> records;
    for (const auto& v : videos) {
      write_features(v.visual, out_dir / v.record.visual_path);
      write_features(v.audio, out_dir / *v.record.audio_path);
      if (v.record.frame_gt_path) write_frame_mask(v.frame_gt, out_dir / *v.record.frame_gt_path);
      records.push_back(v.record);
    }
    write_manifest(out_dir / name, records);
  };
  write_split(data.train, "train.jsonl");
  write_split(data.test, "test.jsonl");

  nlohmann::ordered_json meta;
  meta["classes"] = cfg.classes;
  meta["d"] = cfg.d;
  meta["n_train"] = cfg.n_train;
  meta["n_test"] = cfg.n_test;
  meta["seed"] = cfg.seed;
  std::ofstream(out_dir / "dataset.json") << meta.dump(2) << '\n';
}

}  // namespace avlab::io
