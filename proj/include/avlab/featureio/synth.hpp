// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic audio-visual dataset.
//
// Each class c owns a latent prototype; the normal prototype is a random
// vector and every anomaly prototype sits `separation` away from it along a
// random unit direction. A frame's latent is its class prototype plus
// Gaussian noise. Visual and audio features are independent random linear
// projections of that latent, plus a per-video scene offset, plus white noise
// of scale noise_scale. In an "audio-only" segment the visual latent is drawn
// from the normal prototype, so only the audio track carries the anomaly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avlab/featureio/avfe.hpp"
#include "avlab/featureio/manifest.hpp"

namespace avlab::io {

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_train = 200;
  std::size_t n_test = 60;
  std::size_t d = 64;
  std::vector<std::string> classes = {"normal", "fighting", "shooting", "explosion"};
  double anomaly_ratio = 0.5;                   // fraction of anomalous videos
  double audio_only_separable_fraction = 0.5;   // fraction of anomalous segments hidden from vision
  double noise_scale = 1.0;
  std::size_t min_len = 32;
  std::size_t max_len = 64;
  double segment_fraction = 0.3;  // mean fraction of an anomalous video covered by segments
  std::size_t latent_dim = 16;
  double latent_noise = 1.0;
  double separation = 1.0;
  double scene_scale = 1.0;

  void validate() const;
};

struct SynthVideo {
  VideoRecord record;
  FeatureSequence visual;
  FeatureSequence audio;
  std::vector<std::uint8_t> frame_gt;    // class per frame
  std::vector<std::uint8_t> audio_only;  // 1 where only audio carries the anomaly
};

struct SynthDataset {
  std::vector<SynthVideo> train;
  std::vector<SynthVideo> test;
};

SynthDataset synth_generate(const SynthConfig& cfg);

// Writes train.jsonl, test.jsonl, features/*.avfe, gt/*.avgt (test split
// only) and dataset.json under out_dir.
void synth_write(const SynthDataset& data, const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace avlab::io
