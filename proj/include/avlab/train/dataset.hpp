// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avlab/diff/matrix.hpp"
#include "avlab/featureio/manifest.hpp"

namespace avlab::train {

struct DataOptions {
  std::size_t stride = 1;
  std::size_t max_len = 256;
  bool need_visual = true;
  bool need_audio = false;
  bool load_gt = false;
};

struct VideoSample {
  io::VideoRecord record;
  Matrix<float> visual;                // resampled; empty when not loaded
  std::optional<Matrix<float>> audio;  // resampled
  std::size_t raw_frames = 0;          // before resampling
  std::vector<std::uint8_t> frame_gt;  // raw frames; empty when absent
};

// Loads and resamples every record of the manifest. Missing modality files
// that the options require raise DataError naming the video.
std::vector<VideoSample> load_samples(const io::Manifest& manifest, const DataOptions& opt);

// Class names from a dataset.json next to the manifest when present,
// otherwise "class0", "class1", ... with class 0 named "normal".
std::vector<std::string> class_names_for(const io::Manifest& manifest);

}  // namespace avlab::train
