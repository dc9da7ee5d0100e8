// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "avlab/featureio/avfe.hpp"

namespace avlab::io {

// Source rows kept by resample(): every stride-th frame from 0, then, if more
// than max_len remain, i -> floor(i * L / max_len) over the L strided frames.
std::vector<std::size_t> resample_indices(std::size_t n, std::size_t stride, std::size_t max_len);

FeatureSequence resample(const FeatureSequence& seq, std::size_t stride, std::size_t max_len);

// Maps a per-feature-frame score curve onto `raw_frames` annotation frames:
// raw frame r takes the score of feature frame min(n - 1, floor(r * n / raw)).
std::vector<double> expand_to_raw(std::span<const double> scores, std::size_t raw_frames);

}  // namespace avlab::io
