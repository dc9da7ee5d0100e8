// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/featureio/resample.hpp"

#include <algorithm>
#include <string>

namespace avlab::io {

std::vector<std::size_t> resample_indices(std::size_t n, std::size_t stride, std::size_t max_len) {
  if (n == 0) throw ContractError("resample: empty input");
  if (stride < 1) throw ContractError("resample: stride must be >= 1");
  if (max_len < 1) throw ContractError("resample: max_len must be >= 1");
  std::vector<std::size_t> strided;
  for (std::size_t i = 0; i < n; i += stride) strided.push_back(i);
  if (strided.size() <= max_len) return strided;
  const std::size_t len = strided.size();
  std::vector<std::size_t> out(max_len);
  for (std::size_t i = 0; i < max_len; ++i) out[i] = strided[i * len / max_len];
  return out;
}

FeatureSequence resample(const FeatureSequence& seq, std::size_t stride, std::size_t max_len) {
  if (seq.n_frames() == 0) throw ContractError("resample: empty sequence '" + seq.video_id + "'");
  const auto idx = resample_indices(seq.n_frames(), stride, max_len);
  FeatureSequence out;
  out.video_id = seq.video_id;
  out.modality = seq.modality;
  out.data = Matrix<float>(idx.size(), seq.dim());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = seq.data.row(idx[i]);
    std::copy(src.begin(), src.end(), out.data.row(i).begin());
  }
  return out;
}

std::vector<double> expand_to_raw(std::span<const double> scores, std::size_t raw_frames) {
  if (scores.empty()) throw ContractError("expand_to_raw: empty score curve");
  const std::size_t n = scores.size();
  std::vector<double> out(raw_frames);
  for (std::size_t r = 0; r < raw_frames; ++r) out[r] = scores[std::min(n - 1, r * n / raw_frames)];
  return out;
}

}  // namespace avlab::io
