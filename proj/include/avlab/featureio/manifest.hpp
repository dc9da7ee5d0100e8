// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Manifests are JSON Lines: one video per line with the keys video_id,
// visual_path, audio_path (null when absent), label (multi-hot over the C
// classes, class 0 = normal) and frame_gt_path (null when absent). Paths are
// relative to the manifest's directory unless absolute.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace avlab::io {

struct VideoRecord {
  std::string video_id;
  std::string visual_path;
  std::optional<std::string> audio_path;
  std::vector<std::uint8_t> label;
  std::optional<std::string> frame_gt_path;

  bool is_normal() const;
  // Positive class indices of the label vector.
  std::vector<std::size_t> positive_classes() const;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<VideoRecord> records;

  std::filesystem::path resolve(const std::string& relative) const;
  // Label width shared by all records (throws DataError if inconsistent).
  std::size_t num_classes() const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records);

// Validates one record; throws DataError naming the video.
void validate_record(const VideoRecord& record);

}  // namespace avlab::io
