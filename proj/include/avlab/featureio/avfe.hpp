// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// AVFE feature container, little-endian:
//
//   offset  size      field
//   0       4         magic "AVFE"
//   4       4         format version (u32)
//   8       4         N rows (u32)
//   12      4         d columns (u32)
//   16      1         tag (u8): 0 visual, 1 audio, 2 score dump, 3 class embeddings
//   17      4*N*d     binary32 values, row-major
//   17+4Nd  4         CRC-32 (zlib polynomial) of the value bytes
//
// AVGT frame-mask file: magic "AVGT", count (u32), then one u8 class index
// per raw frame.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avlab/diff/matrix.hpp"

namespace avlab::io {

enum class Modality : std::uint8_t { visual = 0, audio = 1, scores = 2, class_embedding = 3 };

inline constexpr std::uint32_t kAvfeVersion = 1;
inline constexpr std::size_t kAvfeHeaderBytes = 17;

const char* modality_name(Modality m);

struct FeatureSequence {
  std::string video_id;
  Modality modality = Modality::visual;
  Matrix<float> data;

  std::size_t n_frames() const { return data.rows(); }
  std::size_t dim() const { return data.cols(); }
  // Throws DataError on empty shape or non-finite entries.
  void validate() const;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::size_t avfe_file_size(std::size_t n, std::size_t d);

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq);
// video_id is not part of the container; the caller supplies it. `source`
// names the origin (usually a path) in error messages.
FeatureSequence decode_features(std::span<const std::uint8_t> bytes, std::string video_id = {},
                                std::string_view source = {});

void write_features(const FeatureSequence& seq, const std::filesystem::path& path);
// video_id defaults to the file stem.
FeatureSequence read_features(const std::filesystem::path& path);

void write_frame_mask(std::span<const std::uint8_t> classes, const std::filesystem::path& path);
std::vector<std::uint8_t> read_frame_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace avlab::io
