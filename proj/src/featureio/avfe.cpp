// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/featureio/avfe.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "avlab/common/bytes.hpp"

namespace avlab::io {

namespace {

constexpr std::string_view kAvfeMagic = "AVFE";
constexpr std::string_view kAvgtMagic = "AVGT";

void check_magic(ByteReader& r, std::string_view magic, const std::string& what) {
  r.need(4);
  const auto m = r.bytes(4);
  if (!std::equal(m.begin(), m.end(), magic.begin())) {
    throw BadMagicError(what + ": bad magic, expected \"" + std::string(magic) + "\"");
  }
}

}  // namespace

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::visual: return "visual";
    case Modality::audio: return "audio";
    case Modality::scores: return "scores";
    case Modality::class_embedding: return "class_embedding";
  }
  return "unknown";
}

void FeatureSequence::validate() const {
  if (data.rows() == 0 || data.cols() == 0) {
    throw DataError("feature sequence '" + video_id + "' has empty shape " + data.shape.str());
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data.data[i])) {
      throw DataError("feature sequence '" + video_id + "' has a non-finite value at row " +
                      std::to_string(i / data.cols()));
    }
  }
}

std::size_t avfe_file_size(std::size_t n, std::size_t d) { return kAvfeHeaderBytes + 4 * n * d + 4; }

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq) {
  seq.validate();
  ByteWriter w;
  w.buffer().reserve(avfe_file_size(seq.n_frames(), seq.dim()));
  w.bytes(kAvfeMagic);
  w.u32(kAvfeVersion);
  w.u32(static_cast<std::uint32_t>(seq.n_frames()));
  w.u32(static_cast<std::uint32_t>(seq.dim()));
  w.u8(static_cast<std::uint8_t>(seq.modality));
  for (float v : seq.data.data) w.f32(v);
  const auto& buf = w.buffer();
  const std::uint32_t crc = crc32(std::span(buf).subspan(kAvfeHeaderBytes));
  w.u32(crc);
  return w.take();
}

FeatureSequence decode_features(std::span<const std::uint8_t> bytes, std::string video_id, std::string_view source) {
  const std::string what = "AVFE " + (source.empty() ? "'" + video_id + "'" : std::string(source));
  ByteReader r(bytes, what);
  check_magic(r, kAvfeMagic, what);
  const std::uint32_t version = r.u32();
  if (version != kAvfeVersion) {
    throw VersionMismatchError(what + ": format version " + std::to_string(version) + ", expected " +
                               std::to_string(kAvfeVersion));
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  const std::uint8_t tag = r.u8();
  if (tag > static_cast<std::uint8_t>(Modality::class_embedding)) {
    throw FormatError(what + ": unknown modality tag " + std::to_string(tag));
  }
  const std::size_t payload = 4 * static_cast<std::size_t>(n) * d;
  const auto values = r.bytes(payload);
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) throw FormatError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  if (crc32(values) != stored) throw ChecksumError(what + ": CRC mismatch");

  FeatureSequence seq;
  seq.video_id = std::move(video_id);
  seq.modality = static_cast<Modality>(tag);
  seq.data = Matrix<float>(n, d);
  ByteReader vr(values, what);
  for (auto& v : seq.data.data) v = vr.f32();
  seq.validate();
  return seq;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

void write_features(const FeatureSequence& seq, const std::filesystem::path& path) {
  write_file_bytes(path, encode_features(seq));
}

FeatureSequence read_features(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_features(bytes, path.stem().string(), path.string());
}

void write_frame_mask(std::span<const std::uint8_t> classes, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kAvgtMagic);
  w.u32(static_cast<std::uint32_t>(classes.size()));
  w.bytes(classes);
  write_file_bytes(path, w.buffer());
}

std::vector<std::uint8_t> read_frame_mask(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string what = "AVGT " + path.string();
  ByteReader r(bytes, what);
  check_magic(r, kAvgtMagic, what);
  const std::uint32_t n = r.u32();
  const auto body = r.bytes(n);
  if (r.remaining() != 0) throw FormatError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return {body.begin(), body.end()};
}

}  // namespace avlab::io
