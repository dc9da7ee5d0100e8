// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/model/checkpoint.hpp"

#include <cmath>

#include "avlab/common/bytes.hpp"
#include "avlab/featureio/avfe.hpp"

namespace avlab::model {

namespace {

constexpr std::string_view kMagic = "AVCK";

nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"d", d.d},
          {"num_classes", d.num_classes},
          {"fusion_hidden", d.fusion_hidden},
          {"classifier_hidden", d.classifier_hidden},
          {"prompt_hidden", d.prompt_hidden},
          {"uncert_hidden", d.uncert_hidden},
          {"temporal_window", d.temporal_window}};
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.d = j.at("d").get<std::size_t>();
  d.num_classes = j.at("num_classes").get<std::size_t>();
  d.fusion_hidden = j.at("fusion_hidden").get<std::size_t>();
  d.classifier_hidden = j.at("classifier_hidden").get<std::size_t>();
  d.prompt_hidden = j.at("prompt_hidden").get<std::size_t>();
  d.uncert_hidden = j.at("uncert_hidden").get<std::size_t>();
  d.temporal_window = j.at("temporal_window").get<std::size_t>();
  return d;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& params = ckpt.params;
  params.check_finite();
  nlohmann::ordered_json header;
  header["architecture"] = architecture_name(params.architecture());
  header["dims"] = dims_to_json(params.dims());
  header["tensors"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& e : params.entries()) {
    header["tensors"].push_back(
        {{"name", e.name}, {"rows", e.value.rows()}, {"cols", e.value.cols()}, {"offset", offset},
         {"trainable", e.trainable}});
    offset += 4 * e.value.size();
  }
  header["meta"] = ckpt.meta;
  const std::string text = header.dump();

  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const auto& e : params.entries()) {
    for (float v : e.value.data) w.f32(v);
  }
  w.u32(io::crc32(w.buffer()));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view source) {
  const std::string what = "checkpoint" + (source.empty() ? std::string() : " " + std::string(source));
  ByteReader r(bytes, what);
  r.need(4);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw BadMagicError(what + ": bad magic, expected \"AVCK\"");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError(what + ": format version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_len = r.u32();
  const auto header_bytes = r.bytes(header_len);
  auto crc_ok = [&] {
    if (bytes.size() < 4) return false;
    ByteReader tail(bytes.subspan(bytes.size() - 4), what);
    return io::crc32(bytes.first(bytes.size() - 4)) == tail.u32();
  };

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    if (!crc_ok()) throw ChecksumError(what + ": CRC mismatch");
    throw FormatError(what + ": unreadable header: " + e.what());
  }

  try {
    Checkpoint ckpt;
    ModelParams params(parse_architecture(header.at("architecture").get<std::string>()),
                       dims_from_json(header.at("dims")));
    std::size_t payload = 0;
    for (const auto& t : header.at("tensors")) {
      if (t.at("offset").get<std::size_t>() != payload) {
        throw FormatError(what + ": tensor '" + t.at("name").get<std::string>() + "' has an unexpected offset");
      }
      payload += 4 * t.at("rows").get<std::size_t>() * t.at("cols").get<std::size_t>();
    }
    const auto values = r.bytes(payload);
    const std::uint32_t stored = r.u32();
    if (r.remaining() != 0) throw FormatError(what + ": " + std::to_string(r.remaining()) + " trailing bytes");
    if (io::crc32(bytes.first(bytes.size() - 4)) != stored) throw ChecksumError(what + ": CRC mismatch");

    ByteReader vr(values, what);
    for (const auto& t : header.at("tensors")) {
      Matrix<float> m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
      for (auto& v : m.data) v = vr.f32();
      params.add(t.at("name").get<std::string>(), std::move(m), t.at("trainable").get<bool>());
    }
    params.check_finite();
    ckpt.params = std::move(params);
    if (header.contains("meta")) ckpt.meta = header.at("meta");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": malformed header: " + e.what());
  } catch (const ContractError& e) {
    throw FormatError(what + ": " + e.what());
  } catch (const NumericError& e) {
    throw FormatError(what + ": " + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file_bytes(path), path.string());
}

}  // namespace avlab::model
