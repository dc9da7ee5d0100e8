// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// AVCK checkpoint, little-endian:
//
//   magic "AVCK" | version (u32) | header length H (u32) | H bytes of JSON
//   | binary32 payload | CRC-32 of everything before it (u32)
//
// The JSON header lists architecture, dims, and every tensor as
// {name, rows, cols, offset, trainable}, offset in bytes from the start of the
// payload, plus a free-form "meta" object (mode, classes, ...).
#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <span>
#include <vector>

#include "avlab/model/params.hpp"

namespace avlab::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  nlohmann::json meta = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view source = {});

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace avlab::model
