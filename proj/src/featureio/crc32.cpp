// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <zlib.h>

#include <algorithm>

#include "avlab/featureio/avfe.hpp"

namespace avlab::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const Bytef* p = bytes.data();
  std::size_t left = bytes.size();
  // zlib takes a uInt length; feed large buffers in chunks.
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace avlab::io
