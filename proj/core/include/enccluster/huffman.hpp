// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "enccluster/bytes.hpp"

namespace enccluster::huffman {

// Canonical Huffman coding of a symbol sequence over a small alphabet.
// Frequencies come from the sequence itself, so the payload carries one
// byte of code length per alphabet entry plus the packed bitstream.
//
// Wire layout (little-endian):
//   u32 magic "ECHC" | u8 version=1 | u32 alphabet | u64 symbol_count
//   alphabet * u8 code lengths | packed codes, MSB-first within each byte
Bytes encode(std::span<const uint32_t> symbols, uint32_t alphabet);
std::vector<uint32_t> decode(std::span<const uint8_t> bytes);

// Exact size of encode() output without materializing it.
size_t encoded_size(std::span<const uint32_t> symbols, uint32_t alphabet);

}  // namespace enccluster::huffman
