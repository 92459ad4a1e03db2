// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "enccluster/bytes.hpp"

namespace enccluster::fuse {

// One encodable key: a weight position paired with its cluster index. Keys
// are hashed over their fixed serialization (position as 64-bit LE, then
// cluster as 32-bit LE) with a Murmur-style 64-bit finalizer keyed by the
// filter seed.
struct FilterKey {
  uint64_t position = 0;
  uint32_t cluster = 0;

  friend bool operator==(const FilterKey&, const FilterKey&) = default;
};

// Static membership filter over a key set: a binary fuse filter with arity 3
// or 4 and 8/16/32-bit fingerprints. Querying an inserted key always answers
// true; a key outside the set answers true with probability about 2^-bpe.
//
// Wire layout (all little-endian):
//   u32 magic "ECFF" | u8 version=1 | u8 arity | u8 bits_per_entry | u8 pad
//   u64 working_seed | u32 retries | u64 key_count
//   u32 segment_length | u32 segment_count | u64 slot_count
//   slot_count * bits_per_entry/8 payload bytes
class FuseFilter {
 public:
  // Peels the key set into XOR constraints; rotates the seed internally on a
  // failed attempt (at most 32 attempts, then construction-failed). Duplicate
  // keys, empty input, or unsupported (arity, bits_per_entry) are
  // invalid-argument.
  static FuseFilter build(std::span<const FilterKey> keys, uint32_t bits_per_entry,
                          uint32_t arity, uint64_t seed);

  bool member(uint64_t position, uint32_t cluster) const noexcept;
  // Same query but hashing under a caller-held seed (the one passed to
  // build). Queries answer like member() exactly when the seed matches.
  bool member_under(uint64_t base_seed, uint64_t position,
                    uint32_t cluster) const noexcept;

  Bytes serialize() const;
  static FuseFilter deserialize(std::span<const uint8_t> bytes);

  uint32_t arity() const noexcept { return arity_; }
  uint32_t bits_per_entry() const noexcept { return bpe_; }
  uint64_t seed() const noexcept { return seed_; }
  uint32_t retries() const noexcept { return retries_; }
  uint64_t key_count() const noexcept { return key_count_; }
  uint64_t slot_count() const noexcept { return slot_count_; }
  size_t byte_size() const { return serialize().size(); }
  // Fingerprint storage cost per inserted key, excluding the header.
  double bits_per_key() const noexcept {
    return key_count_ == 0 ? 0.0 : double(slot_count_) * bpe_ / double(key_count_);
  }

  friend bool operator==(const FuseFilter&, const FuseFilter&) = default;

 private:
  FuseFilter() = default;

  uint64_t slot_value(uint64_t idx) const noexcept;
  void set_slot(uint64_t idx, uint64_t value) noexcept;
  void locations(uint64_t hash, uint64_t out[4]) const noexcept;
  uint64_t fingerprint_of(uint64_t hash) const noexcept;

  uint32_t arity_ = 3;
  uint32_t bpe_ = 8;
  uint64_t seed_ = 0;
  uint32_t retries_ = 0;
  uint64_t key_count_ = 0;
  uint32_t segment_length_ = 0;
  uint32_t segment_count_ = 0;
  uint64_t slot_count_ = 0;
  Bytes slots_;  // slot_count * bpe/8 bytes
};

// Key hash used by the filter; exposed for tests of hash/fingerprint
// uniformity.
uint64_t key_hash(uint64_t seed, uint64_t position, uint32_t cluster) noexcept;

}  // namespace enccluster::fuse
