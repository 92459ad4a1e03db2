// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#include "enccluster/fuse_filter.hpp"

#include <algorithm>
#include <cmath>

#include "enccluster/errors.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::fuse {

namespace {

constexpr uint32_t kMagic = 0x46464345;  // "ECFF"
constexpr uint32_t kMaxAttempts = 32;
constexpr uint64_t kSeedStep = 0xc2b2ae3d27d4eb4fULL;
constexpr uint32_t kMaxSegmentLength = 1u << 18;

uint64_t mulhi(uint64_t a, uint64_t b) noexcept {
  return uint64_t((static_cast<unsigned __int128>(a) * b) >> 64);
}

// Published sizing constants for binary fuse construction; they keep the
// random peel success probability high while staying near 1.13x (arity 3)
// and 1.08x (arity 4) of the key count.
uint32_t pick_segment_length(uint32_t arity, size_t size) {
  if (size <= 2) return 4;
  const double ls = std::log(double(size));
  int shift;
  if (arity == 3) {
    shift = int(std::floor(ls / std::log(3.33) + 2.25));
  } else {
    shift = int(std::floor(ls / std::log(2.91) - 0.5));
  }
  shift = std::clamp(shift, 2, 18);
  return std::min(kMaxSegmentLength, uint32_t(1) << shift);
}

double pick_size_factor(uint32_t arity, size_t size) {
  const double ls = std::log(double(std::max<size_t>(size, 2)));
  if (arity == 3) return std::max(1.125, 0.875 + 0.25 * std::log(1000000.0) / ls);
  return std::max(1.075, 0.77 + 0.305 * std::log(600000.0) / ls);
}

}  // namespace

uint64_t key_hash(uint64_t seed, uint64_t position, uint32_t cluster) noexcept {
  uint8_t buf[12];
  std::memcpy(buf, &position, 8);
  std::memcpy(buf + 8, &cluster, 4);
  return hash_bytes(seed, buf);
}

void FuseFilter::locations(uint64_t hash, uint64_t out[4]) const noexcept {
  // First slot from the high product bits, later slots one segment over with
  // 18-bit hash slices folded in (slices are disjoint for arity <= 4).
  const uint64_t segment_count_length = uint64_t(segment_count_) * segment_length_;
  const uint64_t mask = segment_length_ - 1;
  out[0] = mulhi(hash, segment_count_length);
  for (uint32_t j = 1; j < arity_; ++j) {
    out[j] = out[0] + uint64_t(j) * segment_length_;
    const uint32_t shift = 18 * (arity_ - 1 - j);
    out[j] ^= (hash >> shift) & mask;
  }
}

uint64_t FuseFilter::fingerprint_of(uint64_t hash) const noexcept {
  // Separately mixed so fingerprint bits are independent of location slices.
  const uint64_t fp = mix64(hash ^ 0x9e3779b97f4a7c15ULL);
  return bpe_ == 64 ? fp : (fp & ((uint64_t(1) << bpe_) - 1));
}

uint64_t FuseFilter::slot_value(uint64_t idx) const noexcept {
  const size_t w = bpe_ / 8;
  uint64_t v = 0;
  std::memcpy(&v, slots_.data() + idx * w, w);
  return v;
}

void FuseFilter::set_slot(uint64_t idx, uint64_t value) noexcept {
  const size_t w = bpe_ / 8;
  std::memcpy(slots_.data() + idx * w, &value, w);
}

FuseFilter FuseFilter::build(std::span<const FilterKey> keys, uint32_t bits_per_entry,
                             uint32_t arity, uint64_t seed) {
  require(!keys.empty(), Errc::invalid_argument, "key set must be nonempty");
  require(arity == 3 || arity == 4, Errc::invalid_argument, "arity must be 3 or 4");
  require(bits_per_entry == 8 || bits_per_entry == 16 || bits_per_entry == 32,
          Errc::invalid_argument, "bits_per_entry must be 8, 16 or 32");

  {
    std::vector<FilterKey> sorted(keys.begin(), keys.end());
    std::sort(sorted.begin(), sorted.end(), [](const FilterKey& a, const FilterKey& b) {
      return a.position != b.position ? a.position < b.position : a.cluster < b.cluster;
    });
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            Errc::invalid_argument, "duplicate keys");
  }

  FuseFilter f;
  f.arity_ = arity;
  f.bpe_ = bits_per_entry;
  f.key_count_ = keys.size();
  f.segment_length_ = pick_segment_length(arity, keys.size());
  const double factor = pick_size_factor(arity, keys.size());
  const uint64_t capacity = uint64_t(std::llround(double(keys.size()) * factor));
  uint64_t segment_count = (capacity + f.segment_length_ - 1) / f.segment_length_;
  segment_count = segment_count <= (arity - 1) ? 1 : segment_count - (arity - 1);
  f.segment_count_ = uint32_t(segment_count);
  f.slot_count_ = (segment_count + arity - 1) * uint64_t(f.segment_length_);
  f.slots_.assign(f.slot_count_ * (bits_per_entry / 8), 0);

  const uint64_t n = keys.size();
  std::vector<uint64_t> hashes(n);
  std::vector<uint32_t> t2count(f.slot_count_);
  std::vector<uint64_t> t2hash(f.slot_count_);
  std::vector<uint64_t> peel_order(n);
  std::vector<uint8_t> peel_slot(n);
  std::vector<uint64_t> alone;
  alone.reserve(f.slot_count_);

  uint64_t attempt_seed = seed;
  for (uint32_t attempt = 0;; ++attempt) {
    if (attempt == kMaxAttempts) {
      fail(Errc::construction_failed, "peeling failed after seed rotations");
    }
    f.seed_ = attempt_seed;
    f.retries_ = attempt;

    std::fill(t2count.begin(), t2count.end(), 0);
    std::fill(t2hash.begin(), t2hash.end(), 0);

    // Count phase: each slot tracks (#keys << 2) ^ xor-of-hash-indexes plus
    // the xor of key hashes, enough to recover the lone key at degree one.
    uint64_t locs[4];
    for (uint64_t i = 0; i < n; ++i) {
      hashes[i] = key_hash(attempt_seed, keys[i].position, keys[i].cluster);
      f.locations(hashes[i], locs);
      for (uint32_t j = 0; j < arity; ++j) {
        t2count[locs[j]] += 4;
        t2count[locs[j]] ^= j;
        t2hash[locs[j]] ^= hashes[i];
      }
    }

    alone.clear();
    for (uint64_t s = 0; s < f.slot_count_; ++s) {
      if ((t2count[s] >> 2) == 1) alone.push_back(s);
    }

    uint64_t stacked = 0;
    while (!alone.empty()) {
      const uint64_t slot = alone.back();
      alone.pop_back();
      if ((t2count[slot] >> 2) != 1) continue;
      const uint64_t hash = t2hash[slot];
      const uint32_t found_j = t2count[slot] & 3;
      peel_order[stacked] = hash;
      peel_slot[stacked] = uint8_t(found_j);
      ++stacked;
      f.locations(hash, locs);
      for (uint32_t j = 0; j < arity; ++j) {
        if (j == found_j) continue;
        t2count[locs[j]] -= 4;
        t2count[locs[j]] ^= j;
        t2hash[locs[j]] ^= hash;
        if ((t2count[locs[j]] >> 2) == 1) alone.push_back(locs[j]);
      }
    }

    if (stacked == n) break;
    // A duplicate 64-bit key hash or an unlucky hypergraph; rotate and retry.
    attempt_seed = mix64(attempt_seed + kSeedStep);
  }

  // Assign in reverse peel order: the peeled slot absorbs whatever makes the
  // xor over all arity slots equal the fingerprint.
  std::fill(f.slots_.begin(), f.slots_.end(), 0);
  uint64_t locs[4];
  for (uint64_t i = peel_order.size(); i-- > 0;) {
    const uint64_t hash = peel_order[i];
    const uint32_t j = peel_slot[i];
    f.locations(hash, locs);
    uint64_t val = f.fingerprint_of(hash);
    for (uint32_t k = 0; k < arity; ++k) {
      if (k != j) val ^= f.slot_value(locs[k]);
    }
    f.set_slot(locs[j], val);
  }
  return f;
}

bool FuseFilter::member(uint64_t position, uint32_t cluster) const noexcept {
  const uint64_t hash = key_hash(seed_, position, cluster);
  uint64_t locs[4];
  locations(hash, locs);
  uint64_t acc = fingerprint_of(hash);
  for (uint32_t j = 0; j < arity_; ++j) acc ^= slot_value(locs[j]);
  return acc == 0;
}

bool FuseFilter::member_under(uint64_t base_seed, uint64_t position,
                              uint32_t cluster) const noexcept {
  // Replay the build's retry rotation so the caller supplies the original
  // seed, not the post-rotation working seed.
  uint64_t s = base_seed;
  for (uint32_t a = 0; a < retries_; ++a) s = mix64(s + kSeedStep);
  const uint64_t hash = key_hash(s, position, cluster);
  uint64_t locs[4];
  locations(hash, locs);
  uint64_t acc = fingerprint_of(hash);
  for (uint32_t j = 0; j < arity_; ++j) acc ^= slot_value(locs[j]);
  return acc == 0;
}

Bytes FuseFilter::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u8(1);
  w.u8(uint8_t(arity_));
  w.u8(uint8_t(bpe_));
  w.u8(0);
  w.u64(seed_);
  w.u32(retries_);
  w.u64(key_count_);
  w.u32(segment_length_);
  w.u32(segment_count_);
  w.u64(slot_count_);
  w.bytes(slots_);
  return w.take();
}

FuseFilter FuseFilter::deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  require(r.u32() == kMagic, Errc::decode_error, "bad filter magic");
  require(r.u8() == 1, Errc::decode_error, "unsupported filter version");
  FuseFilter f;
  f.arity_ = r.u8();
  f.bpe_ = r.u8();
  (void)r.u8();
  require(f.arity_ == 3 || f.arity_ == 4, Errc::decode_error, "bad arity");
  require(f.bpe_ == 8 || f.bpe_ == 16 || f.bpe_ == 32, Errc::decode_error, "bad bits_per_entry");
  f.seed_ = r.u64();
  f.retries_ = r.u32();
  f.key_count_ = r.u64();
  f.segment_length_ = r.u32();
  f.segment_count_ = r.u32();
  f.slot_count_ = r.u64();
  require(f.segment_length_ != 0 && (f.segment_length_ & (f.segment_length_ - 1)) == 0,
          Errc::decode_error, "segment length must be a power of two");
  require(f.segment_length_ <= kMaxSegmentLength, Errc::decode_error, "segment length too large");
  require(f.slot_count_ ==
              (uint64_t(f.segment_count_) + f.arity_ - 1) * uint64_t(f.segment_length_),
          Errc::decode_error, "inconsistent slot count");
  const size_t payload = size_t(f.slot_count_) * (f.bpe_ / 8);
  require(r.remaining() == payload, Errc::decode_error, "payload size mismatch");
  auto s = r.bytes(payload);
  f.slots_.assign(s.begin(), s.end());
  return f;
}

}  // namespace enccluster::fuse
