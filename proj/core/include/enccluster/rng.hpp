// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace enccluster {

// 64-bit avalanche mix (Murmur-style finalizer). Shared by the PRNG seeding,
// the fuse-filter hashing and seed derivation, so every consumer agrees on it.
inline uint64_t mix64(uint64_t h) noexcept {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

// Keyed hash of an arbitrary byte string: absorb 8-byte little-endian chunks
// (zero padded) through mix64, length-separated. Not cryptographic.
uint64_t hash_bytes(uint64_t seed, std::span<const uint8_t> bytes) noexcept;

// Stable derivation of sub-seeds from a master seed, e.g. one per client and
// purpose. Different (tag, index) pairs land in different 64-bit streams.
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0) noexcept;

// splitmix64: tiny, fully specified, used to expand seeds.
struct SplitMix64 {
  uint64_t state;
  uint64_t next() noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256** with self-contained uniform/normal/gamma sampling. The stdlib
// distributions are implementation-defined, which would break bit-exact
// reproducibility of experiment outputs across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) noexcept {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
    have_spare_ = false;
  }

  uint64_t next_u64() noexcept {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n). n == 0 returns 0.
  uint64_t below(uint64_t n) noexcept;

  // Standard normal via Box-Muller, spare cached.
  double normal() noexcept;

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  // Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 handled by boosting.
  double gamma(double alpha) noexcept;

 private:
  static uint64_t rotl(uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace enccluster
