// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#include "enccluster/rng.hpp"

namespace enccluster {

uint64_t hash_bytes(uint64_t seed, std::span<const uint8_t> bytes) noexcept {
  uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
  size_t i = 0;
  while (i + 8 <= bytes.size()) {
    uint64_t chunk;
    std::memcpy(&chunk, bytes.data() + i, 8);
    h = mix64(h ^ chunk);
    i += 8;
  }
  if (i < bytes.size()) {
    uint64_t chunk = 0;
    std::memcpy(&chunk, bytes.data() + i, bytes.size() - i);
    h = mix64(h ^ chunk);
  }
  return mix64(h ^ uint64_t(bytes.size()));
}

uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index) noexcept {
  uint64_t h = mix64(master ^ 0x9e3779b97f4a7c15ULL);
  h = hash_bytes(h, {reinterpret_cast<const uint8_t*>(tag.data()), tag.size()});
  return mix64(h ^ index);
}

uint64_t Rng::below(uint64_t n) noexcept {
  if (n == 0) return 0;
  // Rejection sampling on the top of the range to remove modulo bias.
  const uint64_t limit = n * ((~uint64_t{0}) / n);
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() noexcept {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(theta);
  have_spare_ = true;
  return radius * std::cos(theta);
}

double Rng::gamma(double alpha) noexcept {
  if (alpha < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    const double g = gamma(alpha + 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return g * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace enccluster
