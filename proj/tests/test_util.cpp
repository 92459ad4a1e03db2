// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <set>

#include "enccluster/bytes.hpp"
#include "enccluster/rng.hpp"

using namespace enccluster;

TEST_CASE("host is little endian") {
  // The wire formats write scalars by memcpy; everything assumes LE hosts.
  REQUIRE(std::endian::native == std::endian::little);
}

TEST_CASE("byte writer round trips through reader") {
  ByteWriter w;
  w.u8(7);
  w.u16(0xbeef);
  w.u32(0xdeadbeef);
  w.u64(0x0123456789abcdefULL);
  w.i64(-42);
  w.f64(3.5);
  Bytes payload{1, 2, 3, 4, 5};
  w.blob(payload);

  ByteReader r(w.data());
  CHECK(r.u8() == 7);
  CHECK(r.u16() == 0xbeef);
  CHECK(r.u32() == 0xdeadbeef);
  CHECK(r.u64() == 0x0123456789abcdefULL);
  CHECK(r.i64() == -42);
  CHECK(r.f64() == 3.5);
  auto b = r.blob();
  CHECK(Bytes(b.begin(), b.end()) == payload);
  CHECK(r.done());
}

TEST_CASE("truncated reads raise decode errors") {
  ByteWriter w;
  w.u32(123);
  ByteReader r(w.data());
  (void)r.u16();
  CHECK_THROWS_AS((void)r.u64(), Error);
  try {
    ByteReader r2(w.data());
    (void)r2.u64();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::decode_error);
  }
}

TEST_CASE("seed derivation separates tags and indices") {
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 64; ++i) {
    seen.insert(derive_seed(42, "client", i));
    seen.insert(derive_seed(42, "filter", i));
  }
  seen.insert(derive_seed(43, "client", 0));
  CHECK(seen.size() == 129);
  CHECK(derive_seed(42, "client", 3) == derive_seed(42, "client", 3));
}

TEST_CASE("hash_bytes depends on every byte and on length") {
  Bytes a{1, 2, 3, 4, 5, 6, 7, 8, 9};
  Bytes b = a;
  b[8] ^= 1;
  CHECK(hash_bytes(1, a) != hash_bytes(1, b));
  CHECK(hash_bytes(1, a) != hash_bytes(2, a));
  Bytes c(a.begin(), a.begin() + 8);
  CHECK(hash_bytes(1, a) != hash_bytes(1, c));
  // zero padding must not alias a longer input of explicit zeros
  Bytes d = c;
  d.push_back(0);
  CHECK(hash_bytes(1, c) != hash_bytes(1, d));
}

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(99), b(99), c(100);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    uint64_t x = a.next_u64();
    all_equal &= (x == b.next_u64());
    any_diff |= (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform and below stay in range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(13) < 13);
  }
  CHECK(rng.below(0) == 0);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("normal sampler has the right first two moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("gamma sampler matches mean/variance for a few shapes") {
  Rng rng(5);
  for (double alpha : {0.1, 0.5, 1.0, 3.0}) {
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(alpha);
      REQUIRE(x >= 0.0);
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - alpha) < 0.05 * std::max(1.0, alpha));
    CHECK(std::abs(var - alpha) < 0.12 * std::max(1.0, alpha));
  }
}
