// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "enccluster/errors.hpp"

namespace enccluster {

using Bytes = std::vector<uint8_t>;

// Little-endian append-only encoder. All wire formats in this library are
// fixed-width little-endian scalars plus length-prefixed blobs.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { u64(std::bit_cast<uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

  void bytes(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  // u32 length prefix + payload.
  void blob(std::span<const uint8_t> b) {
    u32(static_cast<uint32_t>(b.size()));
    bytes(b);
  }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  void raw(const void* p, size_t n) {
    // Little-endian hosts only; asserted once at startup in the test suite.
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  Bytes buf_;
};

// Bounds-checked decoder; throws decode-error on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> b) : buf_(b) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { return read<uint16_t>(); }
  uint32_t u32() { return read<uint32_t>(); }
  uint64_t u64() { return read<uint64_t>(); }
  int64_t i64() { return std::bit_cast<int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::span<const uint8_t> bytes(size_t n) { return take(n); }

  std::span<const uint8_t> blob() {
    const uint32_t n = u32();
    return take(n);
  }

  size_t remaining() const { return buf_.size() - pos_; }
  bool done() const { return remaining() == 0; }

  void expect_done(const char* what) {
    require(done(), Errc::decode_error, std::string(what) + ": trailing bytes");
  }

 private:
  template <class T>
  T read() {
    auto s = take(sizeof(T));
    T v;
    std::memcpy(&v, s.data(), sizeof(T));
    return v;
  }

  std::span<const uint8_t> take(size_t n) {
    require(remaining() >= n, Errc::decode_error, "truncated input");
    auto s = buf_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const uint8_t> buf_;
  size_t pos_ = 0;
};

}  // namespace enccluster
