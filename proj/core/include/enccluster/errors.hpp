// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace enccluster {

// Failure classes surfaced by the library. Call sites branch on the code, the
// message carries context for logs only.
enum class Errc {
  invalid_argument,
  plaintext_bound_exceeded,
  label_mismatch,
  tag_mismatch,
  insufficient_shares,
  insufficient_ciphertexts,
  dlog_out_of_range,
  construction_failed,
  decode_error,
  io_error,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace enccluster
