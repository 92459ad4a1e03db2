// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#include "enccluster/errors.hpp"

namespace enccluster {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::plaintext_bound_exceeded: return "plaintext-bound-exceeded";
    case Errc::label_mismatch: return "label-mismatch";
    case Errc::tag_mismatch: return "tag-mismatch";
    case Errc::insufficient_shares: return "insufficient-shares";
    case Errc::insufficient_ciphertexts: return "insufficient-ciphertexts";
    case Errc::dlog_out_of_range: return "dlog-out-of-range";
    case Errc::construction_failed: return "construction-failed";
    case Errc::decode_error: return "decode-error";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace enccluster
