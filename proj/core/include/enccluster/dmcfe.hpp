// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "enccluster/bn/group_ctx.hpp"
#include "enccluster/bn/pairing.hpp"
#include "enccluster/bytes.hpp"

namespace enccluster::dmcfe {

// Multi-client inner-product encryption with per-round labels. Each of n
// clients holds a scalar pair s_i and a share matrix T_i; the T_i sum to
// zero across clients, so combining all n key shares cancels the masks.
// One label hash is shared by every ciphertext slot, which keeps the
// aggregate decryptable when the server picks a different slot per client.
// The flip side is deliberate and documented in the repo: slot differences
// within one (client, label) pair are offsets of each other in the group.

// One bilinear group plus its pairing engine, shared by every parameter
// set of the same width. Heavy to build, immutable afterwards.
struct GroupRuntime {
  bn::GroupCtx group;
  bn::Pairing pairing;

  explicit GroupRuntime(unsigned bits) : group(bits), pairing(group) {}
  static std::shared_ptr<const GroupRuntime> acquire(unsigned bits);
};

// Plaintext-bound policy. Composition rule: client_count x y_max x slot
// must stay within aggregate, or decryption can walk out of range.
struct Bounds {
  int64_t slot = int64_t(1) << 20;
  int64_t aggregate = int64_t(1) << 32;
  uint64_t y_max = 64;
};

class PublicParams {
 public:
  unsigned size_bits() const noexcept { return rt_->group.size_bits(); }
  unsigned client_count() const noexcept { return n_; }
  uint64_t session() const noexcept { return session_; }
  const Bounds& bounds() const noexcept { return bounds_; }
  const bn::GroupCtx& group() const noexcept { return rt_->group; }
  const bn::Pairing& pairing() const noexcept { return rt_->pairing; }

  // Per-label mask pair in the first group, common to all slots.
  std::array<bn::G1Affine, 2> label_mask(std::span<const uint8_t> label) const;
  // Per-function mask pair in the second group.
  std::array<bn::G2Affine, 2> tag_mask(std::span<const uint8_t> tag) const;

 private:
  friend PublicParams setup(unsigned, unsigned, uint64_t, const Bounds&);
  friend PublicParams params_from_bytes(std::span<const uint8_t>);
  PublicParams(std::shared_ptr<const GroupRuntime> rt, unsigned n,
               uint64_t session, const Bounds& b)
      : rt_(std::move(rt)), n_(n), session_(session), bounds_(b) {}

  std::shared_ptr<const GroupRuntime> rt_;
  unsigned n_;
  uint64_t session_;
  Bounds bounds_;
};

// security_bits snaps down to the nearest supported group width.
PublicParams setup(unsigned security_bits, unsigned client_count,
                   uint64_t seed, const Bounds& bounds = {});

Bytes params_to_bytes(const PublicParams& pp);
PublicParams params_from_bytes(std::span<const uint8_t> in);

struct ClientKeyPair {
  uint32_t client_id = 0;
  // Encryption key: masks every ciphertext slot under the label hash.
  std::array<bn::Fp, 2> s;
  // Key-share matrix, row-major; the n matrices sum to zero mod r.
  std::array<bn::Fp, 4> share;
};

// The dealer-side artifact of key generation: every client's material,
// handed out at most once per client.
class SetupTranscript {
 public:
  explicit SetupTranscript(const PublicParams& pp);

  uint32_t issued_count() const noexcept { return issued_total_; }

 private:
  friend ClientKeyPair keygen(const PublicParams&, uint32_t, SetupTranscript&);
  std::vector<ClientKeyPair> keys_;
  std::vector<bool> issued_;
  uint32_t issued_total_ = 0;
};

ClientKeyPair keygen(const PublicParams& pp, uint32_t client_id,
                     SetupTranscript& transcript);

// Weight vector y plus a caller scope (the round, for this protocol);
// shares combine only when the whole tag matches.
struct FunctionTag {
  uint64_t scope = 0;
  std::vector<uint64_t> y;

  Bytes canonical() const;
  bool operator==(const FunctionTag&) const = default;
};

struct PartialDecKey {
  uint32_t client_id = 0;
  FunctionTag tag;
  std::array<bn::G2Affine, 2> d;
};

struct FunctionalDecKey {
  FunctionTag tag;
  std::array<bn::G2Affine, 2> d;
  uint32_t contributing = 0;
};

PartialDecKey derive_partial_key(const PublicParams& pp,
                                 const ClientKeyPair& kp,
                                 std::span<const uint64_t> y, uint64_t scope);

// Requires exactly one share from every client, all under one tag.
FunctionalDecKey combine_keys(const PublicParams& pp,
                              std::span<const PartialDecKey> shares);

struct Ciphertext {
  uint32_t client_id = 0;
  Bytes label;
  std::vector<bn::G1Affine> slots;

  uint32_t slot_count() const noexcept { return uint32_t(slots.size()); }
};

Ciphertext encrypt(const PublicParams& pp, const ClientKeyPair& kp,
                   std::span<const int64_t> plaintexts,
                   std::span<const uint8_t> label);

Bytes partial_key_to_bytes(const PublicParams& pp, const PartialDecKey& k);
PartialDecKey partial_key_from_bytes(const PublicParams& pp,
                                     std::span<const uint8_t> in);
Bytes ciphertext_to_bytes(const PublicParams& pp, const Ciphertext& ct);
Ciphertext ciphertext_from_bytes(const PublicParams& pp,
                                 std::span<const uint8_t> in);

// Baby-step table for reading bounded exponents out of the target group.
// Built once per pairing engine and shared read-only; the walk runs
// outward from zero so small aggregates cost few giant steps.
class DlogTable {
 public:
  DlogTable(const bn::Pairing& e, uint32_t baby_steps);

  uint32_t baby_steps() const noexcept { return m_; }

  // Exponent x with gt^x == target and |x| <= bound, if one exists.
  std::optional<int64_t> solve(const bn::Fp12& target, int64_t bound) const;

 private:
  uint64_t fingerprint(const bn::Fp12& x, uint64_t which) const;

  const bn::Pairing* e_;
  uint32_t m_;
  bn::Fp12 giant_;  // gt^-m
  std::unordered_map<uint64_t, uint32_t> index_;
  std::vector<uint64_t> confirm_;
};

// Validated bundle of one functional key and the round's ciphertexts.
// Checks labels, tags and client coverage before touching any payload;
// caches the mask correction and the weighted slot table so per-index
// decryption costs one pairing plus the discrete-log walk.
class DecryptSession {
 public:
  DecryptSession(const PublicParams& pp, const FunctionalDecKey& dk,
                 std::span<const Ciphertext> cts);

  uint32_t slot_count() const noexcept { return slot_count_; }
  // Clients with nonzero weight, in ciphertext-table order.
  const std::vector<uint32_t>& active_clients() const noexcept {
    return active_;
  }

  // Sum over active clients of y_i times slot s of client i.
  int64_t value_at(uint32_t slot, const DlogTable& table) const;
  // Same, but client k contributes its slot slot_for[k] (indexed as in
  // active_clients()).
  int64_t value_mixed(std::span<const uint32_t> slot_for,
                      const DlogTable& table) const;

 private:
  int64_t read_exponent(const bn::G1Jac& acc, const DlogTable& table) const;

  const PublicParams* pp_;
  uint32_t slot_count_ = 0;
  std::vector<uint32_t> active_;
  bn::Fp12 correction_;
  std::vector<std::vector<bn::G1Jac>> scaled_;
};

// One-shot form of the session for a single slot.
int64_t decrypt(const PublicParams& pp, const FunctionalDecKey& dk,
                std::span<const Ciphertext> cts, uint32_t slot,
                const DlogTable& table);

}  // namespace enccluster::dmcfe
