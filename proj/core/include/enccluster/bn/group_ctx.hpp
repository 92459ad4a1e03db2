// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "enccluster/bn/curve.hpp"
#include "enccluster/bytes.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::bn {

// Everything derived from one curve-family parameter: both base fields,
// the tower, generators for both groups, twist layout, and the loop
// constants the pairing uses. Construct once and share; instances are
// immutable after construction.
class GroupCtx {
 public:
  // Sizes with a precomputed seed. `requested` snaps down to the nearest
  // supported group-order width; anything below the smallest is an error.
  static const std::vector<unsigned>& supported_sizes();
  static unsigned snap_size(unsigned requested);

  explicit GroupCtx(unsigned requested_bits);
  ~GroupCtx();
  GroupCtx(const GroupCtx&) = delete;
  GroupCtx& operator=(const GroupCtx&) = delete;

  unsigned size_bits() const noexcept { return size_bits_; }
  const FpCtx& fp() const noexcept { return *fp_; }
  const TowerCtx& tower() const noexcept { return *tower_; }
  // Scalar field (mod the group order).
  const FpCtx& fr() const noexcept { return *fr_; }
  const mpz_t& p() const noexcept { return p_; }
  const mpz_t& r() const noexcept { return r_; }
  const mpz_t& u() const noexcept { return u_; }
  // Miller loop length 6u + 2.
  const mpz_t& loop() const noexcept { return loop_; }

  const Fp& b() const noexcept { return b_; }
  const Fp2& twist_b() const noexcept { return twist_b_; }
  bool twist_is_m() const noexcept { return twist_is_m_; }
  const mpz_t& twist_cofactor() const noexcept { return h2_; }

  const G1Affine& g1() const noexcept { return g1_; }
  const G2Affine& g2() const noexcept { return g2_; }
  G1Field f1() const noexcept { return G1Field{fp_.get()}; }
  G2Field f2() const noexcept { return G2Field{tower_.get()}; }

  bool g1_on_curve(const G1Affine& a) const;
  bool g2_on_curve(const G2Affine& a) const;
  // Full membership: on the twist and killed by the group order.
  bool g2_in_subgroup(const G2Affine& a) const;

  G1Jac g1_mul(const G1Affine& a, const mpz_t k) const;
  G2Jac g2_mul(const G2Affine& a, const mpz_t k) const;

  // Deterministic map of (domain, msg) onto the groups; different domains
  // give independent streams. Try-and-increment with an even/odd root
  // choice taken from the hash.
  G1Affine hash_to_g1(uint64_t domain, std::span<const uint8_t> msg) const;
  G2Affine hash_to_g2(uint64_t domain, std::span<const uint8_t> msg) const;

  // Uniform scalar in [0, r) by rejection.
  void sample_scalar(mpz_t out, Rng& rng) const;

  // Compressed point encodings: flag byte (0 identity, 2 or 3 carrying the
  // y parity), then the x coordinate fixed-width little-endian. Decoding
  // rejects malformed flags, out-of-range coordinates and points off the
  // curve; twist points are also checked into the order-r subgroup.
  size_t g1_encoded_size() const noexcept;
  size_t g2_encoded_size() const noexcept;
  void g1_to_bytes(Bytes& out, const G1Affine& a) const;
  void g2_to_bytes(Bytes& out, const G2Affine& a) const;
  G1Affine g1_from_bytes(std::span<const uint8_t> in) const;
  G2Affine g2_from_bytes(std::span<const uint8_t> in) const;

 private:
  void derive_curve();
  void derive_twist();

  unsigned size_bits_;
  std::unique_ptr<FpCtx> fp_;
  std::unique_ptr<TowerCtx> tower_;
  std::unique_ptr<FpCtx> fr_;
  mpz_t p_, r_, u_, loop_, h2_;
  Fp b_;
  Fp2 twist_b_;
  bool twist_is_m_ = false;
  G1Affine g1_;
  G2Affine g2_;
};

}  // namespace enccluster::bn
