// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmp.h>

#include <cstdint>

namespace enccluster::bn {

// Hard cap on modulus width; 576 bits covers every supported curve size.
inline constexpr int kMaxLimbs = 9;

// Prime-field element in Montgomery form. Plain value type; all arithmetic
// goes through the FpCtx that produced it. Limbs above the context's count
// are kept zero so memcmp-style comparison stays valid.
struct Fp {
  mp_limb_t v[kMaxLimbs];
};

class FpCtx {
 public:
  // modulus must be an odd prime that fits kMaxLimbs limbs.
  explicit FpCtx(const mpz_t modulus);
  ~FpCtx();
  FpCtx(const FpCtx&) = delete;
  FpCtx& operator=(const FpCtx&) = delete;

  int limbs() const noexcept { return n_; }
  unsigned bits() const noexcept { return bits_; }
  size_t byte_size() const noexcept { return size_t(n_) * 8; }
  const mpz_t& modulus() const noexcept { return mod_mpz_; }

  Fp zero() const noexcept;
  Fp one() const noexcept;
  Fp from_u64(uint64_t a) const;
  Fp from_mpz(const mpz_t a) const;
  void to_mpz(mpz_t out, const Fp& a) const;

  Fp add(const Fp& a, const Fp& b) const noexcept;
  Fp sub(const Fp& a, const Fp& b) const noexcept;
  Fp neg(const Fp& a) const noexcept;
  Fp mul(const Fp& a, const Fp& b) const noexcept;
  Fp sqr(const Fp& a) const noexcept;
  Fp dbl(const Fp& a) const noexcept { return add(a, a); }
  Fp mul_u64(const Fp& a, uint64_t k) const;

  // Requires a != 0; modulus primality makes the inverse exist.
  Fp inv(const Fp& a) const;
  Fp pow(const Fp& a, const mpz_t e) const;

  bool is_zero(const Fp& a) const noexcept;
  bool eq(const Fp& a, const Fp& b) const noexcept;

  bool is_square(const Fp& a) const;
  // Returns false when a has no root. Only valid for p = 3 (mod 4).
  bool sqrt(Fp& out, const Fp& a) const;

  // Parity of the canonical (non-Montgomery) representative.
  bool parity(const Fp& a) const;

  // Fixed-width little-endian canonical form, byte_size() bytes.
  void to_bytes(uint8_t* out, const Fp& a) const;
  // Throws Errc::decode_error when the encoding is not a reduced value.
  Fp from_bytes(const uint8_t* in) const;

 private:
  void redc(mp_limb_t* t, Fp& out) const noexcept;

  mp_limb_t mod_[kMaxLimbs];
  mp_limb_t r2_[kMaxLimbs];
  mp_limb_t one_[kMaxLimbs];
  mp_limb_t inv_;
  int n_;
  unsigned bits_;
  mpz_t mod_mpz_;
  mpz_t sqrt_exp_;  // (p + 1) / 4 when p = 3 (mod 4), else 0
};

}  // namespace enccluster::bn
