// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmp.h>

#include "enccluster/bn/fp.hpp"

namespace enccluster::bn {

// Quadratic extension: a + b*i with i^2 = -1 (needs p = 3 mod 4).
struct Fp2 {
  Fp a, b;
};

// Cubic extension of Fp2: c0 + c1*v + c2*v^2 with v^3 = xi = 1 + i.
struct Fp6 {
  Fp2 c0, c1, c2;
};

// Quadratic extension of Fp6: c0 + c1*w with w^2 = v, hence w^6 = xi.
struct Fp12 {
  Fp6 c0, c1;
};

// Field arithmetic for the 2-3-2 tower plus the Frobenius tables the
// pairing needs. Holds a reference to the base-field context; keep the
// FpCtx alive for as long as the tower is used.
class TowerCtx {
 public:
  explicit TowerCtx(const FpCtx& fp);
  TowerCtx(const TowerCtx&) = delete;
  TowerCtx& operator=(const TowerCtx&) = delete;
  ~TowerCtx();

  const FpCtx& fp() const noexcept { return fp_; }

  Fp2 f2_zero() const;
  Fp2 f2_one() const;
  Fp2 f2_from_mpz(const mpz_t re, const mpz_t im) const;
  Fp2 add2(const Fp2& x, const Fp2& y) const;
  Fp2 sub2(const Fp2& x, const Fp2& y) const;
  Fp2 neg2(const Fp2& x) const;
  Fp2 dbl2(const Fp2& x) const;
  Fp2 mul2(const Fp2& x, const Fp2& y) const;
  Fp2 sqr2(const Fp2& x) const;
  Fp2 inv2(const Fp2& x) const;
  Fp2 conj2(const Fp2& x) const;
  Fp2 mul2_fp(const Fp2& x, const Fp& k) const;
  Fp2 mul2_u64(const Fp2& x, uint64_t k) const;
  // Multiply by the cubic/sextic non-residue xi = 1 + i.
  Fp2 mul2_xi(const Fp2& x) const;
  Fp2 pow2(const Fp2& x, const mpz_t e) const;
  bool is_zero2(const Fp2& x) const;
  bool eq2(const Fp2& x, const Fp2& y) const;
  bool is_square2(const Fp2& x) const;
  // False when x has no square root.
  bool sqrt2(Fp2& out, const Fp2& x) const;

  Fp6 f6_zero() const;
  Fp6 f6_one() const;
  Fp6 add6(const Fp6& x, const Fp6& y) const;
  Fp6 sub6(const Fp6& x, const Fp6& y) const;
  Fp6 neg6(const Fp6& x) const;
  Fp6 mul6(const Fp6& x, const Fp6& y) const;
  Fp6 sqr6(const Fp6& x) const;
  Fp6 inv6(const Fp6& x) const;
  // Multiply by v (the cubic generator): (c0,c1,c2) -> (xi*c2, c0, c1).
  Fp6 mul6_v(const Fp6& x) const;
  Fp6 mul6_fp2(const Fp6& x, const Fp2& k) const;
  // Multiply by a sparse element b0 + b1*v.
  Fp6 mul6_01(const Fp6& x, const Fp2& b0, const Fp2& b1) const;
  bool is_zero6(const Fp6& x) const;
  bool eq6(const Fp6& x, const Fp6& y) const;

  Fp12 f12_one() const;
  Fp12 mul12(const Fp12& x, const Fp12& y) const;
  Fp12 sqr12(const Fp12& x) const;
  Fp12 inv12(const Fp12& x) const;
  // Fp6-conjugation w -> -w; equals inversion on the cyclotomic subgroup.
  Fp12 conj12(const Fp12& x) const;
  bool eq12(const Fp12& x, const Fp12& y) const;
  bool is_one12(const Fp12& x) const;
  // x^(p^power) for power in {1, 2, 3}.
  Fp12 frob12(const Fp12& x, int power) const;
  Fp12 pow12(const Fp12& x, const mpz_t e) const;
  // Squaring valid only inside the cyclotomic subgroup (order p^4 - p^2 + 1).
  Fp12 cyclo_sqr(const Fp12& x) const;
  // Exponentiation of a cyclotomic element by a non-negative exponent.
  Fp12 cyclo_pow(const Fp12& x, const mpz_t e) const;

  // Line-function accumulators for the two sextic twist layouts. The three
  // coefficients sit at w-degrees {0, 1, 3} (D) or {0, 3, 5} (M).
  Fp12 mul12_line_d(const Fp12& f, const Fp2& a, const Fp2& b, const Fp2& c) const;
  Fp12 mul12_line_m(const Fp12& f, const Fp2& a, const Fp2& b, const Fp2& c) const;

 private:
  const FpCtx& fp_;
  Fp2 g1_[6];  // xi^(k(p-1)/6)
  Fp g2_[6];   // norms of g1: xi^(k(p^2-1)/6), real
  Fp2 g3_[6];  // g1 * g2
};

}  // namespace enccluster::bn
