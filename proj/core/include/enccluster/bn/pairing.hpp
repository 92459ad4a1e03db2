// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "enccluster/bn/group_ctx.hpp"
#include "enccluster/bytes.hpp"

namespace enccluster::bn {

// Bilinear map e: G1 x G2 -> GT built from the ate loop over 6u + 2 with
// the two Frobenius correction steps, then the 2-3 cyclotomic final
// exponentiation. Line evaluation works on the twist; denominators are
// folded into the line coefficients because Fp2 factors vanish under the
// final exponentiation.
class Pairing {
 public:
  explicit Pairing(const GroupCtx& g);

  // T-dependent line coefficients for a fixed right-hand argument, one
  // triple per loop step in consumption order.
  struct Prepared {
    std::vector<std::array<Fp2, 3>> lines;
    bool inf = false;
  };

  Prepared prepare(const G2Affine& q) const;

  Fp12 miller(const G1Affine& p, const Prepared& pre) const;
  Fp12 miller(const G1Affine& p, const G2Affine& q) const;
  Fp12 final_exp(const Fp12& f) const;

  Fp12 pair(const G1Affine& p, const G2Affine& q) const;
  // Product of pairings sharing one accumulator and one final
  // exponentiation; spans must have equal length.
  Fp12 pair_product(std::span<const G1Affine> ps,
                    std::span<const G2Affine> qs) const;

  // e(g1, g2), cached.
  const Fp12& gt() const noexcept { return gt_; }
  const GroupCtx& group() const noexcept { return g_; }

  // Canonical fixed-width encoding of a target-group element.
  Bytes gt_bytes(const Fp12& x) const;

 private:
  struct Stepper;
  Fp12 hard_part(const Fp12& f) const;

  const GroupCtx& g_;
  std::vector<int8_t> loop_naf_;
  std::vector<int8_t> u_naf_;
  Fp2 frob_x_, frob_y_;  // twisted Frobenius coordinate scales
  Fp frob2_x_;           // x-scale of the squared Frobenius (real)
  Fp12 gt_;
};

}  // namespace enccluster::bn
