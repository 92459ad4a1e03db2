// SPDX-License-Identifier: Apache-2.0
#include "enccluster/bn/pairing.hpp"

#include "enccluster/errors.hpp"

namespace enccluster::bn {

namespace {

struct Z {
  mpz_t z;
  Z() { mpz_init(z); }
  ~Z() { mpz_clear(z); }
};

}  // namespace

Pairing::Pairing(const GroupCtx& g) : g_(g) {
  loop_naf_ = naf_digits(g.loop());
  u_naf_ = naf_digits(g.u());

  // Twisted Frobenius scales: w^(2(p-1)) and w^(3(p-1)) land in Fp2.
  const TowerCtx& tw = g.tower();
  const FpCtx& fp = g.fp();
  Z e3, e2;
  mpz_sub_ui(e3.z, fp.modulus(), 1);
  mpz_divexact_ui(e3.z, e3.z, 3);
  mpz_sub_ui(e2.z, fp.modulus(), 1);
  mpz_divexact_ui(e2.z, e2.z, 2);
  const Fp2 xi{fp.one(), fp.one()};
  Fp2 cx = tw.pow2(xi, e3.z);
  Fp2 cy = tw.pow2(xi, e2.z);
  if (g.twist_is_m()) {
    cx = tw.inv2(cx);
    cy = tw.inv2(cy);
  }
  frob_x_ = cx;
  frob_y_ = cy;
  // Norm of the x-scale: the doubled map multiplies x by a real cube
  // root of unity and flips the sign of y, in either layout.
  frob2_x_ = fp.add(fp.sqr(cx.a), fp.sqr(cx.b));

  gt_ = pair(g.g1(), g.g2());
}

// Walks the ate loop over a fixed twist point, emitting one coefficient
// triple per step. Point updates run in Jacobian coordinates; every
// emitted triple is scaled by the slope denominator.
struct Pairing::Stepper {
  const GroupCtx& g;
  const TowerCtx& tw;
  G2Field f2;
  G2Jac t;

  Stepper(const GroupCtx& gc, const G2Affine& q)
      : g(gc), tw(gc.tower()), f2(gc.f2()), t(jac_from_affine(f2, q)) {}

  std::array<Fp2, 3> dbl_step() {
    const Fp2 x2 = tw.sqr2(t.X);
    const Fp2 z2 = tw.sqr2(t.Z);
    const Fp2 z3 = tw.mul2(z2, t.Z);
    const auto tri = [&](const Fp2& v) { return tw.add2(tw.dbl2(v), v); };
    std::array<Fp2, 3> c;
    c[0] = tw.dbl2(tw.mul2(t.Y, z3));                            // 2YZ^3
    c[1] = tw.neg2(tri(tw.mul2(x2, z2)));                        // -3X^2Z^2
    c[2] = tw.sub2(tri(tw.mul2(x2, t.X)), tw.dbl2(tw.sqr2(t.Y)));  // 3X^3-2Y^2
    if (g.twist_is_m()) c[0] = tw.mul2_xi(c[0]);
    t = jac_dbl(f2, t);
    return c;
  }

  std::array<Fp2, 3> add_step(const G2Affine& q) {
    const Fp2 z2 = tw.sqr2(t.Z);
    const Fp2 z3 = tw.mul2(z2, t.Z);
    const Fp2 h = tw.sub2(t.X, tw.mul2(q.x, z2));   // X - xQ Z^2
    const Fp2 n = tw.sub2(t.Y, tw.mul2(q.y, z3));   // Y - yQ Z^3
    std::array<Fp2, 3> c;
    c[0] = tw.mul2(t.Z, h);
    c[1] = tw.neg2(n);
    c[2] = tw.sub2(tw.mul2(n, q.x), tw.mul2(c[0], q.y));
    if (g.twist_is_m()) c[0] = tw.mul2_xi(c[0]);
    t = jac_add(f2, t, jac_from_affine(f2, q));
    return c;
  }
};

Pairing::Prepared Pairing::prepare(const G2Affine& q) const {
  Prepared pre;
  if (q.inf) {
    pre.inf = true;
    return pre;
  }
  const TowerCtx& tw = g_.tower();
  Stepper st(g_, q);
  const G2Affine qneg{q.x, tw.neg2(q.y), false};
  pre.lines.reserve(loop_naf_.size() + size_t(loop_naf_.size() / 2) + 2);
  for (size_t i = loop_naf_.size() - 1; i-- > 0;) {
    pre.lines.push_back(st.dbl_step());
    if (loop_naf_[i] > 0) pre.lines.push_back(st.add_step(q));
    if (loop_naf_[i] < 0) pre.lines.push_back(st.add_step(qneg));
  }
  // Correction steps with the twisted Frobenius images of q.
  const G2Affine q1{tw.mul2(tw.conj2(q.x), frob_x_),
                    tw.mul2(tw.conj2(q.y), frob_y_), false};
  const G2Affine q2neg{tw.mul2_fp(q.x, frob2_x_), q.y, false};
  pre.lines.push_back(st.add_step(q1));
  pre.lines.push_back(st.add_step(q2neg));
  return pre;
}

Fp12 Pairing::miller(const G1Affine& p, const Prepared& pre) const {
  const TowerCtx& tw = g_.tower();
  if (p.inf || pre.inf) return tw.f12_one();
  require(!pre.lines.empty(), Errc::invalid_argument, "empty line table");
  // One pass over the shared digit schedule, squaring between steps.
  Fp12 f = tw.f12_one();
  size_t cursor = 0;
  const auto eval = [&](const std::array<Fp2, 3>& c) {
    const Fp2 a = tw.mul2_fp(c[0], p.y);
    const Fp2 bx = tw.mul2_fp(c[1], p.x);
    if (g_.twist_is_m())
      f = tw.mul12_line_m(f, a, c[2], bx);
    else
      f = tw.mul12_line_d(f, a, bx, c[2]);
  };
  for (size_t i = loop_naf_.size() - 1; i-- > 0;) {
    f = tw.sqr12(f);
    eval(pre.lines[cursor++]);
    if (loop_naf_[i] != 0) eval(pre.lines[cursor++]);
  }
  eval(pre.lines[cursor++]);
  eval(pre.lines[cursor++]);
  return f;
}

Fp12 Pairing::miller(const G1Affine& p, const G2Affine& q) const {
  if (p.inf || q.inf) return g_.tower().f12_one();
  return miller(p, prepare(q));
}

Fp12 Pairing::hard_part(const Fp12& f) const {
  const TowerCtx& tw = g_.tower();
  // NAF exponentiation by u; inversion is conjugation here.
  const auto pow_u = [&](const Fp12& x) {
    Fp12 acc = x;
    const Fp12 xc = tw.conj12(x);
    for (size_t i = u_naf_.size() - 1; i-- > 0;) {
      acc = tw.cyclo_sqr(acc);
      if (u_naf_[i] > 0) acc = tw.mul12(acc, x);
      if (u_naf_[i] < 0) acc = tw.mul12(acc, xc);
    }
    return acc;
  };
  const auto six = [&](const Fp12& x) {
    Fp12 acc = tw.cyclo_sqr(x);
    acc = tw.mul12(acc, x);
    return tw.cyclo_sqr(acc);
  };
  const Fp12 t0 = pow_u(f);        // f^u
  const Fp12 t1 = pow_u(t0);       // f^(u^2)
  const Fp12 t2 = pow_u(t1);       // f^(u^3)

  const Fp12 t0_6 = six(t0);
  const Fp12 t0_12 = tw.cyclo_sqr(t0_6);
  const Fp12 t0_18 = tw.mul12(t0_12, t0_6);
  const Fp12 t1_6 = six(t1);
  const Fp12 t1_12 = tw.cyclo_sqr(t1_6);
  const Fp12 t1_18 = tw.mul12(t1_12, t1_6);
  const Fp12 t1_24 = tw.cyclo_sqr(t1_12);
  const Fp12 t1_30 = tw.mul12(t1_24, t1_6);
  const Fp12 t2_36 = six(six(t2));

  // Exponent digits in radix p: 1, 6u^2 + 1,
  // -(36u^3 + 18u^2 + 12u) + 1, -(36u^3 + 30u^2 + 18u + 2).
  const Fp12 d0 = tw.conj12(tw.mul12(tw.mul12(t2_36, t1_30),
                                     tw.mul12(t0_18, tw.cyclo_sqr(f))));
  const Fp12 d1 = tw.mul12(
      tw.conj12(tw.mul12(t2_36, tw.mul12(t1_18, t0_12))), f);
  const Fp12 d2 = tw.mul12(t1_6, f);
  Fp12 out = tw.mul12(d0, tw.frob12(d1, 1));
  out = tw.mul12(out, tw.frob12(d2, 2));
  return tw.mul12(out, tw.frob12(f, 3));
}

Fp12 Pairing::final_exp(const Fp12& f) const {
  const TowerCtx& tw = g_.tower();
  // Easy part: f^((p^6 - 1)(p^2 + 1)) lands in the cyclotomic subgroup.
  Fp12 g = tw.mul12(tw.conj12(f), tw.inv12(f));
  g = tw.mul12(tw.frob12(g, 2), g);
  return hard_part(g);
}

Fp12 Pairing::pair(const G1Affine& p, const G2Affine& q) const {
  return final_exp(miller(p, q));
}

Fp12 Pairing::pair_product(std::span<const G1Affine> ps,
                           std::span<const G2Affine> qs) const {
  require(ps.size() == qs.size(), Errc::invalid_argument,
          "pairing product needs matched inputs");
  const TowerCtx& tw = g_.tower();
  std::vector<Prepared> pres;
  pres.reserve(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) pres.push_back(prepare(qs[i]));

  Fp12 f = tw.f12_one();
  std::vector<size_t> cursors(ps.size(), 0);
  for (size_t i = loop_naf_.size() - 1; i-- > 0;) {
    f = tw.sqr12(f);
    for (size_t k = 0; k < ps.size(); ++k) {
      if (ps[k].inf || pres[k].inf) continue;
      const auto eval = [&](const std::array<Fp2, 3>& c) {
        const Fp2 a = tw.mul2_fp(c[0], ps[k].y);
        const Fp2 bx = tw.mul2_fp(c[1], ps[k].x);
        f = g_.twist_is_m() ? tw.mul12_line_m(f, a, c[2], bx)
                            : tw.mul12_line_d(f, a, bx, c[2]);
      };
      eval(pres[k].lines[cursors[k]++]);
      if (loop_naf_[i] != 0) eval(pres[k].lines[cursors[k]++]);
    }
  }
  for (size_t k = 0; k < ps.size(); ++k) {
    if (ps[k].inf || pres[k].inf) continue;
    const auto eval = [&](const std::array<Fp2, 3>& c) {
      const Fp2 a = tw.mul2_fp(c[0], ps[k].y);
      const Fp2 bx = tw.mul2_fp(c[1], ps[k].x);
      f = g_.twist_is_m() ? tw.mul12_line_m(f, a, c[2], bx)
                          : tw.mul12_line_d(f, a, bx, c[2]);
    };
    eval(pres[k].lines[cursors[k]++]);
    eval(pres[k].lines[cursors[k]++]);
  }
  return final_exp(f);
}

Bytes Pairing::gt_bytes(const Fp12& x) const {
  const FpCtx& fp = g_.fp();
  const size_t w = fp.byte_size();
  Bytes out(12 * w);
  const Fp* coords[12] = {
      &x.c0.c0.a, &x.c0.c0.b, &x.c0.c1.a, &x.c0.c1.b, &x.c0.c2.a, &x.c0.c2.b,
      &x.c1.c0.a, &x.c1.c0.b, &x.c1.c1.a, &x.c1.c1.b, &x.c1.c2.a, &x.c1.c2.b};
  for (int i = 0; i < 12; ++i) fp.to_bytes(out.data() + size_t(i) * w, *coords[i]);
  return out;
}

}  // namespace enccluster::bn
