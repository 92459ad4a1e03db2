// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmp.h>

#include <vector>

#include "enccluster/bn/tower.hpp"

namespace enccluster::bn {

// Field adapters so one set of group formulas serves both coordinate
// fields. Each adapter forwards to the owning context.
struct G1Field {
  using Elem = Fp;
  const FpCtx* f;
  Elem add(const Elem& a, const Elem& b) const { return f->add(a, b); }
  Elem sub(const Elem& a, const Elem& b) const { return f->sub(a, b); }
  Elem neg(const Elem& a) const { return f->neg(a); }
  Elem dbl(const Elem& a) const { return f->dbl(a); }
  Elem mul(const Elem& a, const Elem& b) const { return f->mul(a, b); }
  Elem sqr(const Elem& a) const { return f->sqr(a); }
  Elem inv(const Elem& a) const { return f->inv(a); }
  Elem zero() const { return f->zero(); }
  Elem one() const { return f->one(); }
  bool is_zero(const Elem& a) const { return f->is_zero(a); }
  bool eq(const Elem& a, const Elem& b) const { return f->eq(a, b); }
};

struct G2Field {
  using Elem = Fp2;
  const TowerCtx* t;
  Elem add(const Elem& a, const Elem& b) const { return t->add2(a, b); }
  Elem sub(const Elem& a, const Elem& b) const { return t->sub2(a, b); }
  Elem neg(const Elem& a) const { return t->neg2(a); }
  Elem dbl(const Elem& a) const { return t->dbl2(a); }
  Elem mul(const Elem& a, const Elem& b) const { return t->mul2(a, b); }
  Elem sqr(const Elem& a) const { return t->sqr2(a); }
  Elem inv(const Elem& a) const { return t->inv2(a); }
  Elem zero() const { return t->f2_zero(); }
  Elem one() const { return t->f2_one(); }
  bool is_zero(const Elem& a) const { return t->is_zero2(a); }
  bool eq(const Elem& a, const Elem& b) const { return t->eq2(a, b); }
};

template <class F>
struct Affine {
  typename F::Elem x, y;
  bool inf = false;
};

// Jacobian coordinates (X/Z^2, Y/Z^3); Z = 0 encodes the identity.
template <class F>
struct Jac {
  typename F::Elem X, Y, Z;
};

template <class F>
Jac<F> jac_infinity(const F& f) {
  return {f.one(), f.one(), f.zero()};
}

template <class F>
bool jac_is_infinity(const F& f, const Jac<F>& p) {
  return f.is_zero(p.Z);
}

template <class F>
Jac<F> jac_from_affine(const F& f, const Affine<F>& a) {
  if (a.inf) return jac_infinity(f);
  return {a.x, a.y, f.one()};
}

template <class F>
Affine<F> jac_to_affine(const F& f, const Jac<F>& p) {
  if (jac_is_infinity(f, p)) return {f.zero(), f.zero(), true};
  const auto zi = f.inv(p.Z);
  const auto zi2 = f.sqr(zi);
  return {f.mul(p.X, zi2), f.mul(p.Y, f.mul(zi2, zi)), false};
}

template <class F>
Jac<F> jac_neg(const F& f, const Jac<F>& p) {
  return {p.X, f.neg(p.Y), p.Z};
}

// Doubling on y^2 = x^3 + b (a = 0).
template <class F>
Jac<F> jac_dbl(const F& f, const Jac<F>& p) {
  if (jac_is_infinity(f, p) || f.is_zero(p.Y)) return jac_infinity(f);
  const auto a = f.sqr(p.X);
  const auto b = f.sqr(p.Y);
  const auto c = f.sqr(b);
  auto d = f.sub(f.sqr(f.add(p.X, b)), f.add(a, c));
  d = f.dbl(d);
  const auto e = f.add(f.dbl(a), a);
  const auto ee = f.sqr(e);
  const auto x3 = f.sub(ee, f.dbl(d));
  const auto c8 = f.dbl(f.dbl(f.dbl(c)));
  const auto y3 = f.sub(f.mul(e, f.sub(d, x3)), c8);
  const auto z3 = f.dbl(f.mul(p.Y, p.Z));
  return {x3, y3, z3};
}

template <class F>
Jac<F> jac_add(const F& f, const Jac<F>& p, const Jac<F>& q) {
  if (jac_is_infinity(f, p)) return q;
  if (jac_is_infinity(f, q)) return p;
  const auto z1z1 = f.sqr(p.Z);
  const auto z2z2 = f.sqr(q.Z);
  const auto u1 = f.mul(p.X, z2z2);
  const auto u2 = f.mul(q.X, z1z1);
  const auto s1 = f.mul(p.Y, f.mul(q.Z, z2z2));
  const auto s2 = f.mul(q.Y, f.mul(p.Z, z1z1));
  if (f.eq(u1, u2)) {
    if (!f.eq(s1, s2)) return jac_infinity(f);
    return jac_dbl(f, p);
  }
  const auto h = f.sub(u2, u1);
  const auto i = f.sqr(f.dbl(h));
  const auto j = f.mul(h, i);
  const auto r = f.dbl(f.sub(s2, s1));
  const auto v = f.mul(u1, i);
  const auto x3 = f.sub(f.sub(f.sqr(r), j), f.dbl(v));
  const auto y3 = f.sub(f.mul(r, f.sub(v, x3)), f.dbl(f.mul(s1, j)));
  const auto z3 =
      f.mul(f.sub(f.sub(f.sqr(f.add(p.Z, q.Z)), z1z1), z2z2), h);
  return {x3, y3, z3};
}

template <class F>
bool jac_eq(const F& f, const Jac<F>& p, const Jac<F>& q) {
  const bool ip = jac_is_infinity(f, p), iq = jac_is_infinity(f, q);
  if (ip || iq) return ip == iq;
  const auto z1z1 = f.sqr(p.Z);
  const auto z2z2 = f.sqr(q.Z);
  if (!f.eq(f.mul(p.X, z2z2), f.mul(q.X, z1z1))) return false;
  return f.eq(f.mul(p.Y, f.mul(q.Z, z2z2)), f.mul(q.Y, f.mul(p.Z, z1z1)));
}

template <class F>
bool on_curve(const F& f, const Affine<F>& a, const typename F::Elem& b) {
  if (a.inf) return true;
  const auto rhs = f.add(f.mul(f.sqr(a.x), a.x), b);
  return f.eq(f.sqr(a.y), rhs);
}

// Width-4 signed digits, least significant first.
std::vector<int8_t> wnaf_digits(const mpz_t k);
// Plain non-adjacent form, digits in {-1, 0, 1}.
std::vector<int8_t> naf_digits(const mpz_t k);

template <class F>
Jac<F> scalar_mul(const F& f, const Jac<F>& p, const mpz_t k) {
  if (mpz_sgn(k) == 0 || jac_is_infinity(f, p)) return jac_infinity(f);
  const std::vector<int8_t> digits = wnaf_digits(k);
  // Odd multiples 1P, 3P, 5P, 7P.
  Jac<F> table[4];
  table[0] = p;
  const Jac<F> twice = jac_dbl(f, p);
  for (int i = 1; i < 4; ++i) table[i] = jac_add(f, table[i - 1], twice);
  Jac<F> acc = jac_infinity(f);
  for (size_t i = digits.size(); i-- > 0;) {
    acc = jac_dbl(f, acc);
    const int8_t d = digits[i];
    if (d > 0) acc = jac_add(f, acc, table[(d - 1) / 2]);
    if (d < 0) acc = jac_add(f, acc, jac_neg(f, table[(-d - 1) / 2]));
  }
  return acc;
}

using G1Affine = Affine<G1Field>;
using G1Jac = Jac<G1Field>;
using G2Affine = Affine<G2Field>;
using G2Jac = Jac<G2Field>;

}  // namespace enccluster::bn
