// SPDX-License-Identifier: Apache-2.0
#include "enccluster/bn/tower.hpp"

#include "enccluster/errors.hpp"

namespace enccluster::bn {

namespace {

struct MpzTmp {
  mpz_t z;
  MpzTmp() { mpz_init(z); }
  ~MpzTmp() { mpz_clear(z); }
};

}  // namespace

TowerCtx::TowerCtx(const FpCtx& fp) : fp_(fp) {
  require(mpz_fdiv_ui(fp.modulus(), 4) == 3 && mpz_fdiv_ui(fp.modulus(), 6) == 1,
          Errc::invalid_argument, "tower needs p = 3 (mod 4) and p = 1 (mod 6)");

  const Fp2 xi{fp.one(), fp.one()};
  MpzTmp e2, e3, e6;
  mpz_mul(e2.z, fp.modulus(), fp.modulus());
  mpz_sub_ui(e2.z, e2.z, 1);
  mpz_divexact_ui(e3.z, e2.z, 3);
  mpz_divexact_ui(e2.z, e2.z, 2);
  mpz_sub_ui(e6.z, fp.modulus(), 1);
  mpz_divexact_ui(e6.z, e6.z, 6);

  // v^3 - xi and w^2 - v stay irreducible only if xi is neither a square
  // nor a cube in Fp2.
  require(!eq2(pow2(xi, e2.z), f2_one()), Errc::invalid_argument,
          "xi is a square in Fp2");
  require(!eq2(pow2(xi, e3.z), f2_one()), Errc::invalid_argument,
          "xi is a cube in Fp2");

  g1_[0] = f2_one();
  g1_[1] = pow2(xi, e6.z);
  for (int k = 2; k < 6; ++k) g1_[k] = mul2(g1_[k - 1], g1_[1]);
  for (int k = 0; k < 6; ++k) {
    g2_[k] = fp.add(fp.sqr(g1_[k].a), fp.sqr(g1_[k].b));
    g3_[k] = mul2_fp(g1_[k], g2_[k]);
  }
}

TowerCtx::~TowerCtx() = default;

Fp2 TowerCtx::f2_zero() const { return {fp_.zero(), fp_.zero()}; }
Fp2 TowerCtx::f2_one() const { return {fp_.one(), fp_.zero()}; }

Fp2 TowerCtx::f2_from_mpz(const mpz_t re, const mpz_t im) const {
  return {fp_.from_mpz(re), fp_.from_mpz(im)};
}

Fp2 TowerCtx::add2(const Fp2& x, const Fp2& y) const {
  return {fp_.add(x.a, y.a), fp_.add(x.b, y.b)};
}

Fp2 TowerCtx::sub2(const Fp2& x, const Fp2& y) const {
  return {fp_.sub(x.a, y.a), fp_.sub(x.b, y.b)};
}

Fp2 TowerCtx::neg2(const Fp2& x) const { return {fp_.neg(x.a), fp_.neg(x.b)}; }

Fp2 TowerCtx::dbl2(const Fp2& x) const { return {fp_.dbl(x.a), fp_.dbl(x.b)}; }

Fp2 TowerCtx::mul2(const Fp2& x, const Fp2& y) const {
  const Fp t0 = fp_.mul(x.a, y.a);
  const Fp t1 = fp_.mul(x.b, y.b);
  const Fp cross = fp_.mul(fp_.add(x.a, x.b), fp_.add(y.a, y.b));
  return {fp_.sub(t0, t1), fp_.sub(fp_.sub(cross, t0), t1)};
}

Fp2 TowerCtx::sqr2(const Fp2& x) const {
  const Fp re = fp_.mul(fp_.add(x.a, x.b), fp_.sub(x.a, x.b));
  const Fp im = fp_.dbl(fp_.mul(x.a, x.b));
  return {re, im};
}

Fp2 TowerCtx::inv2(const Fp2& x) const {
  const Fp d = fp_.add(fp_.sqr(x.a), fp_.sqr(x.b));
  const Fp di = fp_.inv(d);
  return {fp_.mul(x.a, di), fp_.neg(fp_.mul(x.b, di))};
}

Fp2 TowerCtx::conj2(const Fp2& x) const { return {x.a, fp_.neg(x.b)}; }

Fp2 TowerCtx::mul2_fp(const Fp2& x, const Fp& k) const {
  return {fp_.mul(x.a, k), fp_.mul(x.b, k)};
}

Fp2 TowerCtx::mul2_u64(const Fp2& x, uint64_t k) const {
  const Fp kf = fp_.from_u64(k);
  return mul2_fp(x, kf);
}

Fp2 TowerCtx::mul2_xi(const Fp2& x) const {
  return {fp_.sub(x.a, x.b), fp_.add(x.a, x.b)};
}

Fp2 TowerCtx::pow2(const Fp2& x, const mpz_t e) const {
  require(mpz_sgn(e) >= 0, Errc::invalid_argument, "negative exponent");
  Fp2 acc = f2_one();
  const mp_bitcnt_t nbits = mpz_sgn(e) == 0 ? 0 : mpz_sizeinbase(e, 2);
  for (mp_bitcnt_t i = nbits; i-- > 0;) {
    acc = sqr2(acc);
    if (mpz_tstbit(e, i)) acc = mul2(acc, x);
  }
  return acc;
}

bool TowerCtx::is_zero2(const Fp2& x) const {
  return fp_.is_zero(x.a) && fp_.is_zero(x.b);
}

bool TowerCtx::eq2(const Fp2& x, const Fp2& y) const {
  return fp_.eq(x.a, y.a) && fp_.eq(x.b, y.b);
}

bool TowerCtx::is_square2(const Fp2& x) const {
  if (is_zero2(x)) return true;
  // x is a square iff its norm into Fp is one there.
  return fp_.is_square(fp_.add(fp_.sqr(x.a), fp_.sqr(x.b)));
}

bool TowerCtx::sqrt2(Fp2& out, const Fp2& x) const {
  if (is_zero2(x)) {
    out = f2_zero();
    return true;
  }
  const Fp half = fp_.inv(fp_.from_u64(2));
  Fp2 cand;
  if (fp_.is_zero(x.b)) {
    Fp r;
    if (fp_.sqrt(r, x.a)) {
      cand = {r, fp_.zero()};
    } else if (fp_.sqrt(r, fp_.neg(x.a))) {
      cand = {fp_.zero(), r};
    } else {
      return false;
    }
  } else {
    const Fp norm = fp_.add(fp_.sqr(x.a), fp_.sqr(x.b));
    Fp s;
    if (!fp_.sqrt(s, norm)) return false;
    Fp re2 = fp_.mul(fp_.add(x.a, s), half);
    if (!fp_.is_square(re2)) re2 = fp_.mul(fp_.sub(x.a, s), half);
    Fp re;
    if (!fp_.sqrt(re, re2)) return false;
    if (fp_.is_zero(re)) return false;
    const Fp im = fp_.mul(x.b, fp_.inv(fp_.dbl(re)));
    cand = {re, im};
  }
  if (!eq2(sqr2(cand), x)) return false;
  out = cand;
  return true;
}

Fp6 TowerCtx::f6_zero() const { return {f2_zero(), f2_zero(), f2_zero()}; }
Fp6 TowerCtx::f6_one() const { return {f2_one(), f2_zero(), f2_zero()}; }

Fp6 TowerCtx::add6(const Fp6& x, const Fp6& y) const {
  return {add2(x.c0, y.c0), add2(x.c1, y.c1), add2(x.c2, y.c2)};
}

Fp6 TowerCtx::sub6(const Fp6& x, const Fp6& y) const {
  return {sub2(x.c0, y.c0), sub2(x.c1, y.c1), sub2(x.c2, y.c2)};
}

Fp6 TowerCtx::neg6(const Fp6& x) const {
  return {neg2(x.c0), neg2(x.c1), neg2(x.c2)};
}

Fp6 TowerCtx::mul6(const Fp6& x, const Fp6& y) const {
  const Fp2 v0 = mul2(x.c0, y.c0);
  const Fp2 v1 = mul2(x.c1, y.c1);
  const Fp2 v2 = mul2(x.c2, y.c2);
  const Fp2 t12 = mul2(add2(x.c1, x.c2), add2(y.c1, y.c2));
  const Fp2 t01 = mul2(add2(x.c0, x.c1), add2(y.c0, y.c1));
  const Fp2 t02 = mul2(add2(x.c0, x.c2), add2(y.c0, y.c2));
  Fp6 r;
  r.c0 = add2(v0, mul2_xi(sub2(sub2(t12, v1), v2)));
  r.c1 = add2(sub2(sub2(t01, v0), v1), mul2_xi(v2));
  r.c2 = add2(sub2(sub2(t02, v0), v2), v1);
  return r;
}

Fp6 TowerCtx::sqr6(const Fp6& x) const {
  const Fp2 s0 = sqr2(x.c0);
  const Fp2 s1 = dbl2(mul2(x.c0, x.c1));
  const Fp2 s2 = sqr2(add2(sub2(x.c0, x.c1), x.c2));
  const Fp2 s3 = dbl2(mul2(x.c1, x.c2));
  const Fp2 s4 = sqr2(x.c2);
  Fp6 r;
  r.c0 = add2(s0, mul2_xi(s3));
  r.c1 = add2(s1, mul2_xi(s4));
  r.c2 = sub2(sub2(add2(add2(s1, s2), s3), s0), s4);
  return r;
}

Fp6 TowerCtx::inv6(const Fp6& x) const {
  const Fp2 a = sub2(sqr2(x.c0), mul2_xi(mul2(x.c1, x.c2)));
  const Fp2 b = sub2(mul2_xi(sqr2(x.c2)), mul2(x.c0, x.c1));
  const Fp2 c = sub2(sqr2(x.c1), mul2(x.c0, x.c2));
  const Fp2 f = add2(mul2(x.c0, a),
                     mul2_xi(add2(mul2(x.c2, b), mul2(x.c1, c))));
  const Fp2 fi = inv2(f);
  return {mul2(a, fi), mul2(b, fi), mul2(c, fi)};
}

Fp6 TowerCtx::mul6_v(const Fp6& x) const {
  return {mul2_xi(x.c2), x.c0, x.c1};
}

Fp6 TowerCtx::mul6_fp2(const Fp6& x, const Fp2& k) const {
  return {mul2(x.c0, k), mul2(x.c1, k), mul2(x.c2, k)};
}

Fp6 TowerCtx::mul6_01(const Fp6& x, const Fp2& b0, const Fp2& b1) const {
  const Fp2 v0 = mul2(x.c0, b0);
  const Fp2 v1 = mul2(x.c1, b1);
  Fp6 r;
  r.c0 = add2(v0, mul2_xi(mul2(x.c2, b1)));
  r.c1 = sub2(sub2(mul2(add2(x.c0, x.c1), add2(b0, b1)), v0), v1);
  r.c2 = add2(mul2(x.c2, b0), v1);
  return r;
}

bool TowerCtx::is_zero6(const Fp6& x) const {
  return is_zero2(x.c0) && is_zero2(x.c1) && is_zero2(x.c2);
}

bool TowerCtx::eq6(const Fp6& x, const Fp6& y) const {
  return eq2(x.c0, y.c0) && eq2(x.c1, y.c1) && eq2(x.c2, y.c2);
}

Fp12 TowerCtx::f12_one() const { return {f6_one(), f6_zero()}; }

Fp12 TowerCtx::mul12(const Fp12& x, const Fp12& y) const {
  const Fp6 t0 = mul6(x.c0, y.c0);
  const Fp6 t1 = mul6(x.c1, y.c1);
  const Fp6 cross = mul6(add6(x.c0, x.c1), add6(y.c0, y.c1));
  return {add6(t0, mul6_v(t1)), sub6(sub6(cross, t0), t1)};
}

Fp12 TowerCtx::sqr12(const Fp12& x) const {
  const Fp6 t = mul6(x.c0, x.c1);
  const Fp6 a = mul6(add6(x.c0, x.c1), add6(x.c0, mul6_v(x.c1)));
  return {sub6(sub6(a, t), mul6_v(t)), add6(t, t)};
}

Fp12 TowerCtx::inv12(const Fp12& x) const {
  const Fp6 d = sub6(sqr6(x.c0), mul6_v(sqr6(x.c1)));
  const Fp6 di = inv6(d);
  return {mul6(x.c0, di), neg6(mul6(x.c1, di))};
}

Fp12 TowerCtx::conj12(const Fp12& x) const { return {x.c0, neg6(x.c1)}; }

bool TowerCtx::eq12(const Fp12& x, const Fp12& y) const {
  return eq6(x.c0, y.c0) && eq6(x.c1, y.c1);
}

bool TowerCtx::is_one12(const Fp12& x) const { return eq12(x, f12_one()); }

// Coefficient of w^k lives at (i, j) with k = i + 2j; the p^m Frobenius
// multiplies it by xi^(k(p^m - 1)/6) after conjugating when m is odd.
Fp12 TowerCtx::frob12(const Fp12& x, int power) const {
  require(power >= 1 && power <= 3, Errc::invalid_argument,
          "frobenius power out of range");
  const Fp2* coeff[6] = {&x.c0.c0, &x.c1.c0, &x.c0.c1,
                         &x.c1.c1, &x.c0.c2, &x.c1.c2};
  Fp2 out[6];
  for (int k = 0; k < 6; ++k) {
    switch (power) {
      case 1:
        out[k] = mul2(conj2(*coeff[k]), g1_[k]);
        break;
      case 2:
        out[k] = mul2_fp(*coeff[k], g2_[k]);
        break;
      default:
        out[k] = mul2(conj2(*coeff[k]), g3_[k]);
        break;
    }
  }
  Fp12 r;
  r.c0.c0 = out[0];
  r.c1.c0 = out[1];
  r.c0.c1 = out[2];
  r.c1.c1 = out[3];
  r.c0.c2 = out[4];
  r.c1.c2 = out[5];
  return r;
}

Fp12 TowerCtx::pow12(const Fp12& x, const mpz_t e) const {
  require(mpz_sgn(e) >= 0, Errc::invalid_argument, "negative exponent");
  Fp12 acc = f12_one();
  const mp_bitcnt_t nbits = mpz_sgn(e) == 0 ? 0 : mpz_sizeinbase(e, 2);
  for (mp_bitcnt_t i = nbits; i-- > 0;) {
    acc = sqr12(acc);
    if (mpz_tstbit(e, i)) acc = mul12(acc, x);
  }
  return acc;
}

Fp12 TowerCtx::cyclo_sqr(const Fp12& x) const {
  // Squaring via the three Fp4 sub-algebras spanned by (w^k, w^(k+3)).
  const Fp2& f0 = x.c0.c0;
  const Fp2& f1 = x.c1.c0;
  const Fp2& f2 = x.c0.c1;
  const Fp2& f3 = x.c1.c1;
  const Fp2& f4 = x.c0.c2;
  const Fp2& f5 = x.c1.c2;
  const auto sqr4 = [&](const Fp2& u, const Fp2& v) {
    const Fp2 u2 = sqr2(u);
    const Fp2 v2 = sqr2(v);
    return std::pair<Fp2, Fp2>{add2(u2, mul2_xi(v2)), dbl2(mul2(u, v))};
  };
  const auto tri = [&](const Fp2& u) { return add2(dbl2(u), u); };
  const auto [a0, a1] = sqr4(f0, f3);
  const auto [b0, b1] = sqr4(f1, f4);
  const auto [c0, c1] = sqr4(f2, f5);
  Fp12 r;
  r.c0.c0 = sub2(tri(a0), dbl2(f0));
  r.c1.c1 = add2(tri(a1), dbl2(f3));
  r.c1.c0 = add2(tri(mul2_xi(c1)), dbl2(f1));
  r.c0.c2 = sub2(tri(c0), dbl2(f4));
  r.c0.c1 = sub2(tri(b0), dbl2(f2));
  r.c1.c2 = add2(tri(b1), dbl2(f5));
  return r;
}

Fp12 TowerCtx::cyclo_pow(const Fp12& x, const mpz_t e) const {
  require(mpz_sgn(e) >= 0, Errc::invalid_argument, "negative exponent");
  Fp12 acc = f12_one();
  const mp_bitcnt_t nbits = mpz_sgn(e) == 0 ? 0 : mpz_sizeinbase(e, 2);
  for (mp_bitcnt_t i = nbits; i-- > 0;) {
    acc = cyclo_sqr(acc);
    if (mpz_tstbit(e, i)) acc = mul12(acc, x);
  }
  return acc;
}

Fp12 TowerCtx::mul12_line_d(const Fp12& f, const Fp2& a, const Fp2& b,
                            const Fp2& c) const {
  // Line = a + (b + c*v)*w.
  const Fp6 t0 = mul6_fp2(f.c0, a);
  const Fp6 t1 = mul6_01(f.c1, b, c);
  const Fp6 cross = mul6_01(add6(f.c0, f.c1), add2(a, b), c);
  Fp12 r;
  r.c0 = add6(t0, mul6_v(t1));
  r.c1 = sub6(sub6(cross, t0), t1);
  return r;
}

Fp12 TowerCtx::mul12_line_m(const Fp12& f, const Fp2& a, const Fp2& b,
                            const Fp2& c) const {
  // Line = a + (b*v + c*v^2)*w.
  const Fp6 f0l0 = mul6_fp2(f.c0, a);
  const Fp6 f1l1 = mul6_v(mul6_01(f.c1, b, c));
  const Fp6 f0l1 = mul6_v(mul6_01(f.c0, b, c));
  const Fp6 f1l0 = mul6_fp2(f.c1, a);
  Fp12 r;
  r.c0 = add6(f0l0, mul6_v(f1l1));
  r.c1 = add6(f0l1, f1l0);
  return r;
}

}  // namespace enccluster::bn
