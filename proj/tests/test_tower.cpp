// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <gmpxx.h>

#include <enccluster/bn/tower.hpp>
#include <enccluster/errors.hpp>

using namespace enccluster::bn;
using enccluster::Error;

namespace {

// 254-bit curve prime whose quadratic extension accepts 1 + i as the
// tower non-residue.
const char* kP =
    "14474011154664604418826793912917134601050262167522453748758268299814819058"
    "459";

struct Fixture {
  mpz_class p;
  FpCtx fp;
  TowerCtx tw;
  gmp_randclass rnd;

  Fixture() : p(kP), fp(p.get_mpz_t()), tw(fp), rnd(gmp_randinit_default) {
    rnd.seed(7);
  }

  Fp2 rand2() {
    const mpz_class a = rnd.get_z_range(p), b = rnd.get_z_range(p);
    return tw.f2_from_mpz(a.get_mpz_t(), b.get_mpz_t());
  }
  Fp6 rand6() { return {rand2(), rand2(), rand2()}; }
  Fp12 rand12() { return {rand6(), rand6()}; }
};

}  // namespace

TEST_CASE("quadratic extension field laws") {
  Fixture f;
  auto& t = f.tw;
  for (int i = 0; i < 25; ++i) {
    const Fp2 x = f.rand2(), y = f.rand2(), z = f.rand2();
    CHECK(t.eq2(t.mul2(x, y), t.mul2(y, x)));
    CHECK(t.eq2(t.mul2(t.mul2(x, y), z), t.mul2(x, t.mul2(y, z))));
    CHECK(t.eq2(t.mul2(x, t.add2(y, z)), t.add2(t.mul2(x, y), t.mul2(x, z))));
    CHECK(t.eq2(t.sqr2(x), t.mul2(x, x)));
    if (!t.is_zero2(x)) CHECK(t.eq2(t.mul2(x, t.inv2(x)), t.f2_one()));
    CHECK(t.eq2(t.mul2_xi(x), t.mul2(x, {f.fp.one(), f.fp.one()})));
    CHECK(t.eq2(t.conj2(t.mul2(x, y)), t.mul2(t.conj2(x), t.conj2(y))));
    // Frobenius on Fp2 is conjugation.
    CHECK(t.eq2(t.pow2(x, f.p.get_mpz_t()), t.conj2(x)));
  }
}

TEST_CASE("quadratic extension square roots") {
  Fixture f;
  auto& t = f.tw;
  int squares = 0;
  for (int i = 0; i < 40; ++i) {
    const Fp2 x = f.rand2();
    const Fp2 sq = t.sqr2(x);
    Fp2 root;
    REQUIRE(t.is_square2(sq));
    REQUIRE(t.sqrt2(root, sq));
    CHECK(t.eq2(t.sqr2(root), sq));

    const Fp2 y = f.rand2();
    if (t.is_square2(y)) {
      ++squares;
      REQUIRE(t.sqrt2(root, y));
      CHECK(t.eq2(t.sqr2(root), y));
    } else {
      CHECK(!t.sqrt2(root, y));
    }
  }
  CHECK(squares > 8);
  CHECK(squares < 32);
  // Purely real and purely imaginary inputs hit the degenerate branch.
  Fp2 root;
  const Fp2 real{f.fp.from_u64(49), f.fp.zero()};
  REQUIRE(t.sqrt2(root, real));
  CHECK(t.eq2(t.sqr2(root), real));
}

TEST_CASE("cubic extension ops agree with dense multiplication") {
  Fixture f;
  auto& t = f.tw;
  const Fp6 v_elem{t.f2_zero(), t.f2_one(), t.f2_zero()};
  for (int i = 0; i < 15; ++i) {
    const Fp6 x = f.rand6(), y = f.rand6(), z = f.rand6();
    CHECK(t.eq6(t.mul6(x, y), t.mul6(y, x)));
    CHECK(t.eq6(t.mul6(t.mul6(x, y), z), t.mul6(x, t.mul6(y, z))));
    CHECK(t.eq6(t.sqr6(x), t.mul6(x, x)));
    CHECK(t.eq6(t.mul6(x, t.inv6(x)), t.f6_one()));
    CHECK(t.eq6(t.mul6_v(x), t.mul6(x, v_elem)));
    const Fp2 b0 = f.rand2(), b1 = f.rand2();
    const Fp6 sparse{b0, b1, t.f2_zero()};
    CHECK(t.eq6(t.mul6_01(x, b0, b1), t.mul6(x, sparse)));
    const Fp2 k = f.rand2();
    const Fp6 scalar{k, t.f2_zero(), t.f2_zero()};
    CHECK(t.eq6(t.mul6_fp2(x, k), t.mul6(x, scalar)));
  }
}

TEST_CASE("full extension multiplication, inversion, frobenius") {
  Fixture f;
  auto& t = f.tw;
  mpz_class p2 = f.p * f.p, p3 = p2 * f.p;
  for (int i = 0; i < 6; ++i) {
    const Fp12 x = f.rand12(), y = f.rand12(), z = f.rand12();
    CHECK(t.eq12(t.mul12(x, y), t.mul12(y, x)));
    CHECK(t.eq12(t.mul12(t.mul12(x, y), z), t.mul12(x, t.mul12(y, z))));
    CHECK(t.eq12(t.sqr12(x), t.mul12(x, x)));
    CHECK(t.is_one12(t.mul12(x, t.inv12(x))));
    CHECK(t.eq12(t.frob12(x, 1), t.pow12(x, f.p.get_mpz_t())));
    CHECK(t.eq12(t.frob12(x, 2), t.pow12(x, p2.get_mpz_t())));
    CHECK(t.eq12(t.frob12(x, 3), t.pow12(x, p3.get_mpz_t())));
    CHECK(t.eq12(t.frob12(t.frob12(x, 1), 1), t.frob12(x, 2)));
    CHECK(t.eq12(t.frob12(t.frob12(x, 2), 1), t.frob12(x, 3)));
  }
}

TEST_CASE("cyclotomic squaring matches plain squaring on the subgroup") {
  Fixture f;
  auto& t = f.tw;
  for (int i = 0; i < 6; ++i) {
    const Fp12 x = f.rand12();
    // Map into the cyclotomic subgroup: x^((p^6 - 1)(p^2 + 1)).
    const Fp12 y = t.mul12(t.conj12(x), t.inv12(x));
    const Fp12 c = t.mul12(t.frob12(y, 2), y);
    CHECK(t.eq12(t.cyclo_sqr(c), t.sqr12(c)));

    const mpz_class e = f.rnd.get_z_bits(192);
    CHECK(t.eq12(t.cyclo_pow(c, e.get_mpz_t()), t.pow12(c, e.get_mpz_t())));
    // Inversion degenerates to conjugation there.
    CHECK(t.is_one12(t.mul12(c, t.conj12(c))));
  }
}

TEST_CASE("sparse line accumulators match dense multiplication") {
  Fixture f;
  auto& t = f.tw;
  for (int i = 0; i < 10; ++i) {
    const Fp12 x = f.rand12();
    const Fp2 a = f.rand2(), b = f.rand2(), c = f.rand2();
    Fp12 dense_d{{a, t.f2_zero(), t.f2_zero()}, {b, c, t.f2_zero()}};
    CHECK(t.eq12(t.mul12_line_d(x, a, b, c), t.mul12(x, dense_d)));
    Fp12 dense_m{{a, t.f2_zero(), t.f2_zero()}, {t.f2_zero(), b, c}};
    CHECK(t.eq12(t.mul12_line_m(x, a, b, c), t.mul12(x, dense_m)));
  }
}

TEST_CASE("tower construction rejects incompatible primes") {
  // 1 mod 4: i^2 = -1 is reducible.
  mpz_class p13 = 13;
  FpCtx bad(p13.get_mpz_t());
  CHECK_THROWS_AS(TowerCtx{bad}, Error);
  // 3 mod 4 but 1 + i is a square or cube in its quadratic extension.
  mpz_class alt(
      "218882428718392752222464057452572750886963111572978236626890378946452262"
      "08583");
  FpCtx altc(alt.get_mpz_t());
  CHECK_THROWS_AS(TowerCtx{altc}, Error);
}
