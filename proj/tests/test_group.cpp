// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <gmpxx.h>

#include <enccluster/bn/group_ctx.hpp>
#include <enccluster/errors.hpp>
#include <enccluster/rng.hpp>
#include <string>
#include <vector>

using namespace enccluster::bn;
using enccluster::Errc;
using enccluster::Error;
using enccluster::Rng;

namespace {

std::vector<uint8_t> bytes_of(const std::string& s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("size snapping picks the widest width not above the request") {
  const auto& sizes = GroupCtx::supported_sizes();
  REQUIRE(!sizes.empty());
  CHECK(sizes.front() == 128);
  CHECK(sizes.back() == 512);

  CHECK(GroupCtx::snap_size(128) == 128);
  CHECK(GroupCtx::snap_size(129) == 128);
  CHECK(GroupCtx::snap_size(300) == 256);
  CHECK(GroupCtx::snap_size(320) == 320);
  CHECK(GroupCtx::snap_size(321) == 320);
  CHECK(GroupCtx::snap_size(521) == 512);
  CHECK(GroupCtx::snap_size(100000) == 512);
  CHECK_THROWS_AS(GroupCtx::snap_size(127), Error);
}

TEST_CASE("every supported width yields prime, consistent parameters") {
  for (unsigned bits : GroupCtx::supported_sizes()) {
    CAPTURE(bits);
    GroupCtx g(bits);
    CHECK(g.size_bits() == bits);

    const mpz_class p(g.p()), r(g.r()), u(g.u()), loop(g.loop());
    CHECK(mpz_probab_prime_p(p.get_mpz_t(), 25) >= 1);
    CHECK(mpz_probab_prime_p(r.get_mpz_t(), 25) >= 1);
    CHECK(mpz_sizeinbase(r.get_mpz_t(), 2) == bits);
    CHECK(p % 4 == 3);
    CHECK(p % 6 == 1);
    CHECK(loop == 6 * u + 2);
    // Trace relation: the order misses p + 1 by 6u^2 + 1.
    CHECK(p - r == 6 * u * u);

    CHECK(g.g1_on_curve(g.g1()));
    CHECK(g.g2_in_subgroup(g.g2()));
    CHECK(!g.g1().inf);
    CHECK(!g.g2().inf);
  }
}

TEST_CASE("generators have the advertised order") {
  for (unsigned bits : {128u, 256u}) {
    CAPTURE(bits);
    GroupCtx g(bits);
    const G1Field f1 = g.f1();
    const G2Field f2 = g.f2();

    CHECK(jac_is_infinity(f1, g.g1_mul(g.g1(), g.r())));
    CHECK(jac_is_infinity(f2, g.g2_mul(g.g2(), g.r())));

    mpz_class rm1 = mpz_class(g.r()) - 1;
    const G1Jac neg = g.g1_mul(g.g1(), rm1.get_mpz_t());
    CHECK(jac_eq(f1, neg, jac_neg(f1, jac_from_affine(f1, g.g1()))));

    // Twist coefficient matches the declared layout.
    const auto& tw = g.tower();
    const Fp2 bext{g.b(), g.fp().zero()};
    const Fp2 xi{g.fp().one(), g.fp().one()};
    const Fp2 expect = g.twist_is_m() ? tw.mul2_xi(bext)
                                      : tw.mul2(bext, tw.inv2(xi));
    CHECK(tw.eq2(g.twist_b(), expect));
    CHECK(mpz_cmp_ui(g.twist_cofactor(), 1) > 0);
  }
}

TEST_CASE("scalar multiplication agrees with scalar arithmetic") {
  GroupCtx g(128);
  const G1Field f1 = g.f1();
  const G2Field f2 = g.f2();
  const mpz_class r(g.r());
  Rng rng(123);

  mpz_class a, b;
  g.sample_scalar(a.get_mpz_t(), rng);
  g.sample_scalar(b.get_mpz_t(), rng);

  const G1Jac pa = g.g1_mul(g.g1(), a.get_mpz_t());
  const G1Jac pb = g.g1_mul(g.g1(), b.get_mpz_t());
  mpz_class sum = (a + b) % r;
  CHECK(jac_eq(f1, jac_add(f1, pa, pb), g.g1_mul(g.g1(), sum.get_mpz_t())));

  mpz_class prod = (a * b) % r;
  const G1Jac nested = scalar_mul(f1, pb, a.get_mpz_t());
  CHECK(jac_eq(f1, nested, g.g1_mul(g.g1(), prod.get_mpz_t())));

  const G1Jac base = jac_from_affine(f1, g.g1());
  CHECK(jac_eq(f1, jac_dbl(f1, base), jac_add(f1, base, base)));

  mpz_class k(0);
  CHECK(jac_is_infinity(f1, g.g1_mul(g.g1(), k.get_mpz_t())));
  k = 1;
  CHECK(jac_eq(f1, g.g1_mul(g.g1(), k.get_mpz_t()), base));
  CHECK(jac_is_infinity(f1, g.g1_mul(g.g1(), r.get_mpz_t())));

  const G2Jac qa = g.g2_mul(g.g2(), a.get_mpz_t());
  const G2Jac qb = g.g2_mul(g.g2(), b.get_mpz_t());
  CHECK(jac_eq(f2, jac_add(f2, qa, qb), g.g2_mul(g.g2(), sum.get_mpz_t())));
}

TEST_CASE("hashing onto the groups is deterministic and domain separated") {
  GroupCtx g(128);
  const auto alpha = bytes_of("alpha"), beta = bytes_of("beta");

  const G1Affine h1 = g.hash_to_g1(1, alpha);
  const G1Affine h1again = g.hash_to_g1(1, alpha);
  CHECK(g.g1_on_curve(h1));
  CHECK(g.fp().eq(h1.x, h1again.x));
  CHECK(g.fp().eq(h1.y, h1again.y));

  const G1Affine other_domain = g.hash_to_g1(2, alpha);
  const G1Affine other_msg = g.hash_to_g1(1, beta);
  CHECK(!g.fp().eq(h1.x, other_domain.x));
  CHECK(!g.fp().eq(h1.x, other_msg.x));
  CHECK(g.g1_on_curve(other_domain));
  CHECK(g.g1_on_curve(other_msg));

  const G2Affine h2 = g.hash_to_g2(1, alpha);
  const G2Affine h2again = g.hash_to_g2(1, alpha);
  CHECK(g.g2_in_subgroup(h2));
  CHECK(g.tower().eq2(h2.x, h2again.x));
  CHECK(g.tower().eq2(h2.y, h2again.y));
  CHECK(!g.tower().eq2(h2.x, g.hash_to_g2(2, alpha).x));
  CHECK(g.g2_in_subgroup(g.hash_to_g2(2, alpha)));
}

TEST_CASE("scalar sampling is reproducible and in range") {
  GroupCtx g(160);
  const mpz_class r(g.r());

  Rng rng_a(5), rng_b(5), rng_c(6);
  bool all_same = true, any_diff = false;
  for (int i = 0; i < 8; ++i) {
    mpz_class x, y, z;
    g.sample_scalar(x.get_mpz_t(), rng_a);
    g.sample_scalar(y.get_mpz_t(), rng_b);
    g.sample_scalar(z.get_mpz_t(), rng_c);
    CHECK(x >= 0);
    CHECK(x < r);
    all_same = all_same && x == y;
    any_diff = any_diff || x != z;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("membership test rejects twist points off the order-r component") {
  GroupCtx g(128);
  const auto& tw = g.tower();

  bool found = false;
  for (uint64_t xn = 1; xn < 64 && !found; ++xn) {
    const Fp2 x{g.fp().from_u64(xn), g.fp().zero()};
    const Fp2 rhs = tw.add2(tw.mul2(tw.sqr2(x), x), g.twist_b());
    Fp2 y;
    if (!tw.sqrt2(y, rhs)) continue;
    const G2Affine cand{x, y, false};
    REQUIRE(g.g2_on_curve(cand));
    if (!g.g2_in_subgroup(cand)) found = true;
  }
  CHECK(found);

  // Off-curve points are rejected before any order check.
  const G2Affine junk{tw.f2_one(), tw.f2_one(), false};
  if (!g.g2_on_curve(junk)) CHECK(!g.g2_in_subgroup(junk));
}
