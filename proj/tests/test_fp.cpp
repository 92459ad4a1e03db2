// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <gmpxx.h>

#include <enccluster/bn/fp.hpp>
#include <enccluster/errors.hpp>
#include <vector>

using enccluster::Errc;
using enccluster::Error;
using enccluster::bn::Fp;
using enccluster::bn::FpCtx;

namespace {

struct OracleField {
  mpz_class m;
  FpCtx ctx;
  gmp_randclass rnd;

  explicit OracleField(const char* modulus_dec)
      : m(modulus_dec), ctx(m.get_mpz_t()), rnd(gmp_randinit_default) {
    rnd.seed(42);
  }

  mpz_class sample() { return rnd.get_z_range(m); }
  Fp in(const mpz_class& a) { return ctx.from_mpz(a.get_mpz_t()); }
  mpz_class out(const Fp& a) {
    mpz_class r;
    ctx.to_mpz(r.get_mpz_t(), a);
    return r;
  }
};

// One limb, a BN-sized prime, and a full-width prime; all are 3 mod 4.
const char* kPrimes[] = {
    "2305843009213693951",
    "21888242871839275222246405745257275088696311157297823662689037894645226208583",
    "6864797660130609714981900799081393217269435300143305409394463459185543183397"
    "6560521225596406614545549772963113914808580371219879997166438125740282911150"
    "57151",
};

}  // namespace

TEST_CASE("field ops match big-integer arithmetic") {
  for (const char* prime : kPrimes) {
    OracleField f(prime);
    const mpz_class& m = f.m;
    for (int round = 0; round < 300; ++round) {
      const mpz_class a = f.sample(), b = f.sample();
      const Fp fa = f.in(a), fb = f.in(b);
      CHECK(f.out(f.ctx.add(fa, fb)) == (a + b) % m);
      CHECK(f.out(f.ctx.sub(fa, fb)) == ((a - b) % m + m) % m);
      CHECK(f.out(f.ctx.neg(fa)) == (m - a) % m);
      CHECK(f.out(f.ctx.mul(fa, fb)) == a * b % m);
      CHECK(f.out(f.ctx.sqr(fa)) == a * a % m);
      CHECK(f.ctx.eq(fa, f.in(a)));
    }
  }
}

TEST_CASE("boundary values stay reduced") {
  OracleField f(kPrimes[1]);
  const mpz_class& m = f.m;
  const std::vector<mpz_class> edges = {0, 1, 2, m - 1, m - 2, (m - 1) / 2};
  for (const mpz_class& a : edges) {
    for (const mpz_class& b : edges) {
      const Fp fa = f.in(a), fb = f.in(b);
      CHECK(f.out(f.ctx.add(fa, fb)) == (a + b) % m);
      CHECK(f.out(f.ctx.sub(fa, fb)) == ((a - b) % m + m) % m);
      CHECK(f.out(f.ctx.mul(fa, fb)) == a * b % m);
    }
  }
  CHECK(f.out(f.ctx.zero()) == 0);
  CHECK(f.out(f.ctx.one()) == 1);
  CHECK(f.ctx.is_zero(f.in(0)));
  CHECK(!f.ctx.is_zero(f.in(1)));
}

TEST_CASE("inverse and exponentiation agree with the oracle") {
  for (const char* prime : kPrimes) {
    OracleField f(prime);
    for (int round = 0; round < 40; ++round) {
      mpz_class a = f.sample();
      if (a == 0) a = 1;
      const Fp fa = f.in(a);
      CHECK(f.out(f.ctx.mul(f.ctx.inv(fa), fa)) == 1);

      const mpz_class e = f.rnd.get_z_bits(256);
      mpz_class expect;
      mpz_powm(expect.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), f.m.get_mpz_t());
      CHECK(f.out(f.ctx.pow(fa, e.get_mpz_t())) == expect);
    }
    CHECK_THROWS_AS((void)f.ctx.inv(f.ctx.zero()), Error);
  }
}

TEST_CASE("square roots round-trip and detect non-residues") {
  OracleField f(kPrimes[1]);
  int non_squares = 0;
  for (int round = 0; round < 60; ++round) {
    const mpz_class a = f.sample();
    const Fp fa = f.in(a);
    const Fp sq = f.ctx.sqr(fa);
    Fp root;
    REQUIRE(f.ctx.is_square(sq));
    REQUIRE(f.ctx.sqrt(root, sq));
    CHECK(f.out(f.ctx.sqr(root)) == f.out(sq));

    const Fp b = f.in(f.sample());
    const int leg = mpz_legendre(f.out(b).get_mpz_t(), f.m.get_mpz_t());
    CHECK(f.ctx.is_square(b) == (leg >= 0));
    if (leg == -1) {
      ++non_squares;
      CHECK(!f.ctx.sqrt(root, b));
    }
  }
  CHECK(non_squares > 10);  // sanity: the sampler saw both classes
}

TEST_CASE("byte encoding is canonical little-endian") {
  OracleField f(kPrimes[1]);
  CHECK(f.ctx.byte_size() == 32);
  for (int round = 0; round < 40; ++round) {
    const mpz_class a = f.sample();
    const Fp fa = f.in(a);
    std::vector<uint8_t> buf(f.ctx.byte_size());
    f.ctx.to_bytes(buf.data(), fa);

    mpz_class decoded;
    mpz_import(decoded.get_mpz_t(), buf.size(), -1, 1, 0, 0, buf.data());
    CHECK(decoded == a);
    CHECK(f.ctx.eq(f.ctx.from_bytes(buf.data()), fa));
    CHECK(f.ctx.parity(fa) == (mpz_odd_p(a.get_mpz_t()) != 0));
  }
  // Encodings of the modulus or larger are rejected.
  std::vector<uint8_t> bad(f.ctx.byte_size());
  mpz_export(bad.data(), nullptr, -1, 1, 0, 0, f.m.get_mpz_t());
  CHECK_THROWS_AS((void)f.ctx.from_bytes(bad.data()), Error);
}

TEST_CASE("small-scalar helpers") {
  OracleField f(kPrimes[0]);
  const mpz_class a = f.sample();
  CHECK(f.out(f.ctx.mul_u64(f.in(a), 12345)) == a * 12345 % f.m);
  CHECK(f.out(f.ctx.from_u64(0xffffffffffffffffULL)) ==
        mpz_class("18446744073709551615") % f.m);
  CHECK(f.out(f.ctx.dbl(f.in(a))) == a * 2 % f.m);
}

TEST_CASE("context rejects unusable moduli") {
  mpz_class even = 10;
  CHECK_THROWS_AS(FpCtx(even.get_mpz_t()), Error);
  mpz_class wide = mpz_class(1) << 600;
  wide += 3;
  CHECK_THROWS_AS(FpCtx(wide.get_mpz_t()), Error);
}
