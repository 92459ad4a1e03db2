// SPDX-License-Identifier: Apache-2.0
#include "enccluster/bn/fp.hpp"

#include <cstring>

#include "enccluster/errors.hpp"

namespace enccluster::bn {

namespace {

void clear_limbs(mp_limb_t* v) { std::memset(v, 0, sizeof(mp_limb_t) * kMaxLimbs); }

// Limbs of |a| zero-extended to kMaxLimbs; a must be non-negative and fit.
void limbs_from_mpz(mp_limb_t* out, const mpz_t a) {
  clear_limbs(out);
  const int used = int(mpz_size(a));
  for (int i = 0; i < used; ++i) out[i] = mpz_getlimbn(a, i);
}

void mpz_from_limbs(mpz_t out, const mp_limb_t* v, int n) {
  mpz_import(out, size_t(n), -1 /* little-endian limb order */, sizeof(mp_limb_t), 0, 0, v);
}

}  // namespace

FpCtx::FpCtx(const mpz_t modulus) {
  require(mpz_sgn(modulus) > 0 && mpz_odd_p(modulus), Errc::invalid_argument,
          "field modulus must be an odd prime");
  require(mpz_sizeinbase(modulus, 2) <= size_t(kMaxLimbs) * 64, Errc::invalid_argument,
          "field modulus too wide");
  mpz_init_set(mod_mpz_, modulus);
  mpz_init(sqrt_exp_);
  n_ = int(mpz_size(modulus));
  bits_ = unsigned(mpz_sizeinbase(modulus, 2));
  limbs_from_mpz(mod_, modulus);

  // 2-adic Newton iteration for m^-1 mod 2^64, then negate.
  mp_limb_t x = mod_[0];
  for (int i = 0; i < 6; ++i) x *= 2 - mod_[0] * x;
  inv_ = ~x + 1;

  mpz_t t;
  mpz_init_set_ui(t, 1);
  mpz_mul_2exp(t, t, mp_bitcnt_t(64 * n_));
  mpz_mod(t, t, modulus);
  limbs_from_mpz(one_, t);
  mpz_set_ui(t, 1);
  mpz_mul_2exp(t, t, mp_bitcnt_t(128 * n_));
  mpz_mod(t, t, modulus);
  limbs_from_mpz(r2_, t);

  if (mpz_fdiv_ui(modulus, 4) == 3) {
    mpz_add_ui(t, modulus, 1);
    mpz_fdiv_q_2exp(sqrt_exp_, t, 2);
  }
  mpz_clear(t);
}

FpCtx::~FpCtx() {
  mpz_clear(mod_mpz_);
  mpz_clear(sqrt_exp_);
}

// Montgomery reduction of the 2n-limb value in t (t has 2n+1 limbs with the
// top limb zero on entry); result is fully reduced.
void FpCtx::redc(mp_limb_t* t, Fp& out) const noexcept {
  const int n = n_;
  for (int i = 0; i < n; ++i) {
    const mp_limb_t q = t[i] * inv_;
    const mp_limb_t carry = mpn_addmul_1(t + i, mod_, mp_size_t(n), q);
    mpn_add_1(t + i + n, t + i + n, mp_size_t(n - i + 1), carry);
  }
  clear_limbs(out.v);
  if (t[2 * n] != 0 || mpn_cmp(t + n, mod_, mp_size_t(n)) >= 0) {
    mpn_sub_n(out.v, t + n, mod_, mp_size_t(n));
  } else {
    std::memcpy(out.v, t + n, sizeof(mp_limb_t) * size_t(n));
  }
}

Fp FpCtx::zero() const noexcept {
  Fp r;
  clear_limbs(r.v);
  return r;
}

Fp FpCtx::one() const noexcept {
  Fp r;
  std::memcpy(r.v, one_, sizeof(r.v));
  return r;
}

Fp FpCtx::from_u64(uint64_t a) const {
  mpz_t t;
  mpz_init(t);
  mpz_import(t, 1, -1, 8, 0, 0, &a);
  Fp r = from_mpz(t);
  mpz_clear(t);
  return r;
}

Fp FpCtx::from_mpz(const mpz_t a) const {
  mpz_t t;
  mpz_init(t);
  mpz_fdiv_r(t, a, mod_mpz_);
  Fp raw;
  limbs_from_mpz(raw.v, t);
  mpz_clear(t);
  Fp r2;
  std::memcpy(r2.v, r2_, sizeof(r2.v));
  return mul(raw, r2);
}

void FpCtx::to_mpz(mpz_t out, const Fp& a) const {
  // Multiplying by 1 performs the reduction out of Montgomery form.
  mp_limb_t t[2 * kMaxLimbs + 1];
  std::memset(t, 0, sizeof(t));
  std::memcpy(t, a.v, sizeof(mp_limb_t) * size_t(n_));
  Fp std_form;
  redc(t, std_form);
  mpz_from_limbs(out, std_form.v, n_);
}

Fp FpCtx::add(const Fp& a, const Fp& b) const noexcept {
  Fp r;
  clear_limbs(r.v);
  const mp_limb_t cy = mpn_add_n(r.v, a.v, b.v, mp_size_t(n_));
  if (cy != 0 || mpn_cmp(r.v, mod_, mp_size_t(n_)) >= 0)
    mpn_sub_n(r.v, r.v, mod_, mp_size_t(n_));
  return r;
}

Fp FpCtx::sub(const Fp& a, const Fp& b) const noexcept {
  Fp r;
  clear_limbs(r.v);
  const mp_limb_t bw = mpn_sub_n(r.v, a.v, b.v, mp_size_t(n_));
  if (bw != 0) mpn_add_n(r.v, r.v, mod_, mp_size_t(n_));
  return r;
}

Fp FpCtx::neg(const Fp& a) const noexcept {
  if (is_zero(a)) return a;
  Fp r;
  clear_limbs(r.v);
  mpn_sub_n(r.v, mod_, a.v, mp_size_t(n_));
  return r;
}

Fp FpCtx::mul(const Fp& a, const Fp& b) const noexcept {
  mp_limb_t t[2 * kMaxLimbs + 1];
  t[2 * n_] = 0;
  mpn_mul_n(t, a.v, b.v, mp_size_t(n_));
  Fp r;
  redc(t, r);
  return r;
}

Fp FpCtx::sqr(const Fp& a) const noexcept {
  mp_limb_t t[2 * kMaxLimbs + 1];
  t[2 * n_] = 0;
  mpn_sqr(t, a.v, mp_size_t(n_));
  Fp r;
  redc(t, r);
  return r;
}

Fp FpCtx::mul_u64(const Fp& a, uint64_t k) const {
  return mul(a, from_u64(k));
}

Fp FpCtx::inv(const Fp& a) const {
  require(!is_zero(a), Errc::invalid_argument, "inverse of zero");
  mpz_t t;
  mpz_init(t);
  to_mpz(t, a);
  mpz_invert(t, t, mod_mpz_);
  Fp r = from_mpz(t);
  mpz_clear(t);
  return r;
}

Fp FpCtx::pow(const Fp& a, const mpz_t e) const {
  require(mpz_sgn(e) >= 0, Errc::invalid_argument, "negative exponent");
  Fp acc = one();
  const mp_bitcnt_t nbits = mpz_sgn(e) == 0 ? 0 : mpz_sizeinbase(e, 2);
  for (mp_bitcnt_t i = nbits; i-- > 0;) {
    acc = sqr(acc);
    if (mpz_tstbit(e, i)) acc = mul(acc, a);
  }
  return acc;
}

bool FpCtx::is_zero(const Fp& a) const noexcept {
  for (int i = 0; i < n_; ++i)
    if (a.v[i] != 0) return false;
  return true;
}

bool FpCtx::eq(const Fp& a, const Fp& b) const noexcept {
  return mpn_cmp(a.v, b.v, mp_size_t(n_)) == 0;
}

bool FpCtx::is_square(const Fp& a) const {
  if (is_zero(a)) return true;
  mpz_t t;
  mpz_init(t);
  to_mpz(t, a);
  const int leg = mpz_legendre(t, mod_mpz_);
  mpz_clear(t);
  return leg == 1;
}

bool FpCtx::sqrt(Fp& out, const Fp& a) const {
  require(mpz_sgn(sqrt_exp_) != 0, Errc::invalid_argument,
          "square root needs p = 3 (mod 4)");
  const Fp cand = pow(a, sqrt_exp_);
  if (!eq(sqr(cand), a)) return false;
  out = cand;
  return true;
}

bool FpCtx::parity(const Fp& a) const {
  mpz_t t;
  mpz_init(t);
  to_mpz(t, a);
  const bool odd = mpz_odd_p(t) != 0;
  mpz_clear(t);
  return odd;
}

void FpCtx::to_bytes(uint8_t* out, const Fp& a) const {
  mp_limb_t t[2 * kMaxLimbs + 1];
  std::memset(t, 0, sizeof(t));
  std::memcpy(t, a.v, sizeof(mp_limb_t) * size_t(n_));
  Fp std_form;
  redc(t, std_form);
  for (int i = 0; i < n_; ++i) {
    const mp_limb_t w = std_form.v[i];
    for (int j = 0; j < 8; ++j) out[i * 8 + j] = uint8_t(w >> (8 * j));
  }
}

Fp FpCtx::from_bytes(const uint8_t* in) const {
  Fp raw;
  clear_limbs(raw.v);
  for (int i = 0; i < n_; ++i) {
    mp_limb_t w = 0;
    for (int j = 0; j < 8; ++j) w |= mp_limb_t(in[i * 8 + j]) << (8 * j);
    raw.v[i] = w;
  }
  require(mpn_cmp(raw.v, mod_, mp_size_t(n_)) < 0, Errc::decode_error,
          "field element out of range");
  Fp r2;
  std::memcpy(r2.v, r2_, sizeof(r2.v));
  return mul(raw, r2);
}

}  // namespace enccluster::bn
