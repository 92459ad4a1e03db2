// SPDX-License-Identifier: Apache-2.0
#include "enccluster/bn/group_ctx.hpp"

#include <algorithm>
#include <cstring>

#include "enccluster/errors.hpp"

namespace enccluster::bn {

namespace {

struct Z {
  mpz_t z;
  Z() { mpz_init(z); }
  explicit Z(unsigned long v) { mpz_init_set_ui(z, v); }
  ~Z() { mpz_clear(z); }
  Z(const Z&) = delete;
  Z& operator=(const Z&) = delete;
};

struct SizedSeed {
  unsigned bits;
  const char* u_hex;
};

// Group-order widths with their precomputed curve-family parameter. Each u
// is the smallest odd value whose order has exactly this width, both
// characteristic and order are prime, p = 3 (mod 4), and 1 + i is neither
// a square nor a cube in Fp2.
const SizedSeed kSeeds[] = {
    {128, "57e23823"},
    {160, "57e2268d17"},
    {192, "57e226619c7b"},
    {224, "57e22661690823"},
    {256, "57e2266168ce87ab"},
    {320, "57e2266168ce663b15b7"},
    {384, "57e2266168ce663a672dc2bf"},
    {448, "57e2266168ce663a672d7fe43cfb"},
    {512, "57e2266168ce663a672d7fe2fb9ebbe7"},
};

// p(u) and r(u) for the curve family.
void eval_p(mpz_t out, const mpz_t u) {
  // 36u^4 + 36u^3 + 24u^2 + 6u + 1
  Z t;
  mpz_mul(out, u, u);      // u^2
  mpz_mul_ui(out, out, 24);
  mpz_addmul_ui(out, u, 6);
  mpz_add_ui(out, out, 1);
  mpz_mul(t.z, u, u);
  mpz_mul(t.z, t.z, u);    // u^3
  mpz_addmul_ui(out, t.z, 36);
  mpz_mul(t.z, t.z, u);    // u^4
  mpz_addmul_ui(out, t.z, 36);
}

void eval_r(mpz_t out, const mpz_t u) {
  // 36u^4 + 36u^3 + 18u^2 + 6u + 1
  Z t;
  mpz_mul(out, u, u);
  mpz_mul_ui(out, out, 18);
  mpz_addmul_ui(out, u, 6);
  mpz_add_ui(out, out, 1);
  mpz_mul(t.z, u, u);
  mpz_mul(t.z, t.z, u);
  mpz_addmul_ui(out, t.z, 36);
  mpz_mul(t.z, t.z, u);
  mpz_addmul_ui(out, t.z, 36);
}

}  // namespace

const std::vector<unsigned>& GroupCtx::supported_sizes() {
  static const std::vector<unsigned> sizes = [] {
    std::vector<unsigned> s;
    for (const auto& e : kSeeds) s.push_back(e.bits);
    return s;
  }();
  return sizes;
}

unsigned GroupCtx::snap_size(unsigned requested) {
  const auto& sizes = supported_sizes();
  require(requested >= sizes.front(), Errc::invalid_argument,
          "group size below smallest supported width");
  unsigned best = sizes.front();
  for (unsigned s : sizes)
    if (s <= requested) best = s;
  return best;
}

GroupCtx::GroupCtx(unsigned requested_bits) {
  size_bits_ = snap_size(requested_bits);
  const SizedSeed* entry = nullptr;
  for (const auto& e : kSeeds)
    if (e.bits == size_bits_) entry = &e;
  require(entry != nullptr, Errc::invalid_argument, "unsupported group size");

  mpz_init(p_);
  mpz_init(r_);
  mpz_init(u_);
  mpz_init(loop_);
  mpz_init(h2_);
  mpz_set_str(u_, entry->u_hex, 16);
  eval_p(p_, u_);
  eval_r(r_, u_);
  mpz_mul_ui(loop_, u_, 6);
  mpz_add_ui(loop_, loop_, 2);

  fp_ = std::make_unique<FpCtx>(p_);
  tower_ = std::make_unique<TowerCtx>(*fp_);
  fr_ = std::make_unique<FpCtx>(r_);

  derive_curve();
  derive_twist();
}

GroupCtx::~GroupCtx() {
  mpz_clear(p_);
  mpz_clear(r_);
  mpz_clear(u_);
  mpz_clear(loop_);
  mpz_clear(h2_);
}

void GroupCtx::derive_curve() {
  const G1Field f = f1();
  for (uint64_t b_num = 1; b_num <= 64; ++b_num) {
    const Fp b = fp_->from_u64(b_num);
    for (uint64_t x_num = 1; x_num <= 24; ++x_num) {
      const Fp x = fp_->from_u64(x_num);
      const Fp rhs = fp_->add(fp_->mul(fp_->sqr(x), x), b);
      Fp y;
      if (!fp_->sqrt(y, rhs)) continue;
      const G1Affine cand{x, y, false};
      // The group order is prime, so one surviving point pins the order.
      if (jac_is_infinity(f, scalar_mul(f, jac_from_affine(f, cand), r_))) {
        b_ = b;
        g1_ = cand;
        return;
      }
      break;  // wrong order: no point on this curve can satisfy it
    }
  }
  fail(Errc::construction_failed, "no curve of prime order in family");
}

void GroupCtx::derive_twist() {
  // Twist trace candidates (t2 +- 3f)/2 and their negatives, where
  // t2 = t^2 - 2p and 3f^2 = 4p^2 - t2^2.
  Z t, t2, sq2, tmp, n2;
  mpz_mul(t.z, u_, u_);
  mpz_mul_ui(t.z, t.z, 6);
  mpz_add_ui(t.z, t.z, 1);
  mpz_mul(t2.z, t.z, t.z);
  mpz_submul_ui(t2.z, p_, 2);
  mpz_mul(tmp.z, p_, p_);
  mpz_mul_2exp(tmp.z, tmp.z, 2);      // 4p^2
  mpz_submul(tmp.z, t2.z, t2.z);      // 4p^2 - t2^2
  mpz_divexact_ui(tmp.z, tmp.z, 3);
  mpz_sqrt(sq2.z, tmp.z);
  {
    Z chk;
    mpz_mul(chk.z, sq2.z, sq2.z);
    require(mpz_cmp(chk.z, tmp.z) == 0, Errc::construction_failed,
            "twist discriminant is not a square");
  }

  Z p2;
  mpz_mul(p2.z, p_, p_);
  int hits = 0;
  for (int sign_t = -1; sign_t <= 1; sign_t += 2) {
    for (int sign_f = -1; sign_f <= 1; sign_f += 2) {
      Z s;
      mpz_mul_si(s.z, t2.z, sign_t);
      Z f3;
      mpz_mul_si(f3.z, sq2.z, 3 * sign_f);
      mpz_add(s.z, s.z, f3.z);
      require(mpz_even_p(s.z), Errc::construction_failed, "odd twist trace");
      mpz_divexact_ui(s.z, s.z, 2);
      Z cand;
      mpz_add_ui(cand.z, p2.z, 1);
      mpz_sub(cand.z, cand.z, s.z);
      if (mpz_divisible_p(cand.z, r_)) {
        mpz_set(n2.z, cand.z);
        ++hits;
      }
    }
  }
  require(hits == 1, Errc::construction_failed, "ambiguous twist order");
  mpz_divexact(h2_, n2.z, r_);

  const G2Field f = f2();
  const Fp2 xi{fp_->one(), fp_->one()};
  for (int layout = 0; layout < 2; ++layout) {
    const bool is_m = layout == 1;
    const Fp2 b2 = is_m ? tower_->mul2_xi({b_, fp_->zero()})
                        : tower_->mul2(Fp2{b_, fp_->zero()}, tower_->inv2(xi));
    int confirmed = 0;
    G2Affine gen{};
    bool have_gen = false;
    for (uint64_t x_num = 1; x_num <= 40 && confirmed < 2; ++x_num) {
      const Fp2 x{fp_->from_u64(x_num), fp_->zero()};
      const Fp2 rhs = tower_->add2(tower_->mul2(tower_->sqr2(x), x), b2);
      Fp2 y;
      if (!tower_->sqrt2(y, rhs)) continue;
      const G2Affine cand{x, y, false};
      if (!jac_is_infinity(f, scalar_mul(f, jac_from_affine(f, cand), n2.z)))
        break;  // wrong twist layout
      ++confirmed;
      if (!have_gen) {
        const G2Jac cleared = scalar_mul(f, jac_from_affine(f, cand), h2_);
        if (!jac_is_infinity(f, cleared)) {
          gen = jac_to_affine(f, cleared);
          have_gen = true;
        }
      }
    }
    if (confirmed >= 2 && have_gen) {
      twist_is_m_ = is_m;
      twist_b_ = b2;
      g2_ = gen;
      require(jac_is_infinity(f, g2_mul(g2_, r_)), Errc::construction_failed,
              "twist generator escapes the prime-order subgroup");
      return;
    }
  }
  fail(Errc::construction_failed, "no usable sextic twist layout");
}

bool GroupCtx::g1_on_curve(const G1Affine& a) const {
  return on_curve(f1(), a, b_);
}

bool GroupCtx::g2_on_curve(const G2Affine& a) const {
  return on_curve(f2(), a, twist_b_);
}

bool GroupCtx::g2_in_subgroup(const G2Affine& a) const {
  if (a.inf) return true;
  if (!g2_on_curve(a)) return false;
  return jac_is_infinity(f2(), g2_mul(a, r_));
}

G1Jac GroupCtx::g1_mul(const G1Affine& a, const mpz_t k) const {
  return scalar_mul(f1(), jac_from_affine(f1(), a), k);
}

G2Jac GroupCtx::g2_mul(const G2Affine& a, const mpz_t k) const {
  return scalar_mul(f2(), jac_from_affine(f2(), a), k);
}

namespace {

// Enough hash words for one coordinate plus one word of slack against
// modular bias.
void field_element_from_hash(mpz_t out, const FpCtx& fp, uint64_t domain,
                             const char* tag, uint64_t ctr,
                             std::span<const uint8_t> msg) {
  const int words = fp.limbs() + 1;
  std::vector<uint64_t> buf(static_cast<size_t>(words));
  for (int j = 0; j < words; ++j)
    buf[size_t(j)] =
        hash_bytes(derive_seed(domain, tag, ctr * 64 + uint64_t(j)), msg);
  mpz_import(out, buf.size(), -1, 8, 0, 0, buf.data());
  mpz_fdiv_r(out, out, fp.modulus());
}

}  // namespace

G1Affine GroupCtx::hash_to_g1(uint64_t domain, std::span<const uint8_t> msg) const {
  Z x;
  for (uint64_t ctr = 0;; ++ctr) {
    field_element_from_hash(x.z, *fp_, domain, "curve-point", ctr, msg);
    const Fp xf = fp_->from_mpz(x.z);
    const Fp rhs = fp_->add(fp_->mul(fp_->sqr(xf), xf), b_);
    Fp y;
    if (!fp_->sqrt(y, rhs)) continue;
    const bool want_odd =
        (hash_bytes(derive_seed(domain, "curve-sign", ctr), msg) & 1) != 0;
    if (fp_->parity(y) != want_odd) y = fp_->neg(y);
    return {xf, y, false};
  }
}

G2Affine GroupCtx::hash_to_g2(uint64_t domain, std::span<const uint8_t> msg) const {
  Z xa, xb;
  const G2Field f = f2();
  for (uint64_t ctr = 0;; ++ctr) {
    field_element_from_hash(xa.z, *fp_, domain, "twist-point-re", ctr, msg);
    field_element_from_hash(xb.z, *fp_, domain, "twist-point-im", ctr, msg);
    const Fp2 x = tower_->f2_from_mpz(xa.z, xb.z);
    const Fp2 rhs = tower_->add2(tower_->mul2(tower_->sqr2(x), x), twist_b_);
    Fp2 y;
    if (!tower_->sqrt2(y, rhs)) continue;
    const bool want_odd =
        (hash_bytes(derive_seed(domain, "twist-sign", ctr), msg) & 1) != 0;
    if (fp_->parity(y.a) != want_odd) y = tower_->neg2(y);
    const G2Jac cleared = scalar_mul(f, jac_from_affine(f, G2Affine{x, y, false}), h2_);
    if (jac_is_infinity(f, cleared)) continue;
    return jac_to_affine(f, cleared);
  }
}

size_t GroupCtx::g1_encoded_size() const noexcept { return 1 + fp_->byte_size(); }

size_t GroupCtx::g2_encoded_size() const noexcept {
  return 1 + 2 * fp_->byte_size();
}

void GroupCtx::g1_to_bytes(Bytes& out, const G1Affine& a) const {
  const size_t at = out.size();
  out.resize(at + g1_encoded_size(), 0);
  if (a.inf) return;
  out[at] = uint8_t(2 + (fp_->parity(a.y) ? 1 : 0));
  fp_->to_bytes(out.data() + at + 1, a.x);
}

void GroupCtx::g2_to_bytes(Bytes& out, const G2Affine& a) const {
  const size_t at = out.size();
  const size_t w = fp_->byte_size();
  out.resize(at + g2_encoded_size(), 0);
  if (a.inf) return;
  // Parity of the first nonzero y coordinate picks the root.
  const bool bit =
      fp_->is_zero(a.y.a) ? fp_->parity(a.y.b) : fp_->parity(a.y.a);
  out[at] = uint8_t(2 + (bit ? 1 : 0));
  fp_->to_bytes(out.data() + at + 1, a.x.a);
  fp_->to_bytes(out.data() + at + 1 + w, a.x.b);
}

G1Affine GroupCtx::g1_from_bytes(std::span<const uint8_t> in) const {
  require(in.size() == g1_encoded_size(), Errc::decode_error,
          "point encoding has wrong length");
  if (in[0] == 0) {
    for (size_t i = 1; i < in.size(); ++i)
      require(in[i] == 0, Errc::decode_error, "nonzero identity encoding");
    return {fp_->zero(), fp_->zero(), true};
  }
  require(in[0] == 2 || in[0] == 3, Errc::decode_error, "bad point flag");
  const Fp x = fp_->from_bytes(in.data() + 1);
  const Fp rhs = fp_->add(fp_->mul(fp_->sqr(x), x), b_);
  Fp y;
  require(fp_->sqrt(y, rhs), Errc::decode_error, "x is not on the curve");
  if (fp_->parity(y) != (in[0] == 3)) y = fp_->neg(y);
  return {x, y, false};
}

G2Affine GroupCtx::g2_from_bytes(std::span<const uint8_t> in) const {
  require(in.size() == g2_encoded_size(), Errc::decode_error,
          "point encoding has wrong length");
  const size_t w = fp_->byte_size();
  if (in[0] == 0) {
    for (size_t i = 1; i < in.size(); ++i)
      require(in[i] == 0, Errc::decode_error, "nonzero identity encoding");
    return {tower_->f2_zero(), tower_->f2_zero(), true};
  }
  require(in[0] == 2 || in[0] == 3, Errc::decode_error, "bad point flag");
  const Fp2 x{fp_->from_bytes(in.data() + 1), fp_->from_bytes(in.data() + 1 + w)};
  const Fp2 rhs = tower_->add2(tower_->mul2(tower_->sqr2(x), x), twist_b_);
  Fp2 y;
  require(tower_->sqrt2(y, rhs), Errc::decode_error, "x is not on the twist");
  const bool bit =
      fp_->is_zero(y.a) ? fp_->parity(y.b) : fp_->parity(y.a);
  if (bit != (in[0] == 3)) y = tower_->neg2(y);
  const G2Affine a{x, y, false};
  require(g2_in_subgroup(a), Errc::decode_error,
          "twist point outside the prime-order subgroup");
  return a;
}

void GroupCtx::sample_scalar(mpz_t out, Rng& rng) const {
  const mp_bitcnt_t bits = mpz_sizeinbase(r_, 2);
  const size_t words = (bits + 63) / 64;
  std::vector<uint64_t> buf(words);
  do {
    for (auto& w : buf) w = rng.next_u64();
    mpz_import(out, buf.size(), -1, 8, 0, 0, buf.data());
    mpz_fdiv_r_2exp(out, out, bits);
  } while (mpz_cmp(out, r_) >= 0);
}

}  // namespace enccluster::bn
