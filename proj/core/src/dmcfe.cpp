// SPDX-License-Identifier: Apache-2.0
#include "enccluster/dmcfe.hpp"

#include <map>
#include <mutex>

#include "enccluster/errors.hpp"

namespace enccluster::dmcfe {

using bn::Fp;
using bn::Fp12;
using bn::G1Affine;
using bn::G1Jac;
using bn::G2Affine;
using bn::G2Field;
using bn::G2Jac;

namespace {

struct Z {
  mpz_t z;
  Z() { mpz_init(z); }
  ~Z() { mpz_clear(z); }
  Z(const Z&) = delete;
  Z& operator=(const Z&) = delete;
};

}  // namespace

std::shared_ptr<const GroupRuntime> GroupRuntime::acquire(unsigned bits) {
  static std::mutex mu;
  static std::map<unsigned, std::weak_ptr<const GroupRuntime>> cache;
  const unsigned snapped = bn::GroupCtx::snap_size(bits);
  std::lock_guard<std::mutex> lock(mu);
  if (auto hit = cache[snapped].lock()) return hit;
  auto made = std::make_shared<const GroupRuntime>(snapped);
  cache[snapped] = made;
  return made;
}

PublicParams setup(unsigned security_bits, unsigned client_count,
                   uint64_t seed, const Bounds& bounds) {
  require(client_count >= 2, Errc::invalid_argument,
          "need at least two clients");
  require(bounds.slot >= 1 && bounds.aggregate >= bounds.slot &&
              bounds.y_max >= 1,
          Errc::invalid_argument, "bad plaintext bounds");
  auto rt = GroupRuntime::acquire(security_bits);
  const uint64_t session = derive_seed(seed, "params-session");
  return PublicParams(std::move(rt), client_count, session, bounds);
}

std::array<G1Affine, 2> PublicParams::label_mask(
    std::span<const uint8_t> label) const {
  require(!label.empty(), Errc::invalid_argument, "empty label");
  return {group().hash_to_g1(derive_seed(session_, "label-mask", 0), label),
          group().hash_to_g1(derive_seed(session_, "label-mask", 1), label)};
}

std::array<G2Affine, 2> PublicParams::tag_mask(
    std::span<const uint8_t> tag) const {
  return {group().hash_to_g2(derive_seed(session_, "tag-mask", 0), tag),
          group().hash_to_g2(derive_seed(session_, "tag-mask", 1), tag)};
}

Bytes params_to_bytes(const PublicParams& pp) {
  ByteWriter w;
  w.u8(1);
  w.u32(pp.size_bits());
  w.u32(pp.client_count());
  w.u64(pp.session());
  w.i64(pp.bounds().slot);
  w.i64(pp.bounds().aggregate);
  w.u64(pp.bounds().y_max);
  return w.take();
}

PublicParams params_from_bytes(std::span<const uint8_t> in) {
  ByteReader r(in);
  require(r.u8() == 1, Errc::decode_error, "parameter version");
  const uint32_t bits = r.u32();
  const uint32_t n = r.u32();
  const uint64_t session = r.u64();
  Bounds b;
  b.slot = r.i64();
  b.aggregate = r.i64();
  b.y_max = r.u64();
  r.expect_done("parameters");
  require(n >= 2, Errc::decode_error, "client count");
  require(b.slot >= 1 && b.aggregate >= b.slot && b.y_max >= 1,
          Errc::decode_error, "plaintext bounds");
  auto rt = GroupRuntime::acquire(bits);
  require(rt->group.size_bits() == bits, Errc::decode_error,
          "unsupported group width");
  return PublicParams(std::move(rt), n, session, b);
}

SetupTranscript::SetupTranscript(const PublicParams& pp) {
  const unsigned n = pp.client_count();
  const auto& fr = pp.group().fr();
  keys_.resize(n);
  issued_.assign(n, false);

  Z tmp;
  for (unsigned i = 0; i < n; ++i) {
    keys_[i].client_id = i;
    Rng rs(derive_seed(pp.session(), "enc-key", i));
    for (int k = 0; k < 2; ++k) {
      pp.group().sample_scalar(tmp.z, rs);
      keys_[i].s[k] = fr.from_mpz(tmp.z);
    }
  }

  // All but the last share matrix are uniform; the last one closes the
  // sum to zero.
  std::array<Fp, 4> sum{fr.zero(), fr.zero(), fr.zero(), fr.zero()};
  for (unsigned i = 0; i + 1 < n; ++i) {
    Rng rt(derive_seed(pp.session(), "share-key", i));
    for (int k = 0; k < 4; ++k) {
      pp.group().sample_scalar(tmp.z, rt);
      keys_[i].share[k] = fr.from_mpz(tmp.z);
      sum[k] = fr.add(sum[k], keys_[i].share[k]);
    }
  }
  for (int k = 0; k < 4; ++k) keys_[n - 1].share[k] = fr.neg(sum[k]);
}

ClientKeyPair keygen(const PublicParams& pp, uint32_t client_id,
                     SetupTranscript& transcript) {
  require(client_id < pp.client_count(), Errc::invalid_argument,
          "client id out of range");
  require(transcript.keys_.size() == pp.client_count(),
          Errc::invalid_argument, "transcript built for different parameters");
  require(!transcript.issued_[client_id], Errc::invalid_argument,
          "key material already issued for this client");
  transcript.issued_[client_id] = true;
  ++transcript.issued_total_;
  return transcript.keys_[client_id];
}

Bytes FunctionTag::canonical() const {
  ByteWriter w;
  w.u64(scope);
  w.u32(uint32_t(y.size()));
  for (uint64_t v : y) w.u64(v);
  return w.take();
}

PartialDecKey derive_partial_key(const PublicParams& pp,
                                 const ClientKeyPair& kp,
                                 std::span<const uint64_t> y, uint64_t scope) {
  const unsigned n = pp.client_count();
  require(y.size() == n, Errc::invalid_argument,
          "weight vector length must equal the client count");
  require(kp.client_id < n, Errc::invalid_argument, "client id out of range");
  for (uint64_t v : y)
    require(v <= pp.bounds().y_max, Errc::plaintext_bound_exceeded,
            "weight entry above policy bound");

  PartialDecKey out;
  out.client_id = kp.client_id;
  out.tag.scope = scope;
  out.tag.y.assign(y.begin(), y.end());

  const auto V = pp.tag_mask(out.tag.canonical());
  const auto& g = pp.group();
  const auto& fr = g.fr();
  const Fp yi = fr.from_u64(y[kp.client_id]);

  Z k;
  const auto mul_g2 = [&](const G2Affine& base, const Fp& scalar) {
    fr.to_mpz(k.z, scalar);
    return g.g2_mul(base, k.z);
  };
  const G2Field f2 = g.f2();
  for (int row = 0; row < 2; ++row) {
    G2Jac acc = mul_g2(g.g2(), fr.mul(yi, kp.s[row]));
    acc = jac_add(f2, acc, mul_g2(V[0], kp.share[2 * row + 0]));
    acc = jac_add(f2, acc, mul_g2(V[1], kp.share[2 * row + 1]));
    out.d[row] = jac_to_affine(f2, acc);
  }
  return out;
}

FunctionalDecKey combine_keys(const PublicParams& pp,
                              std::span<const PartialDecKey> shares) {
  const unsigned n = pp.client_count();
  require(shares.size() >= n, Errc::insufficient_shares,
          "every client must contribute a key share");
  require(shares.size() == n, Errc::invalid_argument,
          "more shares than clients");

  const Bytes tag_bytes = shares[0].tag.canonical();
  std::vector<bool> seen(n, false);
  for (const auto& sh : shares) {
    require(sh.tag.canonical() == tag_bytes, Errc::tag_mismatch,
            "shares derived for different functions");
    require(sh.client_id < n, Errc::invalid_argument, "client id out of range");
    require(!seen[sh.client_id], Errc::invalid_argument,
            "duplicate share for one client");
    seen[sh.client_id] = true;
  }
  require(shares[0].tag.y.size() == n, Errc::invalid_argument,
          "weight vector length must equal the client count");

  const auto f2 = pp.group().f2();
  FunctionalDecKey out;
  out.tag = shares[0].tag;
  out.contributing = n;
  for (int row = 0; row < 2; ++row) {
    G2Jac acc = jac_infinity(f2);
    for (const auto& sh : shares)
      acc = jac_add(f2, acc, jac_from_affine(f2, sh.d[row]));
    out.d[row] = jac_to_affine(f2, acc);
  }
  return out;
}

namespace {

G1Jac g1_mul_i64(const bn::GroupCtx& g, const G1Affine& base, int64_t k) {
  Z z;
  mpz_set_si(z.z, k < 0 ? -k : k);
  G1Jac out = g.g1_mul(base, z.z);
  if (k < 0) out = jac_neg(g.f1(), out);
  return out;
}

}  // namespace

Ciphertext encrypt(const PublicParams& pp, const ClientKeyPair& kp,
                   std::span<const int64_t> plaintexts,
                   std::span<const uint8_t> label) {
  require(!plaintexts.empty(), Errc::invalid_argument, "no plaintext slots");
  require(!label.empty(), Errc::invalid_argument, "empty label");
  for (int64_t x : plaintexts)
    require(x >= -pp.bounds().slot && x <= pp.bounds().slot,
            Errc::plaintext_bound_exceeded, "plaintext outside slot bound");

  const auto& g = pp.group();
  const auto& fr = g.fr();
  const auto f1 = g.f1();
  const auto U = pp.label_mask(label);

  Z k;
  fr.to_mpz(k.z, kp.s[0]);
  G1Jac mask = g.g1_mul(U[0], k.z);
  fr.to_mpz(k.z, kp.s[1]);
  mask = jac_add(f1, mask, g.g1_mul(U[1], k.z));

  Ciphertext ct;
  ct.client_id = kp.client_id;
  ct.label.assign(label.begin(), label.end());
  ct.slots.reserve(plaintexts.size());
  for (int64_t x : plaintexts) {
    const G1Jac slot = jac_add(f1, mask, g1_mul_i64(g, g.g1(), x));
    ct.slots.push_back(jac_to_affine(f1, slot));
  }
  return ct;
}

Bytes partial_key_to_bytes(const PublicParams& pp, const PartialDecKey& k) {
  ByteWriter w;
  w.u32(k.client_id);
  w.u64(k.tag.scope);
  w.u32(uint32_t(k.tag.y.size()));
  for (uint64_t v : k.tag.y) w.u64(v);
  Bytes points;
  pp.group().g2_to_bytes(points, k.d[0]);
  pp.group().g2_to_bytes(points, k.d[1]);
  w.bytes(points);
  return w.take();
}

PartialDecKey partial_key_from_bytes(const PublicParams& pp,
                                     std::span<const uint8_t> in) {
  ByteReader r(in);
  PartialDecKey out;
  out.client_id = r.u32();
  out.tag.scope = r.u64();
  const uint32_t len = r.u32();
  require(len == pp.client_count(), Errc::decode_error,
          "weight vector length");
  out.tag.y.resize(len);
  for (auto& v : out.tag.y) v = r.u64();
  const size_t psz = pp.group().g2_encoded_size();
  out.d[0] = pp.group().g2_from_bytes(r.bytes(psz));
  out.d[1] = pp.group().g2_from_bytes(r.bytes(psz));
  r.expect_done("key share");
  return out;
}

Bytes ciphertext_to_bytes(const PublicParams& pp, const Ciphertext& ct) {
  ByteWriter w;
  w.u32(ct.client_id);
  w.blob(ct.label);
  w.u32(ct.slot_count());
  Bytes points;
  points.reserve(size_t(ct.slot_count()) * pp.group().g1_encoded_size());
  for (const auto& s : ct.slots) pp.group().g1_to_bytes(points, s);
  w.bytes(points);
  return w.take();
}

Ciphertext ciphertext_from_bytes(const PublicParams& pp,
                                 std::span<const uint8_t> in) {
  ByteReader r(in);
  Ciphertext out;
  out.client_id = r.u32();
  const auto label = r.blob();
  out.label.assign(label.begin(), label.end());
  require(!out.label.empty(), Errc::decode_error, "empty label");
  const uint32_t slots = r.u32();
  require(slots >= 1, Errc::decode_error, "slot count");
  const size_t psz = pp.group().g1_encoded_size();
  out.slots.reserve(slots);
  for (uint32_t s = 0; s < slots; ++s)
    out.slots.push_back(pp.group().g1_from_bytes(r.bytes(psz)));
  r.expect_done("ciphertext");
  return out;
}

DlogTable::DlogTable(const bn::Pairing& e, uint32_t baby_steps)
    : e_(&e), m_(baby_steps) {
  require(baby_steps >= 1, Errc::invalid_argument, "empty table");
  const auto& tw = e.group().tower();
  index_.reserve(size_t(m_) * 2);
  confirm_.resize(m_);
  Fp12 cur = tw.f12_one();
  for (uint32_t j = 0; j < m_; ++j) {
    index_.emplace(fingerprint(cur, 1), j);
    confirm_[j] = fingerprint(cur, 2);
    cur = tw.mul12(cur, e.gt());
  }
  giant_ = tw.conj12(cur);  // gt^m inverted in the cyclotomic subgroup
}

uint64_t DlogTable::fingerprint(const Fp12& x, uint64_t which) const {
  const Bytes enc = e_->gt_bytes(x);
  return hash_bytes(derive_seed(0x746c62676f6c6421ULL, "exp-fp", which), enc);
}

std::optional<int64_t> DlogTable::solve(const Fp12& target,
                                        int64_t bound) const {
  require(bound >= 0, Errc::invalid_argument, "negative bound");
  const auto& tw = e_->group().tower();
  // Walk both signs outward so small magnitudes return first.
  Fp12 walk[2] = {target, tw.conj12(target)};
  for (int64_t base = 0;; base += m_) {
    for (int sign = 0; sign < 2; ++sign) {
      const auto it = index_.find(fingerprint(walk[sign], 1));
      if (it == index_.end()) continue;
      if (confirm_[it->second] != fingerprint(walk[sign], 2)) continue;
      const int64_t mag = base + int64_t(it->second);
      if (mag > bound) return std::nullopt;
      return sign == 0 ? mag : -mag;
    }
    if (base + int64_t(m_) > bound) return std::nullopt;
    walk[0] = tw.mul12(walk[0], giant_);
    walk[1] = tw.mul12(walk[1], giant_);
  }
}

DecryptSession::DecryptSession(const PublicParams& pp,
                               const FunctionalDecKey& dk,
                               std::span<const Ciphertext> cts)
    : pp_(&pp) {
  const unsigned n = pp.client_count();
  require(dk.contributing == n, Errc::insufficient_shares,
          "functional key is incomplete");
  require(dk.tag.y.size() == n, Errc::invalid_argument,
          "weight vector length must equal the client count");
  require(!cts.empty(), Errc::insufficient_ciphertexts, "no ciphertexts");

  // Metadata checks run before any group operation on the payloads.
  const Bytes& label = cts[0].label;
  require(!label.empty(), Errc::invalid_argument, "empty label");
  slot_count_ = cts[0].slot_count();
  require(slot_count_ >= 1, Errc::invalid_argument, "no slots");
  std::vector<const Ciphertext*> by_id(n, nullptr);
  for (const auto& ct : cts) {
    require(ct.label == label, Errc::label_mismatch,
            "ciphertexts from different rounds");
    require(ct.client_id < n, Errc::invalid_argument,
            "client id out of range");
    require(ct.slot_count() == slot_count_, Errc::invalid_argument,
            "slot count disagreement");
    require(by_id[ct.client_id] == nullptr, Errc::invalid_argument,
            "duplicate ciphertext for one client");
    by_id[ct.client_id] = &ct;
  }
  for (unsigned i = 0; i < n; ++i) {
    if (dk.tag.y[i] == 0) continue;
    require(by_id[i] != nullptr, Errc::insufficient_ciphertexts,
            "missing ciphertext for a weighted client");
    active_.push_back(i);
  }
  require(!active_.empty(), Errc::invalid_argument, "all-zero weight vector");

  const auto& g = pp.group();
  const auto f1 = g.f1();
  const auto U = pp.label_mask(label);
  const std::array<G1Affine, 2> neg_u{
      G1Affine{U[0].x, g.fp().neg(U[0].y), false},
      G1Affine{U[1].x, g.fp().neg(U[1].y), false}};
  correction_ = pp.pairing().pair_product(neg_u, dk.d);

  scaled_.resize(active_.size());
  Z y;
  for (size_t k = 0; k < active_.size(); ++k) {
    const Ciphertext& ct = *by_id[active_[k]];
    const uint64_t yi = dk.tag.y[active_[k]];
    scaled_[k].reserve(slot_count_);
    for (uint32_t s = 0; s < slot_count_; ++s) {
      if (yi == 1) {
        scaled_[k].push_back(jac_from_affine(f1, ct.slots[s]));
      } else {
        mpz_set_ui(y.z, yi);
        scaled_[k].push_back(g.g1_mul(ct.slots[s], y.z));
      }
    }
  }
}

int64_t DecryptSession::read_exponent(const G1Jac& acc,
                                      const DlogTable& table) const {
  const auto& g = pp_->group();
  const auto& tw = g.tower();
  const G1Affine point = jac_to_affine(g.f1(), acc);
  const Fp12 target = tw.mul12(pp_->pairing().pair(point, g.g2()), correction_);
  const auto x = table.solve(target, pp_->bounds().aggregate);
  require(x.has_value(), Errc::dlog_out_of_range,
          "aggregate outside the recoverable range");
  return *x;
}

int64_t DecryptSession::value_at(uint32_t slot, const DlogTable& table) const {
  require(slot < slot_count_, Errc::invalid_argument, "slot out of range");
  const auto f1 = pp_->group().f1();
  G1Jac acc = jac_infinity(f1);
  for (size_t k = 0; k < scaled_.size(); ++k)
    acc = jac_add(f1, acc, scaled_[k][slot]);
  return read_exponent(acc, table);
}

int64_t DecryptSession::value_mixed(std::span<const uint32_t> slot_for,
                                    const DlogTable& table) const {
  require(slot_for.size() == active_.size(), Errc::invalid_argument,
          "one slot choice per active client");
  const auto f1 = pp_->group().f1();
  G1Jac acc = jac_infinity(f1);
  for (size_t k = 0; k < scaled_.size(); ++k) {
    require(slot_for[k] < slot_count_, Errc::invalid_argument,
            "slot out of range");
    acc = jac_add(f1, acc, scaled_[k][slot_for[k]]);
  }
  return read_exponent(acc, table);
}

int64_t decrypt(const PublicParams& pp, const FunctionalDecKey& dk,
                std::span<const Ciphertext> cts, uint32_t slot,
                const DlogTable& table) {
  return DecryptSession(pp, dk, cts).value_at(slot, table);
}

}  // namespace enccluster::dmcfe
