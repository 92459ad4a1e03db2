// SPDX-License-Identifier: Apache-2.0
#include "enccluster/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "enccluster/errors.hpp"
#include "enccluster/huffman.hpp"
#include "enccluster/rng.hpp"

using namespace enccluster;
using namespace enccluster::protocol;

namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::invalid_argument;
}

std::vector<dmcfe::ClientKeyPair> issue_all(const dmcfe::PublicParams& pp) {
  dmcfe::SetupTranscript t(pp);
  std::vector<dmcfe::ClientKeyPair> out;
  for (uint32_t i = 0; i < pp.client_count(); ++i)
    out.push_back(dmcfe::keygen(pp, i, t));
  return out;
}

struct Cohort {
  dmcfe::PublicParams pp;
  std::vector<dmcfe::ClientKeyPair> keys;
  dmcfe::DlogTable table;

  Cohort(unsigned n, uint64_t seed)
      : pp(dmcfe::setup(128, n, seed)),
        keys(issue_all(pp)),
        table(pp.pairing(), 1u << 12) {}
};

// cluster -> weighted average of reconstructed weights, no encryption.
std::vector<double> plaintext_pipeline(std::span<const ClientUpdate> updates,
                                       uint64_t total) {
  const uint64_t d = updates[0].message.dim;
  std::vector<double> out(d, 0.0);
  for (const auto& u : updates) {
    const auto& m = u.model;
    for (uint64_t j = 0; j < d; ++j)
      out[j] += double(u.message.sample_weight) * m.centroids[m.assignments[j]];
  }
  for (auto& v : out) v /= double(total);
  return out;
}

}  // namespace

TEST_CASE("fixed point codec rounds, clamps and counts") {
  FixedPointCodec codec(8, 1 << 20);
  CHECK(codec.scale() == 256);
  CHECK(codec.quantize(0.5, 3) == 384);
  CHECK(codec.quantize(-0.5, 3) == -384);
  CHECK(codec.quantize(0.0, 7) == 0);
  CHECK(codec.dequantize(384, 3) == doctest::Approx(0.5));

  uint64_t sat = 0;
  FixedPointCodec tight(8, 100);
  CHECK(tight.quantize(10.0, 1, &sat) == 100);
  CHECK(tight.quantize(-10.0, 1, &sat) == -100);
  CHECK(tight.quantize(0.1, 1, &sat) == 26);
  CHECK(sat == 2);

  CHECK(code_of([&] { codec.quantize(1.0, 0); }) == Errc::invalid_argument);
  CHECK(code_of([&] {
          codec.quantize(std::numeric_limits<double>::infinity(), 1);
        }) == Errc::invalid_argument);
  CHECK(code_of([&] { FixedPointCodec(64, 10); }) == Errc::invalid_argument);
}

TEST_CASE("huffman codec round trips") {
  SUBCASE("skewed and uniform sequences") {
    Rng rng(11);
    std::vector<uint32_t> skewed(4000, 0);
    for (auto& s : skewed)
      if (rng.below(100) < 5) s = 1 + uint32_t(rng.below(15));
    std::vector<uint32_t> uniform(4000);
    for (auto& s : uniform) s = uint32_t(rng.below(16));

    for (const auto& seq : {skewed, uniform}) {
      const Bytes enc = huffman::encode(seq, 16);
      CHECK(enc.size() == huffman::encoded_size(seq, 16));
      CHECK(huffman::decode(enc) == seq);
    }
    // A skewed sequence compresses past the flat 4-bit packing.
    CHECK(huffman::encoded_size(skewed, 16) <
          huffman::encoded_size(uniform, 16));
    CHECK(huffman::encoded_size(uniform, 16) < 4000);  // < 8 bits/symbol
  }

  SUBCASE("degenerate alphabets") {
    const std::vector<uint32_t> one(100, 3);
    CHECK(huffman::decode(huffman::encode(one, 8)) == one);
    const std::vector<uint32_t> single = {0};
    CHECK(huffman::decode(huffman::encode(single, 1)) == single);
  }

  SUBCASE("malformed input") {
    const std::vector<uint32_t> seq = {0, 1, 2, 1, 0, 2, 2};
    Bytes enc = huffman::encode(seq, 3);
    Bytes cut(enc.begin(), enc.end() - 1);
    CHECK(code_of([&] { huffman::decode(cut); }) == Errc::decode_error);
    Bytes bad = enc;
    bad[0] ^= 0xff;
    CHECK(code_of([&] { huffman::decode(bad); }) == Errc::decode_error);
    CHECK(code_of([&] { huffman::encode(std::vector<uint32_t>{3}, 3); }) ==
          Errc::invalid_argument);
  }
}

TEST_CASE("identical clients aggregate to their own codebook") {
  Cohort c(2, 51);
  const std::vector<double> w = {0, 0, 0, 0, 1, 1, 1, 1};
  FixedPointCodec codec(8, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 2;

  std::vector<RoundMessage> msgs;
  std::vector<ClientUpdate> ups;
  for (uint32_t i = 0; i < 2; ++i) {
    ups.push_back(
        client_prepare_update(c.pp, c.keys[i], w, 1, 4, codec, opt, 900 + i));
    msgs.push_back(ups.back().message);
  }
  // Centroids are canonical ascending, so the quantized slots are 0 and 256.
  CHECK(ups[0].model.centroids[0] == doctest::Approx(0.0));
  CHECK(ups[0].model.centroids[1] == doctest::Approx(1.0));
  CHECK(ups[0].saturated == 0);

  const auto agg = secure_aggregate(c.pp, msgs, 2, codec, c.table);
  CHECK(agg.substitute_failures == 0);
  const auto expect = clustering::reconstruct_weights(ups[0].model);
  for (size_t j = 0; j < w.size(); ++j)
    CHECK(std::abs(agg.weights[j] - expect[j]) <= 1.0 / 256);
}

TEST_CASE("weighted average matches the two-client oracle") {
  Cohort c(2, 62);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 2;
  const std::vector<std::vector<double>> w = {{0.5, 0.5, -0.25, -0.25},
                                              {1.0, 1.0, 0.125, 0.125}};
  const uint64_t counts[2] = {1, 3};

  std::vector<RoundMessage> msgs;
  std::vector<ClientUpdate> ups;
  for (uint32_t i = 0; i < 2; ++i) {
    ups.push_back(client_prepare_update(c.pp, c.keys[i], w[i], counts[i], 1,
                                        codec, opt, 70 + i));
    msgs.push_back(ups.back().message);
  }
  const auto agg = secure_aggregate(c.pp, msgs, 4, codec, c.table);
  const auto oracle = plaintext_pipeline(ups, 4);
  for (size_t j = 0; j < 4; ++j)
    CHECK(std::abs(agg.weights[j] - oracle[j]) <= 2.0 / (1 << 16));
}

TEST_CASE("secure aggregation equals the clustered plaintext pipeline") {
  const unsigned n = 3;
  const uint64_t d = 64;
  Cohort c(n, 73);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 8;
  opt.filter_bits = 32;

  for (uint64_t seed : {1u, 2u}) {
    Rng rng(seed);
    std::vector<RoundMessage> msgs;
    std::vector<ClientUpdate> ups;
    uint64_t total = 0;
    for (uint32_t i = 0; i < n; ++i) {
      std::vector<double> w(d);
      for (auto& v : w) v = rng.normal(0.0, 0.5);
      const uint64_t count = 1 + rng.below(4);
      total += count;
      ups.push_back(client_prepare_update(c.pp, c.keys[i], w, count, seed,
                                          codec, opt, 1000 * seed + i));
      msgs.push_back(ups.back().message);
    }
    const auto agg = secure_aggregate(c.pp, msgs, total, codec, c.table);
    CHECK(agg.substitute_failures == 0);
    const auto oracle = plaintext_pipeline(ups, total);
    double worst = 0;
    for (uint64_t j = 0; j < d; ++j)
      worst = std::max(worst, std::abs(agg.weights[j] - oracle[j]));
    CHECK(worst <= 2.0 * n / (1 << 16));

    // The reconstructed mappings match the clients' own assignments.
    for (uint32_t i = 0; i < n; ++i) {
      const auto& got = agg.mappings[i];
      const auto& want = ups[i].model.assignments;
      CHECK(std::equal(got.begin(), got.end(), want.begin(), want.end()));
    }
  }
}

TEST_CASE("a stale message fails as a label mismatch") {
  Cohort c(2, 84);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 2;
  const std::vector<double> w = {0.25, 0.5, 0.75, 1.0};

  auto fresh0 =
      client_prepare_update(c.pp, c.keys[0], w, 1, 9, codec, opt, 1).message;
  auto fresh1 =
      client_prepare_update(c.pp, c.keys[1], w, 1, 9, codec, opt, 2).message;
  auto stale1 =
      client_prepare_update(c.pp, c.keys[1], w, 1, 8, codec, opt, 2).message;

  std::vector<RoundMessage> replayed = {fresh0, stale1};
  CHECK(code_of([&] {
          secure_aggregate(c.pp, replayed, 2, codec, c.table);
        }) == Errc::label_mismatch);

  // A forged round field on a stale ciphertext is caught the same way.
  stale1.round = 9;
  std::vector<RoundMessage> forged = {fresh0, stale1};
  CHECK(code_of([&] { secure_aggregate(c.pp, forged, 2, codec, c.table); }) ==
        Errc::label_mismatch);

  std::vector<RoundMessage> good = {fresh0, fresh1};
  CHECK(secure_aggregate(c.pp, good, 2, codec, c.table).weights.size() == 4);
}

TEST_CASE("cohort and tag policing") {
  Cohort c(3, 95);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 2;
  const std::vector<double> w = {0.1, 0.2, 0.3, 0.4};

  std::vector<RoundMessage> msgs;
  for (uint32_t i = 0; i < 3; ++i)
    msgs.push_back(
        client_prepare_update(c.pp, c.keys[i], w, 2, 5, codec, opt, i).message);

  std::vector<RoundMessage> missing = {msgs[0], msgs[2]};
  CHECK(code_of([&] { secure_aggregate(c.pp, missing, 6, codec, c.table); }) ==
        Errc::insufficient_ciphertexts);

  std::vector<RoundMessage> doubled = {msgs[0], msgs[1], msgs[2], msgs[2]};
  CHECK(code_of([&] { secure_aggregate(c.pp, doubled, 8, codec, c.table); }) ==
        Errc::invalid_argument);

  auto wrong_tag = msgs;
  wrong_tag[1].key_share.tag.scope = 6;
  CHECK(code_of([&] {
          secure_aggregate(c.pp, wrong_tag, 6, codec, c.table);
        }) == Errc::tag_mismatch);

  CHECK(code_of([&] { secure_aggregate(c.pp, msgs, 7, codec, c.table); }) ==
        Errc::invalid_argument);
}

TEST_CASE("mapping reconstruction is seed-gated") {
  const uint64_t d = 2000;
  const uint32_t kappa = 16;
  Rng rng(7);
  std::vector<uint32_t> truth(d);
  std::vector<fuse::FilterKey> keys(d);
  for (uint64_t i = 0; i < d; ++i) {
    truth[i] = uint32_t(rng.below(kappa));
    keys[i] = {i, truth[i]};
  }
  const uint64_t seed = 424242;
  const auto f = fuse::FuseFilter::build(keys, 32, 4, seed);

  const auto direct = mapping_from_filter(f, d, kappa);
  CHECK(std::equal(direct.begin(), direct.end(), truth.begin(), truth.end()));
  const auto same = mapping_from_filter_seeded(f, d, kappa, seed);
  CHECK(same == direct);

  const auto wrong = mapping_from_filter_seeded(f, d, kappa, seed + 1);
  uint64_t mismatched = 0;
  for (uint64_t i = 0; i < d; ++i)
    if (wrong[i] != truth[i]) ++mismatched;
  CHECK(double(mismatched) / double(d) > 0.9);
}

TEST_CASE("unknown mapping entries fall back to slot zero and are counted") {
  Cohort c(2, 31);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 4;
  const std::vector<double> w = {-1.0, -0.5, 0.5, 1.0, -1.0, 0.5};

  std::vector<RoundMessage> msgs;
  for (uint32_t i = 0; i < 2; ++i)
    msgs.push_back(
        client_prepare_update(c.pp, c.keys[i], w, 1, 3, codec, opt, i).message);

  // Understate one client's cluster count: positions assigned to the
  // now-missing top clusters stop matching anything.
  auto f = fuse::FuseFilter::deserialize(msgs[1].mapping_payload);
  const auto full = mapping_from_filter(f, w.size(), 4);
  uint64_t beyond = 0;
  for (uint32_t v : full)
    if (v >= 2) ++beyond;
  REQUIRE(beyond > 0);

  msgs[1].kappa = 2;
  msgs[0].kappa = 2;
  msgs[0].ciphertext.slots.resize(2);
  msgs[1].ciphertext.slots.resize(2);
  const auto agg = secure_aggregate(c.pp, msgs, 2, codec, c.table);
  CHECK(agg.substitute_failures > 0);
  CHECK(agg.weights.size() == w.size());
}

TEST_CASE("round message serialization") {
  Cohort c(2, 46);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 3;
  const std::vector<double> w = {0.5, -0.5, 0.25, 0.75, -0.25};

  SUBCASE("filter variant") {
    const auto m =
        client_prepare_update(c.pp, c.keys[0], w, 2, 12, codec, opt, 5).message;
    const Bytes enc = message_to_bytes(c.pp, m);
    const auto back = message_from_bytes(c.pp, enc);
    CHECK(message_to_bytes(c.pp, back) == enc);
    CHECK(back.round == 12);
    CHECK(back.kappa == 3);
    CHECK(back.dim == w.size());
    CHECK(back.sample_weight == 2);
    CHECK(!back.huffman_mapping);

    Bytes cut(enc.begin(), enc.end() - 3);
    CHECK(code_of([&] { message_from_bytes(c.pp, cut); }) ==
          Errc::decode_error);
    Bytes tampered = enc;
    tampered[22] ^= 1;  // dim field no longer matches the filter
    CHECK(code_of([&] { message_from_bytes(c.pp, tampered); }) ==
          Errc::decode_error);
  }

  SUBCASE("huffman variant") {
    opt.huffman_mapping = true;
    auto up = client_prepare_update(c.pp, c.keys[1], w, 1, 12, codec, opt, 6);
    const Bytes enc = message_to_bytes(c.pp, up.message);
    const auto back = message_from_bytes(c.pp, enc);
    CHECK(back.huffman_mapping);
    CHECK(message_to_bytes(c.pp, back) == enc);
    const auto mapping = reconstruct_mapping(back);
    CHECK(std::equal(mapping.begin(), mapping.end(),
                     up.model.assignments.begin(),
                     up.model.assignments.end()));
  }
}

TEST_CASE("ledger accounting is exact and d-independent for ciphertexts") {
  Cohort c(2, 57);
  FixedPointCodec codec(16, 1 << 20);
  UpdateOptions opt;
  opt.kappa = 8;
  opt.filter_bits = 8;

  Rng rng(3);
  const auto make_round = [&](uint64_t d, uint32_t kappa) {
    UpdateOptions o = opt;
    o.kappa = kappa;
    std::vector<RoundMessage> msgs;
    for (uint32_t i = 0; i < 2; ++i) {
      std::vector<double> w(d);
      for (auto& v : w) v = rng.normal(0.0, 0.25);
      msgs.push_back(
          client_prepare_update(c.pp, c.keys[i], w, 1, 2, codec, o, 80 + i)
              .message);
    }
    return msgs;
  };

  const auto small = make_round(200, 8);
  const auto large = make_round(1000, 8);
  const auto ledger_small = account_round(c.pp, small, 200);
  const auto ledger_large = account_round(c.pp, large, 1000);

  // Exactness: row totals are the real serialized lengths.
  uint64_t sum = 0;
  for (size_t k = 0; k < small.size(); ++k) {
    CHECK(ledger_small.rows[k].total_bytes ==
          message_to_bytes(c.pp, small[k]).size());
    sum += ledger_small.rows[k].total_bytes;
  }
  CHECK(ledger_small.total_bytes == sum);

  // Ciphertext bytes depend on (kappa, group width) only, never on d.
  CHECK(ledger_small.rows[0].ct_bytes == ledger_large.rows[0].ct_bytes);
  CHECK(ledger_small.ratio > ledger_large.ratio);
  CHECK(ledger_large.ratio_no_key < ledger_large.ratio);

  // Doubling kappa at fixed d barely moves the ratio once the filter
  // dominates the payload.
  const auto base = make_round(10000, 8);
  const auto wide = make_round(10000, 16);
  const auto ledger_base = account_round(c.pp, base, 10000);
  const auto ledger_wide = account_round(c.pp, wide, 10000);
  CHECK(std::abs(ledger_wide.ratio - ledger_base.ratio) < 0.01);

  const auto csv = ledger_large.to_csv();
  CHECK(csv.find("round,client,ct_bytes,filter_bytes,key_bytes,bpp,ratio,"
                 "ratio_no_key\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
