// SPDX-License-Identifier: Apache-2.0
#include "enccluster/protocol.hpp"

#include <cmath>
#include <cstdio>

#include "enccluster/errors.hpp"
#include "enccluster/huffman.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::protocol {

namespace {

constexpr uint32_t kMessageMagic = 0x4d524345;  // "ECRM"

}  // namespace

FixedPointCodec::FixedPointCodec(uint32_t fraction_bits, int64_t slot_bound)
    : q_(fraction_bits), bound_(slot_bound) {
  require(fraction_bits <= 40, Errc::invalid_argument,
          "fraction bits out of range");
  require(slot_bound >= 1, Errc::invalid_argument, "slot bound must be >= 1");
}

int64_t FixedPointCodec::quantize(double value, uint64_t weight,
                                  uint64_t* saturated) const {
  require(std::isfinite(value), Errc::invalid_argument, "non-finite value");
  require(weight >= 1, Errc::invalid_argument, "zero weight");
  const double t = value * double(weight) * double(scale());
  if (t >= double(bound_)) {
    if (saturated) ++*saturated;
    return bound_;
  }
  if (t <= -double(bound_)) {
    if (saturated) ++*saturated;
    return -bound_;
  }
  return std::llround(t);
}

std::vector<int64_t> FixedPointCodec::quantize_many(
    std::span<const double> values, uint64_t weight,
    uint64_t* saturated) const {
  std::vector<int64_t> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(quantize(v, weight, saturated));
  return out;
}

double FixedPointCodec::dequantize(int64_t aggregate,
                                   uint64_t total_weight) const {
  require(total_weight >= 1, Errc::invalid_argument, "zero total weight");
  return double(aggregate) / (double(scale()) * double(total_weight));
}

Bytes round_label(uint64_t round) {
  ByteWriter w;
  w.u64(round);
  return w.take();
}

ClientUpdate client_prepare_update(const dmcfe::PublicParams& pp,
                                   const dmcfe::ClientKeyPair& kp,
                                   std::span<const double> weights,
                                   uint64_t sample_weight, uint64_t round,
                                   const FixedPointCodec& codec,
                                   const UpdateOptions& opt,
                                   uint64_t client_seed) {
  require(sample_weight >= 1, Errc::invalid_argument, "zero sample weight");

  ClientUpdate out;
  out.model = clustering::cluster_weights(
      weights, opt.kappa, derive_seed(client_seed, "kmeans", round),
      opt.kmeans_iterations);

  const auto quantized =
      codec.quantize_many(out.model.centroids, sample_weight, &out.saturated);

  RoundMessage& m = out.message;
  m.client_id = kp.client_id;
  m.round = round;
  m.kappa = opt.kappa;
  m.dim = weights.size();
  m.sample_weight = sample_weight;
  m.huffman_mapping = opt.huffman_mapping;
  m.ciphertext = dmcfe::encrypt(pp, kp, quantized, round_label(round));

  if (opt.huffman_mapping) {
    m.mapping_payload = huffman::encode(out.model.assignments, opt.kappa);
  } else {
    std::vector<fuse::FilterKey> keys(weights.size());
    for (uint64_t i = 0; i < weights.size(); ++i)
      keys[i] = {i, out.model.assignments[i]};
    m.mapping_payload =
        fuse::FuseFilter::build(keys, opt.filter_bits, opt.filter_arity,
                                derive_seed(client_seed, "filter", round))
            .serialize();
  }

  const std::vector<uint64_t> ones(pp.client_count(), 1);
  m.key_share = dmcfe::derive_partial_key(pp, kp, ones, round);
  return out;
}

Bytes message_to_bytes(const dmcfe::PublicParams& pp, const RoundMessage& m) {
  ByteWriter w;
  w.u32(kMessageMagic);
  w.u8(1);
  w.u8(m.huffman_mapping ? 1 : 0);
  w.u32(m.client_id);
  w.u64(m.round);
  w.u32(m.kappa);
  w.u64(m.dim);
  w.u64(m.sample_weight);
  w.blob(ciphertext_to_bytes(pp, m.ciphertext));
  w.blob(m.mapping_payload);
  w.blob(partial_key_to_bytes(pp, m.key_share));
  return w.take();
}

RoundMessage message_from_bytes(const dmcfe::PublicParams& pp,
                                std::span<const uint8_t> in) {
  ByteReader r(in);
  require(r.u32() == kMessageMagic, Errc::decode_error, "bad magic");
  require(r.u8() == 1, Errc::decode_error, "bad version");
  const uint8_t flags = r.u8();
  require(flags <= 1, Errc::decode_error, "unknown flags");

  RoundMessage m;
  m.huffman_mapping = flags & 1;
  m.client_id = r.u32();
  m.round = r.u64();
  m.kappa = r.u32();
  m.dim = r.u64();
  m.sample_weight = r.u64();
  m.ciphertext = dmcfe::ciphertext_from_bytes(pp, r.blob());
  const auto mapping = r.blob();
  m.mapping_payload.assign(mapping.begin(), mapping.end());
  m.key_share = dmcfe::partial_key_from_bytes(pp, r.blob());
  r.expect_done("round message");

  require(m.ciphertext.client_id == m.client_id &&
              m.key_share.client_id == m.client_id,
          Errc::decode_error, "client id disagreement");
  require(m.ciphertext.slot_count() == m.kappa, Errc::decode_error,
          "slot count disagreement");
  require(m.ciphertext.label == round_label(m.round), Errc::decode_error,
          "label does not match the round");
  if (!m.huffman_mapping) {
    const auto f = fuse::FuseFilter::deserialize(m.mapping_payload);
    require(f.key_count() == m.dim, Errc::decode_error,
            "filter sized for a different dimension");
  }
  return m;
}

std::vector<uint32_t> mapping_from_filter(const fuse::FuseFilter& f,
                                          uint64_t dim, uint32_t kappa) {
  std::vector<uint32_t> out(dim, kUnknownCluster);
  for (uint64_t i = 0; i < dim; ++i) {
    for (uint32_t j = 0; j < kappa; ++j) {
      if (f.member(i, j)) {
        out[i] = j;
        break;
      }
    }
  }
  return out;
}

std::vector<uint32_t> mapping_from_filter_seeded(const fuse::FuseFilter& f,
                                                 uint64_t dim, uint32_t kappa,
                                                 uint64_t seed) {
  std::vector<uint32_t> out(dim, kUnknownCluster);
  for (uint64_t i = 0; i < dim; ++i) {
    for (uint32_t j = 0; j < kappa; ++j) {
      if (f.member_under(seed, i, j)) {
        out[i] = j;
        break;
      }
    }
  }
  return out;
}

std::vector<uint32_t> reconstruct_mapping(const RoundMessage& m) {
  if (m.huffman_mapping) {
    auto mapping = huffman::decode(m.mapping_payload);
    require(mapping.size() == m.dim, Errc::decode_error,
            "mapping sized for a different dimension");
    for (uint32_t c : mapping)
      require(c < m.kappa, Errc::decode_error, "cluster index out of range");
    return mapping;
  }
  const auto f = fuse::FuseFilter::deserialize(m.mapping_payload);
  require(f.key_count() == m.dim, Errc::decode_error,
          "filter sized for a different dimension");
  return mapping_from_filter(f, m.dim, m.kappa);
}

AggregateResult secure_aggregate(const dmcfe::PublicParams& pp,
                                 std::span<const RoundMessage> messages,
                                 uint64_t total_samples,
                                 const FixedPointCodec& codec,
                                 const dmcfe::DlogTable& table) {
  const unsigned n = pp.client_count();
  require(!messages.empty(), Errc::insufficient_ciphertexts, "no messages");
  require(messages.size() >= n, Errc::insufficient_ciphertexts,
          "missing participants");
  require(messages.size() == n, Errc::invalid_argument,
          "more messages than cohort members");

  // Round binding first: a stale or cross-round message must surface as a
  // label mismatch before any key or payload processing.
  const Bytes& label = messages[0].ciphertext.label;
  for (const auto& m : messages) {
    require(m.ciphertext.label == round_label(m.round), Errc::label_mismatch,
            "ciphertext label does not match its round field");
    require(m.ciphertext.label == label, Errc::label_mismatch,
            "messages from different rounds");
  }

  const uint64_t round = messages[0].round;
  const uint32_t kappa = messages[0].kappa;
  const uint64_t dim = messages[0].dim;
  require(kappa >= 1 && dim >= 1, Errc::invalid_argument, "empty geometry");
  uint64_t weight_sum = 0;
  for (const auto& m : messages) {
    require(m.kappa == kappa && m.dim == dim, Errc::invalid_argument,
            "geometry disagreement");
    require(m.ciphertext.client_id == m.client_id &&
                m.key_share.client_id == m.client_id,
            Errc::invalid_argument, "client id disagreement");
    weight_sum += m.sample_weight;
  }
  require(weight_sum == total_samples, Errc::invalid_argument,
          "sample total disagreement");

  dmcfe::FunctionTag expected;
  expected.scope = round;
  expected.y.assign(n, 1);
  std::vector<dmcfe::PartialDecKey> shares;
  shares.reserve(messages.size());
  for (const auto& m : messages) {
    require(m.key_share.tag == expected, Errc::tag_mismatch,
            "key share tag does not cover this round's cohort");
    shares.push_back(m.key_share);
  }
  const auto dk = combine_keys(pp, shares);

  AggregateResult out;
  out.mappings.reserve(messages.size());
  std::vector<const std::vector<uint32_t>*> mapping_of(n, nullptr);
  std::vector<dmcfe::Ciphertext> cts;
  cts.reserve(messages.size());
  for (const auto& m : messages) {
    out.mappings.push_back(reconstruct_mapping(m));
    cts.push_back(m.ciphertext);
  }
  for (size_t k = 0; k < messages.size(); ++k)
    mapping_of[messages[k].client_id] = &out.mappings[k];

  dmcfe::DecryptSession session(pp, dk, cts);
  const auto& active = session.active_clients();
  std::vector<uint32_t> slot_for(active.size());
  out.weights.resize(dim);
  for (uint64_t j = 0; j < dim; ++j) {
    for (size_t k = 0; k < active.size(); ++k) {
      uint32_t c = (*mapping_of[active[k]])[j];
      if (c == kUnknownCluster) {
        c = 0;
        ++out.substitute_failures;
      }
      slot_for[k] = c;
    }
    out.weights[j] =
        codec.dequantize(session.value_mixed(slot_for, table), total_samples);
  }
  return out;
}

CommunicationLedger account_round(const dmcfe::PublicParams& pp,
                                  std::span<const RoundMessage> messages,
                                  uint64_t dim) {
  require(dim >= 1, Errc::invalid_argument, "empty dimension");
  require(!messages.empty(), Errc::invalid_argument, "no messages");

  CommunicationLedger ledger;
  const double dense_bits = double(dim) * 32.0;
  uint64_t key_total = 0;
  for (const auto& m : messages) {
    LedgerRow row;
    row.round = m.round;
    row.client = m.client_id;
    row.ct_bytes = ciphertext_to_bytes(pp, m.ciphertext).size();
    row.filter_bytes = m.mapping_payload.size();
    row.key_bytes = partial_key_to_bytes(pp, m.key_share).size();
    row.total_bytes = message_to_bytes(pp, m).size();
    row.bits_per_param = double(row.total_bytes) * 8.0 / double(dim);
    row.ratio = double(row.total_bytes) * 8.0 / dense_bits;
    row.ratio_no_key =
        double(row.total_bytes - row.key_bytes) * 8.0 / dense_bits;
    ledger.total_bytes += row.total_bytes;
    key_total += row.key_bytes;
    ledger.rows.push_back(row);
  }
  const double all_dense = dense_bits * double(messages.size());
  ledger.ratio = double(ledger.total_bytes) * 8.0 / all_dense;
  ledger.ratio_no_key =
      double(ledger.total_bytes - key_total) * 8.0 / all_dense;
  return ledger;
}

std::string CommunicationLedger::to_csv() const {
  std::string out =
      "round,client,ct_bytes,filter_bytes,key_bytes,bpp,ratio,ratio_no_key\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line),
                  "%llu,%u,%llu,%llu,%llu,%.4f,%.6f,%.6f\n",
                  (unsigned long long)r.round, r.client,
                  (unsigned long long)r.ct_bytes,
                  (unsigned long long)r.filter_bytes,
                  (unsigned long long)r.key_bytes, r.bits_per_param, r.ratio,
                  r.ratio_no_key);
    out += line;
  }
  return out;
}

}  // namespace enccluster::protocol
