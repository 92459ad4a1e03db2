// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "enccluster/bytes.hpp"
#include "enccluster/clustering.hpp"
#include "enccluster/dmcfe.hpp"
#include "enccluster/fuse_filter.hpp"

namespace enccluster::protocol {

// One aggregation round: every client clusters its trained weights,
// encrypts the centroid codebook under the round label, and ships the
// position-to-cluster mapping as a membership filter (or, in the
// filter-free variant, as a Huffman-coded sequence). The server rebuilds
// each mapping, sums the matching encrypted centroids per position, and
// reads the weighted average out of one bounded discrete log per position.

// Symmetric saturating fixed-point. A value v carried by a client with
// sample weight w rides the wire as round(v * w * 2^q), clamped into
// [-slot_bound, slot_bound]; the server divides the decrypted sum by
// (total weight * 2^q).
class FixedPointCodec {
 public:
  FixedPointCodec(uint32_t fraction_bits, int64_t slot_bound);

  uint32_t fraction_bits() const noexcept { return q_; }
  int64_t slot_bound() const noexcept { return bound_; }
  int64_t scale() const noexcept { return int64_t(1) << q_; }

  // Clamps land in *saturated when the caller passes a counter.
  int64_t quantize(double value, uint64_t weight,
                   uint64_t* saturated = nullptr) const;
  std::vector<int64_t> quantize_many(std::span<const double> values,
                                     uint64_t weight,
                                     uint64_t* saturated = nullptr) const;
  double dequantize(int64_t aggregate, uint64_t total_weight) const;

 private:
  uint32_t q_;
  int64_t bound_;
};

// Round label bytes embedded in every ciphertext of round r.
Bytes round_label(uint64_t round);

struct UpdateOptions {
  uint32_t kappa = 128;
  uint32_t filter_bits = 32;  // fingerprint bits per entry
  uint32_t filter_arity = 4;
  uint32_t kmeans_iterations = 100;
  bool huffman_mapping = false;  // ship the mapping itself, losslessly coded
};

// Everything one participant uploads for one round.
struct RoundMessage {
  uint32_t client_id = 0;  // index within the round's cohort
  uint64_t round = 0;
  uint32_t kappa = 0;
  uint64_t dim = 0;
  uint64_t sample_weight = 1;
  bool huffman_mapping = false;
  dmcfe::Ciphertext ciphertext;   // kappa slots, label = round_label(round)
  Bytes mapping_payload;          // serialized filter, or Huffman stream
  dmcfe::PartialDecKey key_share;  // all-ones weights, scope = round
};

Bytes message_to_bytes(const dmcfe::PublicParams& pp, const RoundMessage& m);
RoundMessage message_from_bytes(const dmcfe::PublicParams& pp,
                                std::span<const uint8_t> in);

struct ClientUpdate {
  RoundMessage message;
  clustering::ClusterModel model;  // ground truth for mismatch metrics
  uint64_t saturated = 0;
};

// The client-side pipeline after local training: cluster, quantize and
// pre-scale by the sample weight, encrypt, encode the mapping, derive the
// round's key share. Deterministic given (weights, options, seed, round).
ClientUpdate client_prepare_update(const dmcfe::PublicParams& pp,
                                   const dmcfe::ClientKeyPair& kp,
                                   std::span<const double> weights,
                                   uint64_t sample_weight, uint64_t round,
                                   const FixedPointCodec& codec,
                                   const UpdateOptions& opt,
                                   uint64_t client_seed);

// Mapping entry for a position no cluster index matched. Impossible under
// the filter's own seed (no false negatives); expected under a wrong seed.
constexpr uint32_t kUnknownCluster = UINT32_MAX;

// Lowest matching cluster index per position, kUnknownCluster when none.
std::vector<uint32_t> mapping_from_filter(const fuse::FuseFilter& f,
                                          uint64_t dim, uint32_t kappa);
// Same walk but querying under a caller-held seed; feeding the build seed
// reproduces mapping_from_filter, anything else degrades to noise.
std::vector<uint32_t> mapping_from_filter_seeded(const fuse::FuseFilter& f,
                                                 uint64_t dim, uint32_t kappa,
                                                 uint64_t seed);
// Dispatches on the message's mapping encoding.
std::vector<uint32_t> reconstruct_mapping(const RoundMessage& m);

struct AggregateResult {
  std::vector<double> weights;  // dim entries, already rescaled
  // Positions whose mapping came back unknown fall back to centroid 0.
  uint64_t substitute_failures = 0;
  // Reconstructed mapping per message, in message order.
  std::vector<std::vector<uint32_t>> mappings;
};

// Server side of one round: validates labels and tags, combines the key
// shares, rebuilds every mapping, then recovers the weighted average per
// position. total_samples must equal the sum of the cohort's weights.
AggregateResult secure_aggregate(const dmcfe::PublicParams& pp,
                                 std::span<const RoundMessage> messages,
                                 uint64_t total_samples,
                                 const FixedPointCodec& codec,
                                 const dmcfe::DlogTable& table);

struct LedgerRow {
  uint64_t round = 0;
  uint32_t client = 0;
  uint64_t ct_bytes = 0;
  uint64_t filter_bytes = 0;  // mapping payload, whichever encoding
  uint64_t key_bytes = 0;
  uint64_t total_bytes = 0;  // full serialized message
  double bits_per_param = 0;
  double ratio = 0;         // vs dense 32-bit upload, key share included
  double ratio_no_key = 0;  // key share excluded
};

struct CommunicationLedger {
  std::vector<LedgerRow> rows;
  uint64_t total_bytes = 0;
  double ratio = 0;
  double ratio_no_key = 0;

  // Header line plus one row per client.
  std::string to_csv() const;
};

// Exact byte accounting of one round's uplink against a dense 32-bit
// baseline of dim parameters per client.
CommunicationLedger account_round(const dmcfe::PublicParams& pp,
                                  std::span<const RoundMessage> messages,
                                  uint64_t dim);

}  // namespace enccluster::protocol
