// SPDX-License-Identifier: Apache-2.0
#include "enccluster/huffman.hpp"

#include <algorithm>
#include <queue>

#include "enccluster/errors.hpp"

namespace enccluster::huffman {

namespace {

constexpr uint32_t kMagic = 0x43484345;  // "ECHC"
constexpr uint32_t kMaxLen = 56;         // fits any realistic sequence

// Code length per symbol; zero marks an absent symbol.
std::vector<uint8_t> code_lengths(std::span<const uint64_t> freq) {
  const uint32_t a = uint32_t(freq.size());
  std::vector<uint8_t> lengths(a, 0);

  // (frequency, node). Ties break on the node id so the tree shape is
  // deterministic.
  using Node = std::pair<uint64_t, uint32_t>;
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> heap;
  std::vector<uint32_t> parent;
  parent.reserve(2 * a);
  for (uint32_t s = 0; s < a; ++s) {
    parent.push_back(UINT32_MAX);
    if (freq[s] > 0) heap.emplace(freq[s], s);
  }
  require(!heap.empty(), Errc::invalid_argument, "no symbols");
  if (heap.size() == 1) {
    lengths[heap.top().second] = 1;
    return lengths;
  }
  while (heap.size() > 1) {
    const Node x = heap.top();
    heap.pop();
    const Node y = heap.top();
    heap.pop();
    const uint32_t id = uint32_t(parent.size());
    parent.push_back(UINT32_MAX);
    parent[x.second] = id;
    parent[y.second] = id;
    heap.emplace(x.first + y.first, id);
  }
  for (uint32_t s = 0; s < a; ++s) {
    if (freq[s] == 0) continue;
    uint32_t depth = 0;
    for (uint32_t n = s; parent[n] != UINT32_MAX; n = parent[n]) ++depth;
    require(depth <= kMaxLen, Errc::invalid_argument, "code length overflow");
    lengths[s] = uint8_t(depth);
  }
  return lengths;
}

// Canonical codes: symbols sorted by (length, value) get consecutive
// codewords, shifted left on each length increase.
std::vector<uint64_t> canonical_codes(std::span<const uint8_t> lengths) {
  std::vector<uint32_t> order;
  for (uint32_t s = 0; s < lengths.size(); ++s)
    if (lengths[s] > 0) order.push_back(s);
  std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
    return lengths[x] != lengths[y] ? lengths[x] < lengths[y] : x < y;
  });
  std::vector<uint64_t> codes(lengths.size(), 0);
  uint64_t code = 0;
  uint8_t prev = 0;
  for (uint32_t s : order) {
    code <<= (lengths[s] - prev);
    prev = lengths[s];
    codes[s] = code++;
  }
  return codes;
}

std::vector<uint64_t> count(std::span<const uint32_t> symbols,
                            uint32_t alphabet) {
  require(alphabet >= 1, Errc::invalid_argument, "empty alphabet");
  require(!symbols.empty(), Errc::invalid_argument, "empty sequence");
  std::vector<uint64_t> freq(alphabet, 0);
  for (uint32_t s : symbols) {
    require(s < alphabet, Errc::invalid_argument, "symbol outside alphabet");
    ++freq[s];
  }
  return freq;
}

}  // namespace

Bytes encode(std::span<const uint32_t> symbols, uint32_t alphabet) {
  const auto freq = count(symbols, alphabet);
  const auto lengths = code_lengths(freq);
  const auto codes = canonical_codes(lengths);

  ByteWriter w;
  w.u32(kMagic);
  w.u8(1);
  w.u32(alphabet);
  w.u64(symbols.size());
  w.bytes(lengths);

  uint64_t acc = 0;
  uint32_t filled = 0;
  Bytes packed;
  for (uint32_t s : symbols) {
    acc = (acc << lengths[s]) | codes[s];
    filled += lengths[s];
    while (filled >= 8) {
      filled -= 8;
      packed.push_back(uint8_t(acc >> filled));
    }
  }
  if (filled > 0) packed.push_back(uint8_t(acc << (8 - filled)));
  w.bytes(packed);
  return w.take();
}

size_t encoded_size(std::span<const uint32_t> symbols, uint32_t alphabet) {
  const auto freq = count(symbols, alphabet);
  const auto lengths = code_lengths(freq);
  uint64_t bits = 0;
  for (uint32_t s = 0; s < alphabet; ++s) bits += freq[s] * lengths[s];
  return 4 + 1 + 4 + 8 + alphabet + size_t((bits + 7) / 8);
}

std::vector<uint32_t> decode(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  require(r.u32() == kMagic, Errc::decode_error, "bad magic");
  require(r.u8() == 1, Errc::decode_error, "bad version");
  const uint32_t alphabet = r.u32();
  const uint64_t n = r.u64();
  require(alphabet >= 1, Errc::decode_error, "empty alphabet");
  const auto lengths = r.bytes(alphabet);

  // Per-length canonical tables: the first code of each length and the
  // symbols of that length in canonical order.
  std::vector<uint32_t> order;
  for (uint32_t s = 0; s < alphabet; ++s) {
    require(lengths[s] <= kMaxLen, Errc::decode_error, "code length");
    if (lengths[s] > 0) order.push_back(s);
  }
  require(!order.empty() || n == 0, Errc::decode_error, "no codebook");
  std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
    return lengths[x] != lengths[y] ? lengths[x] < lengths[y] : x < y;
  });
  std::vector<uint64_t> first_code(kMaxLen + 2, 0);
  std::vector<uint32_t> first_sym(kMaxLen + 2, 0);
  std::vector<uint32_t> len_count(kMaxLen + 2, 0);
  for (uint32_t s : order) ++len_count[lengths[s]];
  {
    uint64_t code = 0;
    uint32_t at = 0;
    for (uint32_t l = 1; l <= kMaxLen; ++l) {
      code <<= 1;
      first_code[l] = code;
      first_sym[l] = at;
      code += len_count[l];
      at += len_count[l];
      require(code <= (uint64_t(1) << l), Errc::decode_error,
              "over-subscribed code");
    }
  }

  const auto payload = r.bytes(r.remaining());
  std::vector<uint32_t> out;
  out.reserve(n);
  uint64_t acc = 0;
  uint32_t len = 0;
  size_t bit = 0;
  const size_t total_bits = payload.size() * 8;
  while (out.size() < n) {
    require(bit < total_bits, Errc::decode_error, "truncated bitstream");
    acc = (acc << 1) | ((payload[bit >> 3] >> (7 - (bit & 7))) & 1);
    ++bit;
    ++len;
    require(len <= kMaxLen, Errc::decode_error, "undecodable run");
    if (len_count[len] > 0 && acc < first_code[len] + len_count[len] &&
        acc >= first_code[len]) {
      out.push_back(order[first_sym[len] + uint32_t(acc - first_code[len])]);
      acc = 0;
      len = 0;
    }
  }
  require(total_bits - bit < 8, Errc::decode_error, "trailing bytes");
  return out;
}

}  // namespace enccluster::huffman
