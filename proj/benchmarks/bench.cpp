// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the pipeline's hot pieces: group arithmetic and
// pairings, per-client encryption, filter construction and lookups, and
// weight clustering. Run the binary directly; google-benchmark owns the
// flags and the repetition policy.

#include <benchmark/benchmark.h>

#include <array>
#include <cstdint>
#include <vector>

#include "enccluster/bn/group_ctx.hpp"
#include "enccluster/bn/pairing.hpp"
#include "enccluster/clustering.hpp"
#include "enccluster/dmcfe.hpp"
#include "enccluster/fuse_filter.hpp"
#include "enccluster/rng.hpp"

namespace {

using enccluster::derive_seed;
using enccluster::Rng;
namespace bn = enccluster::bn;
namespace dmcfe = enccluster::dmcfe;
namespace fuse = enccluster::fuse;

const bn::GroupCtx& group_of(unsigned bits) {
  static auto rt128 = dmcfe::GroupRuntime::acquire(128);
  static auto rt256 = dmcfe::GroupRuntime::acquire(256);
  return bits == 128 ? rt128->group : rt256->group;
}

const bn::Pairing& pairing_of(unsigned bits) {
  static auto rt128 = dmcfe::GroupRuntime::acquire(128);
  static auto rt256 = dmcfe::GroupRuntime::acquire(256);
  return bits == 128 ? rt128->pairing : rt256->pairing;
}

void BM_Pairing(benchmark::State& state) {
  const auto& e = pairing_of(unsigned(state.range(0)));
  const auto& g = group_of(unsigned(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.pair(g.g1(), g.g2()));
  }
}
BENCHMARK(BM_Pairing)->Arg(128)->Arg(256);

void BM_HashToG1(benchmark::State& state) {
  const auto& g = group_of(unsigned(state.range(0)));
  std::array<uint8_t, 8> msg{1, 2, 3, 4, 5, 6, 7, 8};
  uint64_t domain = 0;
  for (auto _ : state) {
    msg[0] = uint8_t(domain++);
    benchmark::DoNotOptimize(g.hash_to_g1(7, msg));
  }
}
BENCHMARK(BM_HashToG1)->Arg(128)->Arg(256);

void BM_EncryptSlots(benchmark::State& state) {
  const unsigned bits = unsigned(state.range(0));
  const uint32_t kappa = uint32_t(state.range(1));
  dmcfe::Bounds b;
  b.slot = int64_t(1) << 12;
  b.aggregate = int64_t(1) << 40;
  b.y_max = 1;
  auto pp = dmcfe::setup(bits, 2, 42, b);
  dmcfe::SetupTranscript tr(pp);
  auto kp = dmcfe::keygen(pp, 0, tr);
  Rng rng(7);
  std::vector<int64_t> x(kappa);
  for (auto& v : x) v = int64_t(rng.below(2049)) - 1024;
  std::array<uint8_t, 8> label{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmcfe::encrypt(pp, kp, x, label));
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * kappa);
}
BENCHMARK(BM_EncryptSlots)->Args({128, 128})->Args({256, 128});

void BM_FilterBuild(benchmark::State& state) {
  const uint64_t d = uint64_t(state.range(0));
  std::vector<fuse::FilterKey> keys(d);
  for (uint64_t i = 0; i < d; ++i) keys[i] = {i, uint32_t(i % 128)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse::FuseFilter::build(keys, 8, 3, 17));
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(d));
}
BENCHMARK(BM_FilterBuild)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_FilterQuery(benchmark::State& state) {
  const uint64_t d = 100000;
  std::vector<fuse::FilterKey> keys(d);
  for (uint64_t i = 0; i < d; ++i) keys[i] = {i, uint32_t(i % 128)};
  auto f = fuse::FuseFilter::build(keys, 8, 3, 17);
  uint64_t pos = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.member(pos, uint32_t(pos % 128)));
    pos = (pos + 1) % d;
  }
}
BENCHMARK(BM_FilterQuery);

void BM_ClusterWeights(benchmark::State& state) {
  const uint64_t d = uint64_t(state.range(0));
  const uint32_t kappa = uint32_t(state.range(1));
  Rng rng(3);
  std::vector<double> w(d);
  for (auto& v : w) v = rng.uniform() * 2 - 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        enccluster::clustering::cluster_weights(w, kappa, 11, 100));
  }
}
BENCHMARK(BM_ClusterWeights)->Args({10000, 16})->Args({10000, 128});

}  // namespace

BENCHMARK_MAIN();
