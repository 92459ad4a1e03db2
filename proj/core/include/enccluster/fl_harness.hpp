// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enccluster::fl {

// Gaussian class blobs in feature space. Class c's mean sits on a
// deterministic direction scaled away from the origin; spread controls
// overlap (0 collapses each class onto its mean).
struct SyntheticDataset {
  uint32_t classes = 0;
  uint32_t features = 0;
  std::vector<double> x;   // samples * features, row-major
  std::vector<uint32_t> y; // class index per sample

  size_t size() const noexcept { return y.size(); }
  std::span<const double> row(size_t i) const {
    return {x.data() + i * features, features};
  }
};

SyntheticDataset generate_dataset(uint32_t classes, uint32_t features,
                                  uint32_t samples, double spread,
                                  uint64_t seed);

// Disjoint index lists, one per client, covering the pool.
struct Partition {
  std::vector<std::vector<uint32_t>> clients;
};

Partition partition_iid(std::span<const uint32_t> pool, uint32_t clients,
                        uint64_t seed);
// Per class, client proportions are drawn from a symmetric Dirichlet;
// small alpha concentrates each client on few classes. Clients that end
// up empty take one sample from the currently largest client.
Partition partition_dirichlet(const SyntheticDataset& ds,
                              std::span<const uint32_t> pool, uint32_t clients,
                              double alpha, uint64_t seed);

// 20% per-class holdout; returns (train, test) index lists.
std::pair<std::vector<uint32_t>, std::vector<uint32_t>> stratified_split(
    const SyntheticDataset& ds, double test_fraction, uint64_t seed);

// One-hidden-layer tanh MLP over a flat weight vector:
// [W1 (in*hidden) | b1 (hidden) | W2 (hidden*classes) | b2 (classes)].
struct TinyModel {
  uint32_t in = 0, hidden = 0, classes = 0;
  std::vector<double> w;

  static TinyModel init(uint32_t in, uint32_t hidden, uint32_t classes,
                        uint64_t seed);
  size_t dim() const noexcept { return w.size(); }

  // Softmax logits for one feature row.
  std::vector<double> logits(std::span<const double> x) const;
  // Post-activation hidden layer for one feature row.
  std::vector<double> hidden_out(std::span<const double> x) const;
};

double mean_loss(const TinyModel& m, const SyntheticDataset& ds,
                 std::span<const uint32_t> idx);
double accuracy(const TinyModel& m, const SyntheticDataset& ds,
                std::span<const uint32_t> idx);
// Mean cross-entropy gradient over the batch, same layout as the weights.
std::vector<double> gradient(const TinyModel& m, const SyntheticDataset& ds,
                             std::span<const uint32_t> batch);

TinyModel local_train(TinyModel m, const SyntheticDataset& ds,
                      std::span<const uint32_t> shard, uint32_t epochs,
                      double lr, uint32_t batch, uint64_t seed);

enum class Mode { fedavg, fedavg_wc, enccluster, enccluster_nobf };
std::string_view mode_name(Mode m);
Mode mode_from_name(std::string_view name);

struct ExperimentConfig {
  uint32_t clients = 30;
  uint32_t rounds = 20;
  uint32_t epochs = 1;
  double participation = 1.0;
  uint32_t kappa = 128;
  uint32_t bpe = 32;
  uint32_t key_size = 256;
  uint32_t fraction_bits = 16;
  bool iid = true;
  double alpha = 0.1;  // Dirichlet concentration when iid is false
  Mode mode = Mode::enccluster;
  uint64_t seed = 1;

  // Task geometry; defaults give about 700 weights.
  uint32_t classes = 4;
  uint32_t features = 16;
  uint32_t hidden = 32;
  uint32_t samples = 4000;
  double spread = 1.25;
  double lr = 0.05;
  uint32_t batch = 32;
  uint32_t dlog_baby_steps = 1u << 16;
};

struct RoundMetrics {
  uint32_t round = 0;
  Mode mode = Mode::fedavg;
  double accuracy = 0;
  uint64_t uplink_bytes = 0;
  double bits_per_param = 0;
  double ratio_vs_fedavg = 0;
  double enc_ms = 0;  // client-side preparation, summed over the cohort
  double agg_ms = 0;  // server-side aggregation
  double mapping_mismatch_rate = 0;
};

struct ExperimentMetrics {
  ExperimentConfig config;
  std::vector<RoundMetrics> rounds;
  std::vector<double> final_weights;
  double final_accuracy = 0;

  // Comment header with the resolved config, then one row per round.
  std::string to_csv(bool with_header = true) const;
};

// R rounds of sample -> train -> aggregate under the configured mode.
// Bit-exact reproducible from the seed, timing columns aside.
ExperimentMetrics run_experiment(const ExperimentConfig& cfg);

}  // namespace enccluster::fl
