// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "enccluster/clustering.hpp"
#include "enccluster/fl_harness.hpp"

namespace enccluster::privacy {

// Upper-bound attacker: cluster the aggregate into kappa centroids, then
// replace every target weight with the nearest one. Deterministic given the
// clustering seed.
std::vector<double> perfect_estimation_attack(std::span<const double> target,
                                              std::span<const double> aggregate,
                                              uint32_t kappa,
                                              uint64_t seed = 0x61747461636bULL);

// Mean squared difference between two equal-length vectors.
double weight_mse(std::span<const double> a, std::span<const double> b);

// Mean squared difference between two models' hidden activations after
// projecting both onto the top-2 principal components. The components are
// fitted on model a's activations by default; pooled_fit uses both models'
// activations, which makes the measure symmetric under swapping a and b.
double embedding_mse(const fl::TinyModel& a, const fl::TinyModel& b,
                     const fl::SyntheticDataset& ds,
                     std::span<const uint32_t> shard, bool pooled_fit = false);

// Lower bound on the squared estimation error when every mapping entry is
// independently rerouted to a uniformly random wrong cluster with
// probability 2^-bpe, next to the Monte-Carlo measurement of that error.
// d_inter has no meaning for a single cluster; such reports carry
// applicable = false and NaN there.
struct ErrorBoundReport {
  uint64_t dim = 0;
  uint32_t kappa = 0;
  uint32_t bpe = 0;
  bool applicable = false;
  double d_intra = 0;
  double d_inter = 0;
  double bound = 0;
  uint32_t trials = 0;
  double empirical_mean = 0;
  double empirical_min = 0;  // smallest per-trial error seen

  static std::string csv_header();
  std::string csv_row() const;
};

ErrorBoundReport estimation_error_bound(std::span<const double> weights,
                                        const clustering::ClusterModel& model,
                                        uint32_t bpe, uint32_t trials,
                                        uint64_t seed);

// Same report, but the per-trial mapping comes from a freshly built filter
// queried under its own seed; measures the deployed reconstruction path
// against the analytic corruption model.
ErrorBoundReport estimation_error_with_filter(
    std::span<const double> weights, const clustering::ClusterModel& model,
    uint32_t bpe, uint32_t arity, uint32_t trials, uint64_t seed);

struct ClientClustering {
  std::vector<double> weights;
  clustering::ClusterModel model;
};

// Cohort version: per-client minima averaged, bound divided by the cohort
// size, empirical error measured between the true mean vector and the mean
// of the per-client corrupted reconstructions.
struct AggregateBoundReport {
  uint64_t dim = 0;
  uint32_t clients = 0;
  uint32_t bpe = 0;
  bool applicable = false;
  double dbar_intra = 0;
  double dbar_inter = 0;
  double bound = 0;
  uint32_t trials = 0;
  double empirical_mean = 0;
  double empirical_min = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

AggregateBoundReport aggregate_error_bound(
    std::span<const ClientClustering> clients, uint32_t bpe, uint32_t trials,
    uint64_t seed);

// Exact operation counts for the two attacker models, as decimal strings:
// kappa^d for an attacker with no mapping, kappa! for one holding it.
enum class Attacker { blind, server_with_mapping };
std::string attack_complexity(uint64_t d, uint32_t kappa, Attacker a);

// One seeded comparison: the same attack run against a cohort trained on an
// evenly mixed partition versus a skewed one. The d_inter fields carry the
// separability of the codebook each attack used (minimum over target weights
// of the mean squared distance to the non-assigned centroids); NaN when the
// codebook holds a single centroid.
struct AttackPair {
  uint64_t seed = 0;
  double iid_mse = 0;
  double noniid_mse = 0;
  double iid_d_inter = 0;
  double noniid_d_inter = 0;
};

std::vector<AttackPair> attack_ordering_experiment(uint32_t num_seeds,
                                                   uint32_t kappa,
                                                   uint64_t master_seed);
std::string attack_pairs_csv(std::span<const AttackPair> pairs);

// One-sided sign test: probability of at least `successes` heads in `n`
// fair flips.
double sign_test_pvalue(uint32_t successes, uint32_t n);

}  // namespace enccluster::privacy
