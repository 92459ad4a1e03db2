// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace enccluster::clustering {

// Result of scalar k-means over a flattened weight vector. Centroids are
// canonicalized ascending and assignments always point at the nearest
// centroid (ties resolved to the lowest index), even when iteration stopped
// at the cap rather than at a fixpoint.
struct ClusterModel {
  std::vector<double> centroids;      // size kappa, ascending
  std::vector<uint32_t> assignments;  // size d, values < kappa
  uint32_t iterations = 0;            // Lloyd iterations executed
  bool converged = false;             // assignment fixpoint reached
  double loss = 0.0;                  // sum of squared residuals
};

// k-means++ seeding followed by Lloyd iterations. Deterministic: identical
// (weights, kappa, seed, max_iterations) produce bit-identical models.
// Empty clusters are reseeded to the point currently farthest from its
// assigned centroid. Throws invalid-argument for kappa == 0, kappa > d,
// empty input or non-finite weights.
ClusterModel cluster_weights(std::span<const double> weights, uint32_t kappa, uint64_t seed,
                             uint32_t max_iterations = 100);

// theta_hat[i] = Z[P[i]].
std::vector<double> reconstruct_weights(const ClusterModel& model);

// Sum over i of (weights[i] - Z[P[i]])^2 under the model's own assignments.
double clustering_loss(std::span<const double> weights, const ClusterModel& model);

}  // namespace enccluster::clustering
