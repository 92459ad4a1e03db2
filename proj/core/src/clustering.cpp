// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0

#include "enccluster/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "enccluster/errors.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::clustering {

namespace {

// Nearest centroid scan, ties to the lowest index. The quadratic kappa*d scan
// is deliberate: centroid counts stay small (<= a few hundred) in this
// protocol and the linear-in-kappa cost profile is part of the contract.
uint32_t nearest(double x, std::span<const double> centroids) {
  uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (uint32_t j = 0; j < centroids.size(); ++j) {
    const double diff = x - centroids[j];
    const double d = diff * diff;
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<double> kmeanspp_init(std::span<const double> w, uint32_t kappa, Rng& rng) {
  const size_t d = w.size();
  std::vector<double> centroids;
  centroids.reserve(kappa);
  centroids.push_back(w[rng.below(d)]);

  // dist2 tracks the squared distance to the nearest chosen centroid and is
  // refreshed against only the newest pick, keeping the whole init at
  // O(kappa * d) like one Lloyd sweep.
  std::vector<double> dist2(d, std::numeric_limits<double>::infinity());
  for (uint32_t k = 1; k < kappa; ++k) {
    double total = 0.0;
    for (size_t i = 0; i < d; ++i) {
      const double diff = w[i] - centroids[k - 1];
      dist2[i] = std::min(dist2[i], diff * diff);
      total += dist2[i];
    }
    size_t pick;
    if (total > 0.0) {
      // Sample proportional to squared distance from the chosen set.
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = d - 1;
      for (size_t i = 0; i < d; ++i) {
        acc += dist2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with existing centroids (duplicate-heavy data).
      pick = rng.below(d);
    }
    centroids.push_back(w[pick]);
  }
  return centroids;
}

}  // namespace

ClusterModel cluster_weights(std::span<const double> weights, uint32_t kappa, uint64_t seed,
                             uint32_t max_iterations) {
  const size_t d = weights.size();
  require(d > 0, Errc::invalid_argument, "weights must be nonempty");
  require(kappa >= 1, Errc::invalid_argument, "kappa must be >= 1");
  require(kappa <= d, Errc::invalid_argument, "kappa exceeds weight count");
  for (double v : weights) {
    require(std::isfinite(v), Errc::invalid_argument, "weights must be finite");
  }

  Rng rng(seed);
  std::vector<double> centroids = kmeanspp_init(weights, kappa, rng);

  ClusterModel model;
  model.assignments.assign(d, 0);
  std::vector<double> sums(kappa);
  std::vector<uint64_t> counts(kappa);
  std::vector<uint32_t> prev;

  for (uint32_t iter = 0; iter < max_iterations; ++iter) {
    model.iterations = iter + 1;
    for (size_t i = 0; i < d; ++i) {
      model.assignments[i] = nearest(weights[i], centroids);
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < d; ++i) {
      sums[model.assignments[i]] += weights[i];
      counts[model.assignments[i]] += 1;
    }
    for (uint32_t j = 0; j < kappa; ++j) {
      if (counts[j] > 0) centroids[j] = sums[j] / double(counts[j]);
    }

    // Reseed empty clusters to the points farthest from their own centroid,
    // one distinct point per empty cluster.
    std::vector<size_t> taken;
    for (uint32_t j = 0; j < kappa; ++j) {
      if (counts[j] != 0) continue;
      double worst = -1.0;
      size_t pick = 0;
      for (size_t i = 0; i < d; ++i) {
        if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
        const double diff = weights[i] - centroids[model.assignments[i]];
        const double dd = diff * diff;
        if (dd > worst) {
          worst = dd;
          pick = i;
        }
      }
      centroids[j] = weights[pick];
      taken.push_back(pick);
    }

    if (taken.empty() && iter > 0 && model.assignments == prev) {
      model.converged = true;
      break;
    }
    prev = model.assignments;
  }

  // Canonical order: centroids ascending, stable in the original index for
  // exact duplicates, assignments remapped and re-derived so the
  // nearest-with-lowest-index invariant holds on output.
  std::vector<uint32_t> order(kappa);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](uint32_t a, uint32_t b) { return centroids[a] < centroids[b]; });
  std::vector<double> sorted(kappa);
  for (uint32_t j = 0; j < kappa; ++j) sorted[j] = centroids[order[j]];
  model.centroids = std::move(sorted);

  model.loss = 0.0;
  for (size_t i = 0; i < d; ++i) {
    model.assignments[i] = nearest(weights[i], model.centroids);
    const double diff = weights[i] - model.centroids[model.assignments[i]];
    model.loss += diff * diff;
  }
  return model;
}

std::vector<double> reconstruct_weights(const ClusterModel& model) {
  std::vector<double> out(model.assignments.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = model.centroids[model.assignments[i]];
  }
  return out;
}

double clustering_loss(std::span<const double> weights, const ClusterModel& model) {
  require(weights.size() == model.assignments.size(), Errc::invalid_argument,
          "weights/assignments size mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double diff = weights[i] - model.centroids[model.assignments[i]];
    loss += diff * diff;
  }
  return loss;
}

}  // namespace enccluster::clustering
