// SPDX-License-Identifier: Apache-2.0
#include "enccluster/privacy_eval.hpp"

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "enccluster/errors.hpp"
#include "enccluster/fuse_filter.hpp"
#include "enccluster/protocol.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::privacy {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double nearest_centroid(const std::vector<double>& centroids, double v) {
  auto it = std::lower_bound(centroids.begin(), centroids.end(), v);
  if (it == centroids.end()) return centroids.back();
  if (it == centroids.begin()) return centroids.front();
  double hi = *it, lo = *(it - 1);
  return (v - lo) <= (hi - v) ? lo : hi;
}

// Minima over weights of (own squared distance, mean squared distance to
// the other centroids). The second value is NaN for a single cluster.
std::pair<double, double> distance_minima(std::span<const double> weights,
                                          const clustering::ClusterModel& m) {
  const auto& z = m.centroids;
  const uint32_t kappa = uint32_t(z.size());
  double dintra = std::numeric_limits<double>::infinity();
  double dinter = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < weights.size(); ++i) {
    double own = weights[i] - z[m.assignments[i]];
    dintra = std::min(dintra, own * own);
    if (kappa >= 2) {
      double sum = 0;
      for (uint32_t c = 0; c < kappa; ++c) {
        if (c == m.assignments[i]) continue;
        double diff = weights[i] - z[c];
        sum += diff * diff;
      }
      dinter = std::min(dinter, sum / double(kappa - 1));
    }
  }
  if (kappa < 2) dinter = kNaN;
  return {dintra, dinter};
}

// Squared estimation error for one corrupted mapping draw.
double corrupted_error(std::span<const double> weights,
                       const clustering::ClusterModel& m, double prob,
                       Rng& rng) {
  const auto& z = m.centroids;
  const uint32_t kappa = uint32_t(z.size());
  double err = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    uint32_t c = m.assignments[i];
    if (kappa >= 2 && rng.uniform() < prob) {
      uint32_t other = uint32_t(rng.below(kappa - 1));
      c = other >= c ? other + 1 : other;
    }
    double diff = weights[i] - z[c];
    err += diff * diff;
  }
  return err;
}

void check_clustering(std::span<const double> weights,
                      const clustering::ClusterModel& m) {
  require(!weights.empty(), Errc::invalid_argument, "empty weight vector");
  require(m.assignments.size() == weights.size(), Errc::invalid_argument,
          "clustering does not match the weight vector");
  require(!m.centroids.empty(), Errc::invalid_argument, "empty codebook");
}

}  // namespace

std::vector<double> perfect_estimation_attack(std::span<const double> target,
                                              std::span<const double> aggregate,
                                              uint32_t kappa, uint64_t seed) {
  require(target.size() == aggregate.size(), Errc::invalid_argument,
          "target and aggregate must have equal length");
  auto model = clustering::cluster_weights(aggregate, kappa, seed, 100);
  std::vector<double> est(target.size());
  for (size_t i = 0; i < target.size(); ++i) {
    est[i] = nearest_centroid(model.centroids, target[i]);
  }
  return est;
}

double weight_mse(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), Errc::invalid_argument,
          "need two equal-length non-empty vectors");
  double sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum / double(a.size());
}

namespace {

// Activation matrix of the hidden layer, row per shard sample.
std::vector<double> activations(const fl::TinyModel& m,
                                const fl::SyntheticDataset& ds,
                                std::span<const uint32_t> shard) {
  std::vector<double> out;
  out.reserve(shard.size() * m.hidden);
  for (uint32_t i : shard) {
    auto h = m.hidden_out(ds.row(i));
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix, ascending
// eigenvalues. Dimensions here are tiny (hidden width), exactness over speed.
void jacobi_eigen(std::vector<double>& a, uint32_t n, std::vector<double>& vecs,
                  std::vector<double>& vals) {
  vecs.assign(size_t(n) * n, 0.0);
  for (uint32_t i = 0; i < n; ++i) vecs[size_t(i) * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (uint32_t p = 0; p < n; ++p)
      for (uint32_t q = p + 1; q < n; ++q) off += std::fabs(a[size_t(p) * n + q]);
    if (off < 1e-13) break;
    for (uint32_t p = 0; p < n; ++p) {
      for (uint32_t q = p + 1; q < n; ++q) {
        double apq = a[size_t(p) * n + q];
        if (std::fabs(apq) < 1e-300) continue;
        double app = a[size_t(p) * n + p], aqq = a[size_t(q) * n + q];
        double theta = (aqq - app) / (2 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1));
        double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (uint32_t k = 0; k < n; ++k) {
          double akp = a[size_t(k) * n + p], akq = a[size_t(k) * n + q];
          a[size_t(k) * n + p] = c * akp - s * akq;
          a[size_t(k) * n + q] = s * akp + c * akq;
        }
        for (uint32_t k = 0; k < n; ++k) {
          double apk = a[size_t(p) * n + k], aqk = a[size_t(q) * n + k];
          a[size_t(p) * n + k] = c * apk - s * aqk;
          a[size_t(q) * n + k] = s * apk + c * aqk;
        }
        for (uint32_t k = 0; k < n; ++k) {
          double vkp = vecs[size_t(k) * n + p], vkq = vecs[size_t(k) * n + q];
          vecs[size_t(k) * n + p] = c * vkp - s * vkq;
          vecs[size_t(k) * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  vals.resize(n);
  for (uint32_t i = 0; i < n; ++i) vals[i] = a[size_t(i) * n + i];
}

}  // namespace

double embedding_mse(const fl::TinyModel& a, const fl::TinyModel& b,
                     const fl::SyntheticDataset& ds,
                     std::span<const uint32_t> shard, bool pooled_fit) {
  require(a.in == b.in && a.hidden == b.hidden && a.classes == b.classes,
          Errc::invalid_argument, "architectures differ");
  require(shard.size() >= 2, Errc::invalid_argument,
          "shard smaller than the component count");

  const uint32_t h = a.hidden;
  const size_t n = shard.size();
  auto acts_a = activations(a, ds, shard);
  auto acts_b = activations(b, ds, shard);

  // Column means of the fitting set.
  std::vector<double> mu(h, 0.0);
  const size_t fit_rows = pooled_fit ? 2 * n : n;
  for (size_t r = 0; r < n; ++r) {
    for (uint32_t j = 0; j < h; ++j) {
      mu[j] += acts_a[r * h + j];
      if (pooled_fit) mu[j] += acts_b[r * h + j];
    }
  }
  for (auto& v : mu) v /= double(fit_rows);

  std::vector<double> cov(size_t(h) * h, 0.0);
  auto accumulate = [&](const std::vector<double>& acts) {
    for (size_t r = 0; r < n; ++r) {
      for (uint32_t i = 0; i < h; ++i) {
        double di = acts[r * h + i] - mu[i];
        for (uint32_t j = i; j < h; ++j) {
          cov[size_t(i) * h + j] += di * (acts[r * h + j] - mu[j]);
        }
      }
    }
  };
  accumulate(acts_a);
  if (pooled_fit) accumulate(acts_b);
  for (uint32_t i = 0; i < h; ++i) {
    for (uint32_t j = i; j < h; ++j) {
      cov[size_t(i) * h + j] /= double(fit_rows);
      cov[size_t(j) * h + i] = cov[size_t(i) * h + j];
    }
  }

  std::vector<double> vecs, vals;
  jacobi_eigen(cov, h, vecs, vals);
  // Top-2 eigenvectors by eigenvalue.
  uint32_t top1 = 0, top2 = 0;
  for (uint32_t i = 1; i < h; ++i) {
    if (vals[i] > vals[top1]) top1 = i;
  }
  top2 = top1 == 0 ? 1 : 0;
  for (uint32_t i = 0; i < h; ++i) {
    if (i != top1 && vals[i] > vals[top2]) top2 = i;
  }

  double sum = 0;
  for (size_t r = 0; r < n; ++r) {
    for (uint32_t comp : {top1, top2}) {
      double pa = 0, pb = 0;
      for (uint32_t j = 0; j < h; ++j) {
        double v = vecs[size_t(j) * h + comp];
        pa += (acts_a[r * h + j] - mu[j]) * v;
        pb += (acts_b[r * h + j] - mu[j]) * v;
      }
      double diff = pa - pb;
      sum += diff * diff;
    }
  }
  return sum / double(n * 2);
}

std::string ErrorBoundReport::csv_header() {
  return "dim,kappa,bpe,applicable,d_intra,d_inter,bound,trials,"
         "empirical_mean,empirical_min\n";
}

std::string ErrorBoundReport::csv_row() const {
  char buf[256];
  snprintf(buf, sizeof buf, "%llu,%u,%u,%d,%.9g,%.9g,%.9g,%u,%.9g,%.9g\n",
           (unsigned long long)dim, kappa, bpe, applicable ? 1 : 0, d_intra,
           applicable ? d_inter : kNaN, bound, trials, empirical_mean,
           empirical_min);
  return buf;
}

ErrorBoundReport estimation_error_bound(std::span<const double> weights,
                                        const clustering::ClusterModel& model,
                                        uint32_t bpe, uint32_t trials,
                                        uint64_t seed) {
  check_clustering(weights, model);
  require(bpe >= 1 && bpe <= 62, Errc::invalid_argument,
          "bits per entry out of range");
  require(trials >= 1, Errc::invalid_argument, "need at least one trial");

  ErrorBoundReport rep;
  rep.dim = weights.size();
  rep.kappa = uint32_t(model.centroids.size());
  rep.bpe = bpe;
  rep.trials = trials;
  rep.applicable = rep.kappa >= 2;
  auto [dintra, dinter] = distance_minima(weights, model);
  rep.d_intra = dintra;
  rep.d_inter = dinter;
  const double p = std::ldexp(1.0, -int(bpe));
  rep.bound = rep.applicable
                  ? double(rep.dim) * ((1.0 - p) * dintra + p * dinter)
                  : double(rep.dim) * dintra;

  double sum = 0, mn = std::numeric_limits<double>::infinity();
  for (uint32_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, "corruption", t));
    double err = corrupted_error(weights, model, p, rng);
    sum += err;
    mn = std::min(mn, err);
  }
  rep.empirical_mean = sum / double(trials);
  rep.empirical_min = mn;
  return rep;
}

ErrorBoundReport estimation_error_with_filter(
    std::span<const double> weights, const clustering::ClusterModel& model,
    uint32_t bpe, uint32_t arity, uint32_t trials, uint64_t seed) {
  check_clustering(weights, model);
  require(trials >= 1, Errc::invalid_argument, "need at least one trial");

  ErrorBoundReport rep = estimation_error_bound(weights, model, bpe, 1, seed);
  rep.trials = trials;

  const uint32_t kappa = uint32_t(model.centroids.size());
  double sum = 0, mn = std::numeric_limits<double>::infinity();
  std::vector<fuse::FilterKey> keys(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    keys[i] = {uint64_t(i), model.assignments[i]};
  }
  for (uint32_t t = 0; t < trials; ++t) {
    auto filter = fuse::FuseFilter::build(keys, bpe, arity,
                                          derive_seed(seed, "filter", t));
    auto mapping =
        protocol::mapping_from_filter(filter, weights.size(), kappa);
    double err = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      uint32_t c = mapping[i] == protocol::kUnknownCluster ? 0 : mapping[i];
      double diff = weights[i] - model.centroids[c];
      err += diff * diff;
    }
    sum += err;
    mn = std::min(mn, err);
  }
  rep.empirical_mean = sum / double(trials);
  rep.empirical_min = mn;
  return rep;
}

std::string AggregateBoundReport::csv_header() {
  return "dim,clients,bpe,applicable,dbar_intra,dbar_inter,bound,trials,"
         "empirical_mean,empirical_min\n";
}

std::string AggregateBoundReport::csv_row() const {
  char buf[256];
  snprintf(buf, sizeof buf, "%llu,%u,%u,%d,%.9g,%.9g,%.9g,%u,%.9g,%.9g\n",
           (unsigned long long)dim, clients, bpe, applicable ? 1 : 0,
           dbar_intra, applicable ? dbar_inter : kNaN, bound, trials,
           empirical_mean, empirical_min);
  return buf;
}

AggregateBoundReport aggregate_error_bound(
    std::span<const ClientClustering> clients, uint32_t bpe, uint32_t trials,
    uint64_t seed) {
  require(clients.size() >= 2, Errc::invalid_argument,
          "need at least two clients");
  require(bpe >= 1 && bpe <= 62, Errc::invalid_argument,
          "bits per entry out of range");
  require(trials >= 1, Errc::invalid_argument, "need at least one trial");
  const uint64_t d = clients[0].weights.size();
  for (const auto& c : clients) {
    require(c.weights.size() == d, Errc::invalid_argument,
            "client dimensions differ");
    check_clustering(c.weights, c.model);
  }

  AggregateBoundReport rep;
  rep.dim = d;
  rep.clients = uint32_t(clients.size());
  rep.bpe = bpe;
  rep.trials = trials;
  rep.applicable = true;
  double si = 0, sx = 0;
  for (const auto& c : clients) {
    auto [dintra, dinter] = distance_minima(c.weights, c.model);
    si += dintra;
    if (c.model.centroids.size() < 2) rep.applicable = false;
    sx += dinter;
  }
  rep.dbar_intra = si / double(clients.size());
  rep.dbar_inter = rep.applicable ? sx / double(clients.size()) : kNaN;
  const double p = std::ldexp(1.0, -int(bpe));
  double per = rep.applicable
                   ? (1.0 - p) * rep.dbar_intra + p * rep.dbar_inter
                   : rep.dbar_intra;
  rep.bound = double(d) * per / double(clients.size());

  const double inv_n = 1.0 / double(clients.size());
  std::vector<double> mean_err(d);
  double sum = 0, mn = std::numeric_limits<double>::infinity();
  for (uint32_t t = 0; t < trials; ++t) {
    std::fill(mean_err.begin(), mean_err.end(), 0.0);
    for (size_t n = 0; n < clients.size(); ++n) {
      Rng rng(derive_seed(seed, "agg-corruption", t * clients.size() + n));
      const auto& c = clients[n];
      const auto& z = c.model.centroids;
      const uint32_t kappa = uint32_t(z.size());
      for (uint64_t i = 0; i < d; ++i) {
        uint32_t cl = c.model.assignments[i];
        if (kappa >= 2 && rng.uniform() < p) {
          uint32_t other = uint32_t(rng.below(kappa - 1));
          cl = other >= cl ? other + 1 : other;
        }
        mean_err[i] += inv_n * (c.weights[i] - z[cl]);
      }
    }
    double err = 0;
    for (uint64_t i = 0; i < d; ++i) err += mean_err[i] * mean_err[i];
    sum += err;
    mn = std::min(mn, err);
  }
  rep.empirical_mean = sum / double(trials);
  rep.empirical_min = mn;
  return rep;
}

std::string attack_complexity(uint64_t d, uint32_t kappa, Attacker a) {
  require(d >= 1 && kappa >= 1, Errc::invalid_argument,
          "need d and kappa at least 1");
  mpz_t z;
  mpz_init(z);
  if (a == Attacker::blind) {
    mpz_ui_pow_ui(z, kappa, d);
  } else {
    mpz_fac_ui(z, kappa);
  }
  char* s = mpz_get_str(nullptr, 10, z);
  std::string out(s);
  void (*freefn)(void*, size_t);
  mp_get_memory_functions(nullptr, nullptr, &freefn);
  freefn(s, out.size() + 1);
  mpz_clear(z);
  return out;
}

std::vector<AttackPair> attack_ordering_experiment(uint32_t num_seeds,
                                                   uint32_t kappa,
                                                   uint64_t master_seed) {
  require(num_seeds >= 1, Errc::invalid_argument, "need at least one seed");
  std::vector<AttackPair> out;
  for (uint32_t s = 0; s < num_seeds; ++s) {
    uint64_t seed = derive_seed(master_seed, "attack-seed", s);
    auto run = [&](bool iid) {
      fl::ExperimentConfig c;
      c.clients = 4;
      c.rounds = 1;
      c.epochs = 5;
      c.samples = 1200;
      c.features = 8;
      c.hidden = 16;
      c.mode = fl::Mode::fedavg;
      c.seed = seed;
      c.iid = iid;
      c.alpha = 0.1;
      auto ds = fl::generate_dataset(c.classes, c.features, c.samples,
                                     c.spread, derive_seed(seed, "data"));
      auto [train, test] = fl::stratified_split(ds, 0.2,
                                                derive_seed(seed, "holdout"));
      auto part = iid ? fl::partition_iid(train, c.clients,
                                          derive_seed(seed, "partition"))
                      : fl::partition_dirichlet(ds, train, c.clients, c.alpha,
                                                derive_seed(seed, "partition"));
      auto global = fl::TinyModel::init(c.features, c.hidden, c.classes,
                                        derive_seed(seed, "model"));
      std::vector<fl::TinyModel> locals;
      std::vector<double> agg(global.dim(), 0.0);
      uint64_t total = 0;
      for (uint32_t g = 0; g < c.clients; ++g) total += part.clients[g].size();
      for (uint32_t g = 0; g < c.clients; ++g) {
        auto m = fl::local_train(global, ds, part.clients[g], c.epochs, c.lr,
                                 c.batch, derive_seed(seed, "train", g));
        double w = double(part.clients[g].size()) / double(total);
        for (size_t j = 0; j < agg.size(); ++j) agg[j] += w * m.w[j];
        locals.push_back(std::move(m));
      }
      auto est = perfect_estimation_attack(locals[0].w, agg, kappa,
                                           derive_seed(seed, "attack"));
      // Re-derive the attack codebook to report how separated it is around
      // the target. Assignments follow the attack's nearest-centroid rule.
      auto codebook = clustering::cluster_weights(agg, kappa,
                                                  derive_seed(seed, "attack"),
                                                  100);
      clustering::ClusterModel probe;
      probe.centroids = codebook.centroids;
      probe.assignments.resize(locals[0].w.size());
      for (size_t j = 0; j < locals[0].w.size(); ++j) {
        const auto& z = probe.centroids;
        auto it = std::lower_bound(z.begin(), z.end(), locals[0].w[j]);
        size_t idx;
        if (it == z.end()) {
          idx = z.size() - 1;
        } else if (it == z.begin()) {
          idx = 0;
        } else {
          size_t hi = size_t(it - z.begin());
          idx = (locals[0].w[j] - z[hi - 1]) <= (z[hi] - locals[0].w[j])
                    ? hi - 1
                    : hi;
        }
        probe.assignments[j] = uint32_t(idx);
      }
      double dinter = distance_minima(locals[0].w, probe).second;
      return std::pair<double, double>(weight_mse(est, locals[0].w), dinter);
    };
    AttackPair pair;
    pair.seed = seed;
    auto [mi, di] = run(true);
    auto [mn, dn] = run(false);
    pair.iid_mse = mi;
    pair.iid_d_inter = di;
    pair.noniid_mse = mn;
    pair.noniid_d_inter = dn;
    out.push_back(pair);
  }
  return out;
}

std::string attack_pairs_csv(std::span<const AttackPair> pairs) {
  std::string out = "seed,iid_mse,noniid_mse,iid_d_inter,noniid_d_inter\n";
  char buf[192];
  for (const auto& p : pairs) {
    snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g\n",
             (unsigned long long)p.seed, p.iid_mse, p.noniid_mse,
             p.iid_d_inter, p.noniid_d_inter);
    out += buf;
  }
  return out;
}

double sign_test_pvalue(uint32_t successes, uint32_t n) {
  require(successes <= n && n >= 1 && n <= 1024, Errc::invalid_argument,
          "bad sign-test arguments");
  // Exact binomial tail at p = 1/2, running binomial coefficients.
  long double coeff = 1.0L;  // C(n, 0)
  long double tail = 0.0L;
  for (uint32_t k = 0; k <= n; ++k) {
    if (k >= successes) tail += coeff;
    coeff = coeff * (long double)(n - k) / (long double)(k + 1);
  }
  return double(std::ldexp(tail, -int(n)));
}

}  // namespace enccluster::privacy
