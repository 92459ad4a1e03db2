// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "enccluster/errors.hpp"
#include "enccluster/fl_harness.hpp"
#include "enccluster/rng.hpp"

using namespace enccluster;
using namespace enccluster::fl;

namespace {

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{0};
}

// Multinomial logistic regression by full-batch gradient descent. Used as an
// independent check that the blob task is linearly separable at zero spread.
double linear_train_accuracy(const SyntheticDataset& ds, int iters,
                             double lr) {
  uint32_t C = ds.classes, F = ds.features;
  std::vector<double> w(size_t(F) * C, 0.0), b(C, 0.0);
  std::vector<double> z(C);
  for (int it = 0; it < iters; ++it) {
    std::vector<double> gw(w.size(), 0.0), gb(C, 0.0);
    for (uint32_t i = 0; i < ds.size(); ++i) {
      auto x = ds.row(i);
      std::fill(z.begin(), z.end(), 0.0);
      for (uint32_t f = 0; f < F; ++f)
        for (uint32_t k = 0; k < C; ++k) z[k] += x[f] * w[f * C + k];
      for (uint32_t k = 0; k < C; ++k) z[k] += b[k];
      double mx = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (auto& v : z) {
        v = std::exp(v - mx);
        s += v;
      }
      for (auto& v : z) v /= s;
      z[ds.y[i]] -= 1.0;
      for (uint32_t f = 0; f < F; ++f)
        for (uint32_t k = 0; k < C; ++k) gw[f * C + k] += x[f] * z[k];
      for (uint32_t k = 0; k < C; ++k) gb[k] += z[k];
    }
    for (size_t j = 0; j < w.size(); ++j) w[j] -= lr * gw[j] / ds.size();
    for (uint32_t k = 0; k < C; ++k) b[k] -= lr * gb[k] / ds.size();
  }
  size_t hit = 0;
  for (uint32_t i = 0; i < ds.size(); ++i) {
    auto x = ds.row(i);
    std::fill(z.begin(), z.end(), 0.0);
    for (uint32_t f = 0; f < F; ++f)
      for (uint32_t k = 0; k < C; ++k) z[k] += x[f] * w[f * C + k];
    for (uint32_t k = 0; k < C; ++k) z[k] += b[k];
    uint32_t arg =
        uint32_t(std::max_element(z.begin(), z.end()) - z.begin());
    if (arg == ds.y[i]) hit++;
  }
  return double(hit) / double(ds.size());
}

double worst_abs_diff(const std::vector<double>& a,
                      const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return worst;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.clients = 3;
  c.rounds = 2;
  c.samples = 600;
  c.features = 8;
  c.hidden = 8;
  c.kappa = 16;
  c.key_size = 128;
  c.dlog_baby_steps = 1u << 14;
  return c;
}

}  // namespace

TEST_CASE("dataset generation is deterministic, balanced, separable") {
  auto a = generate_dataset(4, 16, 402, 1.25, 7);
  auto b = generate_dataset(4, 16, 402, 1.25, 7);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  auto c = generate_dataset(4, 16, 402, 1.25, 8);
  CHECK(a.x != c.x);

  std::vector<int> counts(4, 0);
  for (auto y : a.y) counts[y]++;
  int mn = *std::min_element(counts.begin(), counts.end());
  int mx = *std::max_element(counts.begin(), counts.end());
  CHECK(mx - mn <= 1);

  // Zero spread collapses classes onto their means.
  auto flat = generate_dataset(4, 16, 400, 0.0, 42);
  CHECK(linear_train_accuracy(flat, 200, 0.1) >= 0.99);

  CHECK(code_of([] { generate_dataset(1, 16, 100, 1.0, 1); }) ==
        Errc::invalid_argument);
  CHECK(code_of([] { generate_dataset(4, 2, 100, 1.0, 1); }) ==
        Errc::invalid_argument);
  CHECK(code_of([] { generate_dataset(4, 16, 2, 1.0, 1); }) ==
        Errc::invalid_argument);
}

TEST_CASE("iid partition covers the pool with near-uniform class mix") {
  auto ds = generate_dataset(4, 16, 2000, 1.0, 11);
  std::vector<uint32_t> pool(ds.size());
  for (uint32_t i = 0; i < ds.size(); ++i) pool[i] = i;
  auto part = partition_iid(pool, 8, 3);

  std::vector<uint32_t> all;
  size_t mn = SIZE_MAX, mx = 0;
  for (const auto& cl : part.clients) {
    all.insert(all.end(), cl.begin(), cl.end());
    mn = std::min(mn, cl.size());
    mx = std::max(mx, cl.size());
  }
  std::sort(all.begin(), all.end());
  CHECK(all == pool);
  CHECK(mx - mn <= 1);

  // Every (client, class) cell within 4 sigma of the binomial mean.
  for (const auto& cl : part.clients) {
    std::vector<double> counts(4, 0);
    for (auto i : cl) counts[ds.y[i]]++;
    double n = double(cl.size());
    double mean = n / 4, sigma = std::sqrt(n * 0.25 * 0.75);
    for (double v : counts) {
      CHECK(std::fabs(v - mean) <= 4 * sigma + 1);
    }
  }

  CHECK(code_of([&] { partition_iid(pool, 0, 1); }) == Errc::invalid_argument);
  std::vector<uint32_t> tiny{1, 2, 3};
  CHECK(code_of([&] { partition_iid(tiny, 4, 1); }) == Errc::invalid_argument);
}

TEST_CASE("dirichlet partition concentrates at small alpha, flattens at large") {
  auto ds = generate_dataset(4, 16, 2000, 1.0, 11);
  std::vector<uint32_t> pool(ds.size());
  for (uint32_t i = 0; i < ds.size(); ++i) pool[i] = i;

  auto skew = partition_dirichlet(ds, pool, 10, 0.1, 5);
  std::vector<uint32_t> all;
  double mean_top = 0;
  for (const auto& cl : skew.clients) {
    REQUIRE(!cl.empty());
    all.insert(all.end(), cl.begin(), cl.end());
    std::vector<double> counts(4, 0);
    for (auto i : cl) counts[ds.y[i]]++;
    mean_top += *std::max_element(counts.begin(), counts.end()) /
                double(cl.size());
  }
  mean_top /= double(skew.clients.size());
  std::sort(all.begin(), all.end());
  CHECK(all == pool);
  CHECK(mean_top >= 0.6);  // most clients dominated by one class

  auto flat = partition_dirichlet(ds, pool, 10, 1e6, 5);
  double worst_dev = 0;
  for (const auto& cl : flat.clients) {
    REQUIRE(!cl.empty());
    std::vector<double> counts(4, 0);
    for (auto i : cl) counts[ds.y[i]]++;
    for (double v : counts) {
      worst_dev = std::max(worst_dev,
                           std::fabs(v / double(cl.size()) - 0.25));
    }
  }
  CHECK(worst_dev <= 0.1);  // huge alpha looks like iid

  // A pool barely larger than the client count forces the repair path.
  std::vector<uint32_t> small(pool.begin(), pool.begin() + 12);
  auto repaired = partition_dirichlet(ds, small, 10, 0.05, 9);
  for (const auto& cl : repaired.clients) CHECK(!cl.empty());

  CHECK(code_of([&] { partition_dirichlet(ds, pool, 10, 0.0, 1); }) ==
        Errc::invalid_argument);
  CHECK(code_of([&] { partition_dirichlet(ds, pool, 10, -1.0, 1); }) ==
        Errc::invalid_argument);
}

TEST_CASE("stratified split holds out one fifth of every class") {
  auto ds = generate_dataset(4, 16, 1000, 1.0, 13);
  auto [train, test] = stratified_split(ds, 0.2, 3);
  CHECK(train.size() + test.size() == ds.size());
  std::vector<int> tc(4, 0);
  for (auto i : test) tc[ds.y[i]]++;
  for (int v : tc) CHECK(v == 50);
  std::set<uint32_t> seen(train.begin(), train.end());
  for (auto i : test) CHECK(seen.count(i) == 0);
}

TEST_CASE("analytic gradients match central finite differences") {
  // Ten random coordinates per seed, ten seeds; relative error below 1e-4.
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto ds = generate_dataset(4, 8, 64, 1.0, derive_seed(seed, "gc-data"));
    std::vector<uint32_t> batch(16);
    for (uint32_t i = 0; i < 16; ++i) batch[i] = i;
    TinyModel m = TinyModel::init(8, 6, 4, derive_seed(seed, "gc-model"));
    auto g = gradient(m, ds, batch);

    Rng rng(derive_seed(seed, "gc-coords"));
    for (int t = 0; t < 10; ++t) {
      size_t j = size_t(rng.below(m.w.size()));
      double h = 1e-6 * std::max(1.0, std::fabs(m.w[j]));
      TinyModel up = m, dn = m;
      up.w[j] += h;
      dn.w[j] -= h;
      double fd = (mean_loss(up, ds, batch) - mean_loss(dn, ds, batch)) /
                  (2 * h);
      double rel = std::fabs(g[j] - fd) /
                   std::max({std::fabs(g[j]), std::fabs(fd), 1e-6});
      CHECK(rel <= 1e-4);
    }
  }
}

TEST_CASE("local training reduces loss and is seed-deterministic") {
  auto ds = generate_dataset(4, 16, 400, 1.25, 21);
  std::vector<uint32_t> shard(200);
  for (uint32_t i = 0; i < 200; ++i) shard[i] = i;
  TinyModel m = TinyModel::init(16, 32, 4, 77);
  CHECK(m.dim() == 16 * 32 + 32 + 32 * 4 + 4);

  auto zero = local_train(m, ds, shard, 0, 0.05, 32, 1);
  CHECK(zero.w == m.w);  // no epochs, no change

  double before = mean_loss(m, ds, shard);
  auto a = local_train(m, ds, shard, 2, 0.05, 32, 1);
  CHECK(mean_loss(a, ds, shard) < before);

  auto b = local_train(m, ds, shard, 2, 0.05, 32, 1);
  CHECK(a.w == b.w);
  auto c = local_train(m, ds, shard, 2, 0.05, 32, 2);
  CHECK(a.w != c.w);

  CHECK(code_of([&] { local_train(m, ds, shard, 1, 0.0, 32, 1); }) ==
        Errc::invalid_argument);
  CHECK(code_of([&] { local_train(m, ds, shard, 1, 0.05, 0, 1); }) ==
        Errc::invalid_argument);
}

TEST_CASE("encrypted aggregation tracks the clustered-plaintext path") {
  ExperimentConfig c = small_config();
  c.mode = Mode::enccluster;
  auto enc = run_experiment(c);
  c.mode = Mode::fedavg_wc;
  auto wc = run_experiment(c);

  double tol = 2.0 * c.clients / double(1u << c.fraction_bits);
  CHECK(worst_abs_diff(enc.final_weights, wc.final_weights) <= tol);
  for (size_t r = 0; r < enc.rounds.size(); ++r) {
    CHECK(enc.rounds[r].accuracy == doctest::Approx(wc.rounds[r].accuracy));
    CHECK(enc.rounds[r].mapping_mismatch_rate == 0.0);
  }
  CHECK(enc.rounds[0].uplink_bytes > 0);
  CHECK(enc.rounds[0].ratio_vs_fedavg > 0);
}

TEST_CASE("one cluster per weight reproduces plain federated averaging") {
  ExperimentConfig c = small_config();
  c.mode = Mode::fedavg;
  auto plain = run_experiment(c);
  c.mode = Mode::enccluster;
  c.kappa = uint32_t(plain.final_weights.size());
  auto enc = run_experiment(c);
  double tol = 2.0 * c.clients / double(1u << c.fraction_bits);
  CHECK(worst_abs_diff(enc.final_weights, plain.final_weights) <= tol);
}

TEST_CASE("huffman mapping variant agrees with the filter variant") {
  ExperimentConfig c = small_config();
  c.mode = Mode::enccluster_nobf;
  auto nobf = run_experiment(c);
  c.mode = Mode::fedavg_wc;
  auto wc = run_experiment(c);
  double tol = 2.0 * c.clients / double(1u << c.fraction_bits);
  CHECK(worst_abs_diff(nobf.final_weights, wc.final_weights) <= tol);
  CHECK(nobf.rounds[0].mapping_mismatch_rate == 0.0);
  // Lossless mapping code beats the 32-bit-per-entry filter here.
  c.mode = Mode::enccluster;
  auto bf = run_experiment(c);
  CHECK(nobf.rounds[0].uplink_bytes < bf.rounds[0].uplink_bytes);
}

TEST_CASE("partial participation samples fresh cohorts deterministically") {
  ExperimentConfig c = small_config();
  c.clients = 5;
  c.participation = 0.6;
  c.rounds = 3;
  c.kappa = 8;
  c.mode = Mode::enccluster;
  auto a = run_experiment(c);
  auto b = run_experiment(c);
  CHECK(a.final_weights == b.final_weights);
  for (size_t r = 0; r < a.rounds.size(); ++r) {
    CHECK(a.rounds[r].accuracy == b.rounds[r].accuracy);
    CHECK(a.rounds[r].uplink_bytes == b.rounds[r].uplink_bytes);
  }

  c.seed = 99;
  auto other = run_experiment(c);
  CHECK(a.final_weights != other.final_weights);
}

TEST_CASE("config validation rejects undersized cohorts and bad modes") {
  ExperimentConfig c = small_config();
  c.participation = 0.0;
  CHECK(code_of([&] { run_experiment(c); }) == Errc::invalid_argument);
  c.participation = 1.5;
  CHECK(code_of([&] { run_experiment(c); }) == Errc::invalid_argument);
  c = small_config();
  c.clients = 30;
  c.samples = 600;
  c.participation = 0.03;  // cohort of one
  CHECK(code_of([&] { run_experiment(c); }) == Errc::invalid_argument);

  CHECK(mode_from_name("fedavg") == Mode::fedavg);
  CHECK(mode_from_name("fedavg_wc") == Mode::fedavg_wc);
  CHECK(mode_from_name("enccluster") == Mode::enccluster);
  CHECK(mode_from_name("enccluster_nobf") == Mode::enccluster_nobf);
  CHECK(code_of([] { mode_from_name("bogus"); }) == Errc::invalid_argument);
  for (Mode m : {Mode::fedavg, Mode::fedavg_wc, Mode::enccluster,
                 Mode::enccluster_nobf}) {
    CHECK(mode_from_name(mode_name(m)) == m);
  }
}

TEST_CASE("skewed partitions slow convergence on a fixed seed") {
  ExperimentConfig c;
  c.clients = 10;
  c.rounds = 30;
  c.epochs = 5;
  c.mode = Mode::fedavg;
  c.seed = 6;
  auto iid = run_experiment(c);
  c.iid = false;
  c.alpha = 0.1;
  auto skew = run_experiment(c);

  auto rounds_to = [](const ExperimentMetrics& m, double th) {
    for (size_t i = 0; i < m.rounds.size(); ++i) {
      if (m.rounds[i].accuracy >= th) return int(i);
    }
    return int(m.rounds.size());
  };
  int a = rounds_to(iid, 0.85);
  int b = rounds_to(skew, 0.85);
  CHECK(a < int(iid.rounds.size()));   // iid reaches the bar
  CHECK(b < int(skew.rounds.size()));  // skewed run still completes
  CHECK(b > a);
}

TEST_CASE("metrics csv carries the config header and one row per round") {
  ExperimentConfig c = small_config();
  c.mode = Mode::fedavg;
  auto m = run_experiment(c);
  auto csv = m.to_csv();
  CHECK(csv.find("# clients=3 rounds=2") != std::string::npos);
  CHECK(csv.find("mode=fedavg") != std::string::npos);
  CHECK(csv.find("seed=1") != std::string::npos);
  size_t rows = 0;
  for (char ch : csv) {
    if (ch == '\n') rows++;
  }
  // 4 header comments + 1 column line + R rows
  CHECK(rows == 4 + 1 + c.rounds);
  auto bare = m.to_csv(false);
  CHECK(bare.find('#') == std::string::npos);

  auto again = run_experiment(c);
  CHECK(again.to_csv() == csv);  // fedavg rows carry no live timings
}
