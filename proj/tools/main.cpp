// Copyright 2026 The enccluster Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end.
//
//   simulate       run the federated harness, write per-round metrics CSV
//   bench-encrypt  clustered encryption + filter build vs direct encryption
//   bench-filter   filter construction and lookup timing
//   attack-eval    paired estimation-attack errors, mixed vs skewed data
//   bound-check    per-trial Monte-Carlo error against the analytic bounds
//
// Exit codes: 0 success, 2 usage (bad flags or sizes), 3 runtime failure.
// Every file written here starts with "# key=value" lines carrying the
// resolved configuration and master seed; reruns with the same header
// reproduce the file except for wall-clock columns. Files are published
// atomically (temp file in the target directory, then rename).

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "enccluster/clustering.hpp"
#include "enccluster/dmcfe.hpp"
#include "enccluster/errors.hpp"
#include "enccluster/fl_harness.hpp"
#include "enccluster/fuse_filter.hpp"
#include "enccluster/privacy_eval.hpp"
#include "enccluster/rng.hpp"

namespace {

namespace fl = enccluster::fl;
namespace privacy = enccluster::privacy;
using enccluster::derive_seed;
using enccluster::Errc;
using enccluster::Rng;
using nlohmann::ordered_json;

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    enccluster::require(out.good(), Errc::io_error,
                        "cannot open " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    enccluster::require(out.good(), Errc::io_error,
                        "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    enccluster::fail(Errc::io_error,
                     "cannot publish " + path + ": " + ec.message());
  }
}

// Empty path or "-" streams to stdout instead of a file.
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
  } else {
    write_atomic(path, content);
  }
}

struct TimingStats {
  double median_ms = 0;
  double p10_ms = 0;
  double p90_ms = 0;
};

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  double pos = q * double(sorted.size() - 1);
  size_t lo = size_t(pos);
  double frac = pos - double(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// One untimed warm-up, then `repeats` timed runs on the monotonic clock.
template <typename F>
TimingStats time_runs(uint32_t repeats, F&& body) {
  using clock = std::chrono::steady_clock;
  body();
  std::vector<double> ms;
  ms.reserve(repeats);
  for (uint32_t i = 0; i < repeats; ++i) {
    auto t0 = clock::now();
    body();
    auto t1 = clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return {percentile(ms, 0.5), percentile(ms, 0.1), percentile(ms, 0.9)};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  fl::ExperimentConfig cfg;
  std::string mode = "enccluster";
  double alpha = 0.1;
  std::string out = "metrics.csv";
};

void run_simulate(SimulateArgs& a, bool dirichlet_given) {
  a.cfg.mode = fl::mode_from_name(a.mode);
  if (dirichlet_given) {
    a.cfg.iid = false;
    a.cfg.alpha = a.alpha;
  }
  // Large baby-step table: harness aggregates reach samples * 2^q, and the
  // recovery walk dominates round latency with a small one.
  a.cfg.dlog_baby_steps = 1u << 20;
  fl::ExperimentMetrics metrics = fl::run_experiment(a.cfg);
  emit(a.out, metrics.to_csv(true));
  if (!a.out.empty() && a.out != "-") {
    std::printf("wrote %s: %u rounds, final accuracy %.4f\n", a.out.c_str(),
                a.cfg.rounds, metrics.final_accuracy);
  }
}

// ----------------------------------------------------------- bench-encrypt

struct BenchEncryptArgs {
  uint32_t clusters = 128;
  unsigned key_size = 256;
  uint64_t dims = 100000;
  uint32_t repeat = 5;
  uint64_t seed = 1;
  std::string out;
};

void run_bench_encrypt(const BenchEncryptArgs& a) {
  enccluster::require(a.clusters >= 1, Errc::invalid_argument,
                      "need at least one cluster");
  enccluster::require(a.dims >= 1, Errc::invalid_argument,
                      "need at least one dimension");
  enccluster::require(a.repeat >= 1, Errc::invalid_argument,
                      "need at least one repeat");

  // Two-party session; only client 0's encryption work is timed, which is
  // what one participant spends per round.
  enccluster::dmcfe::Bounds b;
  b.slot = int64_t(1) << 12;
  b.aggregate = int64_t(1) << 40;
  b.y_max = 1;
  auto pp = enccluster::dmcfe::setup(a.key_size, 2,
                                     derive_seed(a.seed, "session"), b);
  enccluster::dmcfe::SetupTranscript tr(pp);
  auto kp = enccluster::dmcfe::keygen(pp, 0, tr);

  Rng rng(derive_seed(a.seed, "values"));
  std::vector<int64_t> centroids(a.clusters);
  for (auto& v : centroids) v = int64_t(rng.below(2049)) - 1024;
  std::vector<int64_t> direct(a.dims);
  for (auto& v : direct) v = int64_t(rng.below(2049)) - 1024;
  std::vector<enccluster::fuse::FilterKey> keys(a.dims);
  for (uint64_t i = 0; i < a.dims; ++i) {
    keys[i] = {i, uint32_t(i % a.clusters)};
  }
  const std::array<uint8_t, 8> label{};
  const uint64_t filter_seed = derive_seed(a.seed, "filter");

  uint64_t sink = 0;
  auto clustered = time_runs(a.repeat, [&] {
    auto ct = enccluster::dmcfe::encrypt(pp, kp, centroids, label);
    auto f = enccluster::fuse::FuseFilter::build(keys, 8, 3, filter_seed);
    sink += ct.slot_count() + f.key_count();
  });
  auto filter_only = time_runs(a.repeat, [&] {
    auto f = enccluster::fuse::FuseFilter::build(keys, 8, 3, filter_seed);
    sink += f.slot_count();
  });
  auto direct_enc = time_runs(a.repeat, [&] {
    auto ct = enccluster::dmcfe::encrypt(pp, kp, direct, label);
    sink += ct.slot_count();
  });

  volatile uint64_t guard = sink;
  (void)guard;

  ordered_json j;
  j["config"] = {{"subcommand", "bench-encrypt"}, {"clusters", a.clusters},
                 {"key_size", pp.size_bits()},    {"dims", a.dims},
                 {"repeat", a.repeat},            {"seed", a.seed},
                 {"filter_bits", 8},              {"filter_arity", 3}};
  j["median_ms"] = clustered.median_ms;
  j["p10_ms"] = clustered.p10_ms;
  j["p90_ms"] = clustered.p90_ms;
  j["filter_median_ms"] = filter_only.median_ms;
  j["filter_ns_per_key"] = filter_only.median_ms * 1e6 / double(a.dims);
  j["direct_median_ms"] = direct_enc.median_ms;
  j["direct_p10_ms"] = direct_enc.p10_ms;
  j["direct_p90_ms"] = direct_enc.p90_ms;
  j["ratio"] = direct_enc.median_ms / clustered.median_ms;
  emit(a.out, j.dump(2) + "\n");
}

// ------------------------------------------------------------ bench-filter

struct BenchFilterArgs {
  uint64_t dims = 100000;
  uint32_t bpe = 8;
  uint32_t arity = 3;
  uint32_t repeat = 5;
  uint64_t seed = 1;
  std::string out;
};

void run_bench_filter(const BenchFilterArgs& a) {
  enccluster::require(a.dims >= 1, Errc::invalid_argument,
                      "need at least one key");
  enccluster::require(a.repeat >= 1, Errc::invalid_argument,
                      "need at least one repeat");

  Rng rng(derive_seed(a.seed, "keys"));
  std::vector<enccluster::fuse::FilterKey> keys(a.dims);
  for (uint64_t i = 0; i < a.dims; ++i) {
    keys[i] = {i, uint32_t(rng.below(4096))};
  }
  const uint64_t filter_seed = derive_seed(a.seed, "filter");

  uint64_t sink = 0;
  auto build = time_runs(a.repeat, [&] {
    auto f = enccluster::fuse::FuseFilter::build(keys, a.bpe, a.arity,
                                                 filter_seed);
    sink += f.slot_count();
  });

  auto f = enccluster::fuse::FuseFilter::build(keys, a.bpe, a.arity,
                                               filter_seed);
  auto query = time_runs(a.repeat, [&] {
    uint64_t hits = 0;
    for (uint64_t i = 0; i < a.dims; ++i) {
      hits += f.member(a.dims + i, uint32_t(i % 4096)) ? 1 : 0;
    }
    sink += hits;
  });

  volatile uint64_t guard = sink;
  (void)guard;

  ordered_json j;
  j["config"] = {{"subcommand", "bench-filter"}, {"dims", a.dims},
                 {"bpe", a.bpe},                 {"arity", a.arity},
                 {"repeat", a.repeat},           {"seed", a.seed}};
  j["median_ms"] = build.median_ms;
  j["p10_ms"] = build.p10_ms;
  j["p90_ms"] = build.p90_ms;
  j["build_ns_per_key"] = build.median_ms * 1e6 / double(a.dims);
  j["query_median_ms"] = query.median_ms;
  j["query_ns_per_key"] = query.median_ms * 1e6 / double(a.dims);
  j["filter_bytes"] = f.byte_size();
  j["bits_per_key"] = f.bits_per_key();
  j["ratio"] = f.bits_per_key() / double(a.bpe);
  emit(a.out, j.dump(2) + "\n");
}

// ------------------------------------------------------------- attack-eval

struct AttackEvalArgs {
  uint32_t seeds = 20;
  uint32_t kappa = 32;
  std::string setting = "both";
  uint64_t seed = 1;
  std::string out = "attack_eval.csv";
};

void run_attack_eval(const AttackEvalArgs& a) {
  auto pairs = privacy::attack_ordering_experiment(a.seeds, a.kappa, a.seed);

  char buf[256];
  std::string body;
  snprintf(buf, sizeof buf,
           "# subcommand=attack-eval seeds=%u kappa=%u setting=%s seed=%llu\n",
           a.seeds, a.kappa, a.setting.c_str(), (unsigned long long)a.seed);
  body += buf;
  if (a.setting == "both") {
    body += privacy::attack_pairs_csv(pairs);
  } else {
    const bool iid = a.setting == "iid";
    body += "seed,mse,d_inter\n";
    for (const auto& p : pairs) {
      snprintf(buf, sizeof buf, "%llu,%.9g,%.9g\n", (unsigned long long)p.seed,
               iid ? p.iid_mse : p.noniid_mse,
               iid ? p.iid_d_inter : p.noniid_d_inter);
      body += buf;
    }
  }
  emit(a.out, body);

  if (a.setting == "both") {
    uint32_t wins = 0;
    for (const auto& p : pairs) {
      if (p.noniid_mse > p.iid_mse) wins++;
    }
    std::printf("skewed attack error above mixed in %u/%u pairs, "
                "one-sided sign test p=%.6g\n",
                wins, a.seeds, privacy::sign_test_pvalue(wins, a.seeds));
  }
  if (!a.out.empty() && a.out != "-") {
    std::printf("wrote %s\n", a.out.c_str());
  }
}

// ------------------------------------------------------------- bound-check

struct BoundCheckArgs {
  uint32_t trials = 100;
  uint32_t kappa = 16;
  uint32_t bpe = 8;
  uint64_t dims = 10000;
  uint32_t clients = 4;
  std::string setting = "both";
  uint64_t seed = 1;
  std::string out = "bound_check.csv";
};

void run_bound_check(const BoundCheckArgs& a) {
  enccluster::require(a.trials >= 1, Errc::invalid_argument,
                      "need at least one trial");
  enccluster::require(a.dims >= 1, Errc::invalid_argument,
                      "need at least one dimension");
  enccluster::require(a.clients >= 2, Errc::invalid_argument,
                      "need at least two clients for the aggregate bound");

  const bool want_single = a.setting == "both" || a.setting == "single";
  const bool want_aggregate = a.setting == "both" || a.setting == "aggregate";

  std::vector<privacy::ClientClustering> cohort(a.clients);
  for (uint32_t i = 0; i < a.clients; ++i) {
    Rng r(derive_seed(a.seed, "weights", i));
    cohort[i].weights.resize(a.dims);
    for (auto& w : cohort[i].weights) w = r.uniform();
    cohort[i].model = enccluster::clustering::cluster_weights(
        cohort[i].weights, a.kappa, derive_seed(a.seed, "cluster", i), 100);
  }

  char buf[256];
  std::string body;
  snprintf(buf, sizeof buf,
           "# subcommand=bound-check trials=%u kappa=%u bpe=%u dims=%llu "
           "clients=%u setting=%s seed=%llu\n",
           a.trials, a.kappa, a.bpe, (unsigned long long)a.dims, a.clients,
           a.setting.c_str(), (unsigned long long)a.seed);
  body += buf;
  body += "trial,setting,dim,clients,kappa,bpe,bound,empirical,ok\n";

  uint32_t single_ok = 0;
  uint32_t aggregate_ok = 0;
  if (want_single) {
    for (uint32_t t = 0; t < a.trials; ++t) {
      auto r = privacy::estimation_error_bound(cohort[0].weights,
                                               cohort[0].model, a.bpe, 1,
                                               derive_seed(a.seed, "trial", t));
      bool ok = r.empirical_mean >= r.bound;
      single_ok += ok ? 1 : 0;
      snprintf(buf, sizeof buf, "%u,single,%llu,1,%u,%u,%.9g,%.9g,%d\n", t,
               (unsigned long long)a.dims, a.kappa, a.bpe, r.bound,
               r.empirical_mean, ok ? 1 : 0);
      body += buf;
    }
  }
  if (want_aggregate) {
    for (uint32_t t = 0; t < a.trials; ++t) {
      auto r = privacy::aggregate_error_bound(
          cohort, a.bpe, 1, derive_seed(a.seed, "agg-trial", t));
      bool ok = r.empirical_mean >= r.bound;
      aggregate_ok += ok ? 1 : 0;
      snprintf(buf, sizeof buf, "%u,aggregate,%llu,%u,%u,%u,%.9g,%.9g,%d\n", t,
               (unsigned long long)a.dims, a.clients, a.kappa, a.bpe, r.bound,
               r.empirical_mean, ok ? 1 : 0);
      body += buf;
    }
  }
  emit(a.out, body);

  if (want_single) {
    std::printf("single: %u/%u trials with empirical >= bound\n", single_ok,
                a.trials);
  }
  if (want_aggregate) {
    std::printf("aggregate: %u/%u trials with empirical >= bound\n",
                aggregate_ok, a.trials);
  }
  if (!a.out.empty() && a.out != "-") {
    std::printf("wrote %s\n", a.out.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"enccluster: clustered, encrypted federated aggregation"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand(
      "simulate", "run a federated experiment and write per-round metrics");
  sim->add_option("--clients", sim_args.cfg.clients, "client count")
      ->capture_default_str();
  sim->add_option("--rounds", sim_args.cfg.rounds, "federated rounds")
      ->capture_default_str();
  sim->add_option("--epochs", sim_args.cfg.epochs, "local epochs per round")
      ->capture_default_str();
  sim->add_option("--participation", sim_args.cfg.participation,
                  "fraction of clients drawn each round")
      ->capture_default_str();
  sim->add_option("--clusters", sim_args.cfg.kappa, "codebook size")
      ->capture_default_str();
  sim->add_option("--bpe", sim_args.cfg.bpe, "filter bits per entry")
      ->capture_default_str();
  sim->add_option("--key-size", sim_args.cfg.key_size,
                  "group width in bits, snaps down to a supported size")
      ->capture_default_str();
  auto* dirichlet = sim->add_option("--dirichlet", sim_args.alpha,
                                    "skewed split with this concentration");
  auto* iid = sim->add_flag("--iid", "evenly mixed split (default)");
  dirichlet->excludes(iid);
  iid->excludes(dirichlet);
  sim->add_option("--mode", sim_args.mode, "aggregation pipeline")
      ->check(CLI::IsMember(
          {"fedavg", "fedavg_wc", "enccluster", "enccluster_nobf"}))
      ->capture_default_str();
  sim->add_option("--seed", sim_args.cfg.seed, "master seed")
      ->capture_default_str();
  sim->add_option("--out", sim_args.out, "metrics CSV path, - for stdout")
      ->capture_default_str();
  sim->callback(
      [&] { run_simulate(sim_args, dirichlet->count() > 0); });

  BenchEncryptArgs be_args;
  auto* be = app.add_subcommand(
      "bench-encrypt",
      "time clustered encryption plus filter build against direct encryption");
  be->add_option("--clusters", be_args.clusters, "codebook size")
      ->capture_default_str();
  be->add_option("--key-size", be_args.key_size, "group width in bits")
      ->capture_default_str();
  be->add_option("--dims", be_args.dims, "weight-vector length")
      ->capture_default_str();
  be->add_option("--repeat", be_args.repeat, "timed repeats after one warm-up")
      ->capture_default_str();
  be->add_option("--seed", be_args.seed, "master seed")->capture_default_str();
  be->add_option("--out", be_args.out, "JSON path, stdout if omitted");
  be->callback([&] { run_bench_encrypt(be_args); });

  BenchFilterArgs bf_args;
  auto* bf = app.add_subcommand("bench-filter",
                                "time filter construction and lookups");
  bf->add_option("--dims", bf_args.dims, "key count")->capture_default_str();
  bf->add_option("--bpe", bf_args.bpe, "bits per entry")
      ->capture_default_str();
  bf->add_option("--arity", bf_args.arity, "hashes per key, 3 or 4")
      ->capture_default_str();
  bf->add_option("--repeat", bf_args.repeat, "timed repeats after one warm-up")
      ->capture_default_str();
  bf->add_option("--seed", bf_args.seed, "master seed")->capture_default_str();
  bf->add_option("--out", bf_args.out, "JSON path, stdout if omitted");
  bf->callback([&] { run_bench_filter(bf_args); });

  AttackEvalArgs ae_args;
  auto* ae = app.add_subcommand(
      "attack-eval", "paired estimation-attack errors on trained cohorts");
  ae->add_option("--seeds", ae_args.seeds, "paired seeds to run")
      ->capture_default_str();
  ae->add_option("--kappa", ae_args.kappa, "attack codebook size")
      ->capture_default_str();
  ae->add_option("--setting", ae_args.setting, "which partitions to report")
      ->check(CLI::IsMember({"iid", "noniid", "both"}))
      ->capture_default_str();
  ae->add_option("--seed", ae_args.seed, "master seed")->capture_default_str();
  ae->add_option("--out", ae_args.out, "CSV path, - for stdout")
      ->capture_default_str();
  ae->callback([&] { run_attack_eval(ae_args); });

  BoundCheckArgs bc_args;
  auto* bc = app.add_subcommand(
      "bound-check", "Monte-Carlo estimation error against analytic bounds");
  bc->add_option("--trials", bc_args.trials, "Monte-Carlo trials per setting")
      ->capture_default_str();
  bc->add_option("--kappa", bc_args.kappa, "codebook size")
      ->capture_default_str();
  bc->add_option("--bpe", bc_args.bpe, "filter bits per entry")
      ->capture_default_str();
  bc->add_option("--dims", bc_args.dims, "weight-vector length")
      ->capture_default_str();
  bc->add_option("--clients", bc_args.clients, "cohort size for the aggregate")
      ->capture_default_str();
  bc->add_option("--setting", bc_args.setting, "single, aggregate, or both")
      ->check(CLI::IsMember({"single", "aggregate", "both"}))
      ->capture_default_str();
  bc->add_option("--seed", bc_args.seed, "master seed")->capture_default_str();
  bc->add_option("--out", bc_args.out, "CSV path, - for stdout")
      ->capture_default_str();
  bc->callback([&] { run_bound_check(bc_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const enccluster::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::invalid_argument ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
