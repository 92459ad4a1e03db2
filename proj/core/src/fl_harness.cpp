// SPDX-License-Identifier: Apache-2.0
#include "enccluster/fl_harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "enccluster/clustering.hpp"
#include "enccluster/dmcfe.hpp"
#include "enccluster/errors.hpp"
#include "enccluster/protocol.hpp"
#include "enccluster/rng.hpp"

namespace enccluster::fl {

using protocol::AggregateResult;
using protocol::ClientUpdate;
using protocol::CommunicationLedger;
using protocol::FixedPointCodec;
using protocol::RoundMessage;
using protocol::UpdateOptions;
using protocol::account_round;
using protocol::client_prepare_update;
using protocol::message_from_bytes;
using protocol::message_to_bytes;
using protocol::secure_aggregate;

namespace {

void shuffle_u32(std::vector<uint32_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

double now_ms() {
  auto t = std::chrono::steady_clock::now().time_since_epoch();
  return std::chrono::duration<double, std::milli>(t).count();
}

}  // namespace

SyntheticDataset generate_dataset(uint32_t classes, uint32_t features,
                                  uint32_t samples, double spread,
                                  uint64_t seed) {
  require(classes >= 2, Errc::invalid_argument, "need at least two classes");
  require(features >= classes, Errc::invalid_argument,
          "need features >= classes");
  require(samples >= classes, Errc::invalid_argument,
          "need at least one sample per class");
  require(spread >= 0 && std::isfinite(spread), Errc::invalid_argument,
          "spread must be finite and non-negative");

  // Class means: random directions pushed to a fixed radius. Distinct seeds
  // per class keep the construction stable if geometry changes.
  constexpr double kRadius = 3.0;
  std::vector<double> means(size_t(classes) * features);
  for (uint32_t c = 0; c < classes; ++c) {
    Rng rng(derive_seed(seed, "class-mean", c));
    double norm2 = 0;
    for (uint32_t f = 0; f < features; ++f) {
      double v = rng.normal();
      means[size_t(c) * features + f] = v;
      norm2 += v * v;
    }
    double scale = kRadius / std::sqrt(std::max(norm2, 1e-12));
    for (uint32_t f = 0; f < features; ++f) {
      means[size_t(c) * features + f] *= scale;
    }
  }

  SyntheticDataset ds;
  ds.classes = classes;
  ds.features = features;
  ds.x.resize(size_t(samples) * features);
  ds.y.resize(samples);
  Rng noise(derive_seed(seed, "sample-noise"));
  for (uint32_t i = 0; i < samples; ++i) {
    uint32_t c = i % classes;  // balanced up to one extra per class
    ds.y[i] = c;
    for (uint32_t f = 0; f < features; ++f) {
      ds.x[size_t(i) * features + f] =
          means[size_t(c) * features + f] + spread * noise.normal();
    }
  }
  return ds;
}

Partition partition_iid(std::span<const uint32_t> pool, uint32_t clients,
                        uint64_t seed) {
  require(clients >= 1, Errc::invalid_argument, "need at least one client");
  require(pool.size() >= clients, Errc::invalid_argument,
          "fewer samples than clients");
  std::vector<uint32_t> order(pool.begin(), pool.end());
  Rng rng(derive_seed(seed, "iid-shuffle"));
  shuffle_u32(order, rng);

  Partition part;
  part.clients.resize(clients);
  size_t base = order.size() / clients;
  size_t extra = order.size() % clients;
  size_t at = 0;
  for (uint32_t k = 0; k < clients; ++k) {
    size_t take = base + (k < extra ? 1 : 0);
    part.clients[k].assign(order.begin() + at, order.begin() + at + take);
    at += take;
  }
  return part;
}

Partition partition_dirichlet(const SyntheticDataset& ds,
                              std::span<const uint32_t> pool, uint32_t clients,
                              double alpha, uint64_t seed) {
  require(clients >= 1, Errc::invalid_argument, "need at least one client");
  require(pool.size() >= clients, Errc::invalid_argument,
          "fewer samples than clients");
  require(alpha > 0 && std::isfinite(alpha), Errc::invalid_argument,
          "alpha must be positive");

  Partition part;
  part.clients.resize(clients);
  Rng rng(derive_seed(seed, "dirichlet"));
  for (uint32_t c = 0; c < ds.classes; ++c) {
    std::vector<uint32_t> members;
    for (uint32_t i : pool) {
      if (ds.y[i] == c) members.push_back(i);
    }
    if (members.empty()) continue;
    shuffle_u32(members, rng);

    std::vector<double> prop(clients);
    double sum = 0;
    for (auto& p : prop) {
      p = rng.gamma(alpha);
      sum += p;
    }
    if (sum <= 0) {
      std::fill(prop.begin(), prop.end(), 1.0);
      sum = double(clients);
    }

    // Largest-remainder rounding so the class is fully assigned.
    size_t n = members.size();
    std::vector<size_t> count(clients);
    std::vector<std::pair<double, uint32_t>> frac(clients);
    size_t assigned = 0;
    for (uint32_t k = 0; k < clients; ++k) {
      double target = double(n) * prop[k] / sum;
      count[k] = size_t(target);
      assigned += count[k];
      frac[k] = {target - double(count[k]), k};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (size_t r = 0; assigned < n; ++r, ++assigned) {
      count[frac[r % clients].second]++;
    }
    size_t at = 0;
    for (uint32_t k = 0; k < clients; ++k) {
      part.clients[k].insert(part.clients[k].end(), members.begin() + at,
                             members.begin() + at + count[k]);
      at += count[k];
    }
  }

  // Repair: an empty client takes one sample from the currently largest.
  for (uint32_t k = 0; k < clients; ++k) {
    if (!part.clients[k].empty()) continue;
    uint32_t big = 0;
    for (uint32_t j = 1; j < clients; ++j) {
      if (part.clients[j].size() > part.clients[big].size()) big = j;
    }
    require(part.clients[big].size() >= 2, Errc::invalid_argument,
            "not enough samples to give every client one");
    part.clients[k].push_back(part.clients[big].back());
    part.clients[big].pop_back();
  }
  return part;
}

std::pair<std::vector<uint32_t>, std::vector<uint32_t>> stratified_split(
    const SyntheticDataset& ds, double test_fraction, uint64_t seed) {
  require(test_fraction > 0 && test_fraction < 1, Errc::invalid_argument,
          "test fraction must lie in (0, 1)");
  std::vector<uint32_t> train, test;
  Rng rng(derive_seed(seed, "split"));
  for (uint32_t c = 0; c < ds.classes; ++c) {
    std::vector<uint32_t> members;
    for (uint32_t i = 0; i < ds.size(); ++i) {
      if (ds.y[i] == c) members.push_back(i);
    }
    shuffle_u32(members, rng);
    size_t take = size_t(test_fraction * double(members.size()));
    if (take == 0 && members.size() >= 2) take = 1;
    test.insert(test.end(), members.begin(), members.begin() + take);
    train.insert(train.end(), members.begin() + take, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

TinyModel TinyModel::init(uint32_t in, uint32_t hidden, uint32_t classes,
                          uint64_t seed) {
  require(in >= 1 && hidden >= 1 && classes >= 2, Errc::invalid_argument,
          "degenerate model shape");
  TinyModel m;
  m.in = in;
  m.hidden = hidden;
  m.classes = classes;
  m.w.assign(size_t(in) * hidden + hidden + size_t(hidden) * classes + classes,
             0.0);
  Rng rng(derive_seed(seed, "model-init"));
  double s1 = std::sqrt(1.0 / double(in));
  double s2 = std::sqrt(1.0 / double(hidden));
  size_t at = 0;
  for (size_t i = 0; i < size_t(in) * hidden; ++i) m.w[at++] = s1 * rng.normal();
  at += hidden;  // hidden bias stays zero
  for (size_t i = 0; i < size_t(hidden) * classes; ++i) {
    m.w[at++] = s2 * rng.normal();
  }
  return m;
}

namespace {

// Weight layout offsets.
struct Off {
  size_t w1, b1, w2, b2;
};
Off offsets(const TinyModel& m) {
  size_t w1 = 0;
  size_t b1 = w1 + size_t(m.in) * m.hidden;
  size_t w2 = b1 + m.hidden;
  size_t b2 = w2 + size_t(m.hidden) * m.classes;
  return {w1, b1, w2, b2};
}

void forward(const TinyModel& m, std::span<const double> x,
             std::vector<double>& hid, std::vector<double>& out) {
  const Off o = offsets(m);
  hid.assign(m.hidden, 0.0);
  for (uint32_t i = 0; i < m.in; ++i) {
    double xi = x[i];
    const double* row = m.w.data() + o.w1 + size_t(i) * m.hidden;
    for (uint32_t j = 0; j < m.hidden; ++j) hid[j] += xi * row[j];
  }
  for (uint32_t j = 0; j < m.hidden; ++j) {
    hid[j] = std::tanh(hid[j] + m.w[o.b1 + j]);
  }
  out.assign(m.classes, 0.0);
  for (uint32_t j = 0; j < m.hidden; ++j) {
    double hj = hid[j];
    const double* row = m.w.data() + o.w2 + size_t(j) * m.classes;
    for (uint32_t k = 0; k < m.classes; ++k) out[k] += hj * row[k];
  }
  for (uint32_t k = 0; k < m.classes; ++k) out[k] += m.w[o.b2 + k];
}

// Softmax in place; returns log(sum exp) shift for the loss.
double softmax(std::vector<double>& v) {
  double mx = *std::max_element(v.begin(), v.end());
  double sum = 0;
  for (double& t : v) {
    t = std::exp(t - mx);
    sum += t;
  }
  for (double& t : v) t /= sum;
  return mx + std::log(sum);
}

}  // namespace

std::vector<double> TinyModel::logits(std::span<const double> x) const {
  require(x.size() == in, Errc::invalid_argument, "feature width mismatch");
  std::vector<double> hid, out;
  forward(*this, x, hid, out);
  return out;
}

std::vector<double> TinyModel::hidden_out(std::span<const double> x) const {
  require(x.size() == in, Errc::invalid_argument, "feature width mismatch");
  std::vector<double> hid, out;
  forward(*this, x, hid, out);
  return hid;
}

double mean_loss(const TinyModel& m, const SyntheticDataset& ds,
                 std::span<const uint32_t> idx) {
  require(!idx.empty(), Errc::invalid_argument, "empty index set");
  std::vector<double> hid, out;
  double loss = 0;
  for (uint32_t i : idx) {
    forward(m, ds.row(i), hid, out);
    double raw = out[ds.y[i]];
    double lse = softmax(out);
    loss += lse - raw;
  }
  return loss / double(idx.size());
}

double accuracy(const TinyModel& m, const SyntheticDataset& ds,
                std::span<const uint32_t> idx) {
  require(!idx.empty(), Errc::invalid_argument, "empty index set");
  std::vector<double> hid, out;
  size_t hit = 0;
  for (uint32_t i : idx) {
    forward(m, ds.row(i), hid, out);
    uint32_t arg =
        uint32_t(std::max_element(out.begin(), out.end()) - out.begin());
    if (arg == ds.y[i]) ++hit;
  }
  return double(hit) / double(idx.size());
}

std::vector<double> gradient(const TinyModel& m, const SyntheticDataset& ds,
                             std::span<const uint32_t> batch) {
  require(!batch.empty(), Errc::invalid_argument, "empty batch");
  const Off o = offsets(m);
  std::vector<double> g(m.w.size(), 0.0);
  std::vector<double> hid, out, dz(m.hidden);
  const double inv = 1.0 / double(batch.size());
  for (uint32_t i : batch) {
    auto x = ds.row(i);
    forward(m, x, hid, out);
    softmax(out);
    out[ds.y[i]] -= 1.0;  // dL/dlogits, per sample
    for (uint32_t k = 0; k < m.classes; ++k) {
      g[o.b2 + k] += inv * out[k];
    }
    for (uint32_t j = 0; j < m.hidden; ++j) {
      const double* row = m.w.data() + o.w2 + size_t(j) * m.classes;
      double* grow = g.data() + o.w2 + size_t(j) * m.classes;
      double da = 0;
      for (uint32_t k = 0; k < m.classes; ++k) {
        grow[k] += inv * hid[j] * out[k];
        da += row[k] * out[k];
      }
      dz[j] = da * (1.0 - hid[j] * hid[j]);  // tanh'
    }
    for (uint32_t j = 0; j < m.hidden; ++j) g[o.b1 + j] += inv * dz[j];
    for (uint32_t i2 = 0; i2 < m.in; ++i2) {
      double xi = x[i2];
      double* grow = g.data() + o.w1 + size_t(i2) * m.hidden;
      for (uint32_t j = 0; j < m.hidden; ++j) grow[j] += inv * xi * dz[j];
    }
  }
  return g;
}

TinyModel local_train(TinyModel m, const SyntheticDataset& ds,
                      std::span<const uint32_t> shard, uint32_t epochs,
                      double lr, uint32_t batch, uint64_t seed) {
  require(!shard.empty(), Errc::invalid_argument, "empty shard");
  require(lr > 0 && std::isfinite(lr), Errc::invalid_argument,
          "learning rate must be positive");
  require(batch >= 1, Errc::invalid_argument, "batch must be at least 1");
  std::vector<uint32_t> order(shard.begin(), shard.end());
  for (uint32_t e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(seed, "epoch-order", e));
    shuffle_u32(order, rng);
    for (size_t at = 0; at < order.size(); at += batch) {
      size_t take = std::min<size_t>(batch, order.size() - at);
      auto g = gradient(m, ds, {order.data() + at, take});
      for (size_t i = 0; i < m.w.size(); ++i) m.w[i] -= lr * g[i];
    }
  }
  return m;
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::fedavg: return "fedavg";
    case Mode::fedavg_wc: return "fedavg_wc";
    case Mode::enccluster: return "enccluster";
    case Mode::enccluster_nobf: return "enccluster_nobf";
  }
  fail(Errc::invalid_argument, "unknown mode");
}

Mode mode_from_name(std::string_view name) {
  if (name == "fedavg") return Mode::fedavg;
  if (name == "fedavg_wc") return Mode::fedavg_wc;
  if (name == "enccluster") return Mode::enccluster;
  if (name == "enccluster_nobf") return Mode::enccluster_nobf;
  fail(Errc::invalid_argument, "unknown mode name");
}

namespace {

bool encrypted(Mode m) {
  return m == Mode::enccluster || m == Mode::enccluster_nobf;
}

uint32_t mapping_bits(uint32_t kappa) {
  return kappa <= 1 ? 0 : uint32_t(std::bit_width(kappa - 1u));
}

void validate(const ExperimentConfig& c) {
  require(c.clients >= 1, Errc::invalid_argument, "need clients");
  require(c.rounds >= 1, Errc::invalid_argument, "need rounds");
  require(c.participation > 0 && c.participation <= 1.0,
          Errc::invalid_argument, "participation must lie in (0, 1]");
  require(c.participation * c.clients >= 2.0 - 1e-9, Errc::invalid_argument,
          "cohort must have at least two clients");
  require(c.kappa >= 1, Errc::invalid_argument, "need clusters");
  require(c.bpe >= 1 && c.bpe <= 62, Errc::invalid_argument,
          "mapping bits per entry out of range");
  require(c.samples >= 10 * c.clients, Errc::invalid_argument,
          "too few samples for the client count");
  require(!c.iid ? c.alpha > 0 : true, Errc::invalid_argument,
          "alpha must be positive");
}

}  // namespace

std::string ExperimentMetrics::to_csv(bool with_header) const {
  std::string out;
  char buf[256];
  if (with_header) {
    const auto& c = config;
    snprintf(buf, sizeof buf, "# clients=%u rounds=%u epochs=%u\n", c.clients,
             c.rounds, c.epochs);
    out += buf;
    snprintf(buf, sizeof buf,
             "# participation=%.4f kappa=%u bpe=%u key_size=%u "
             "fraction_bits=%u\n",
             c.participation, c.kappa, c.bpe, c.key_size, c.fraction_bits);
    out += buf;
    snprintf(buf, sizeof buf, "# iid=%d alpha=%.4f mode=%s seed=%llu\n",
             c.iid ? 1 : 0, c.alpha, std::string(mode_name(c.mode)).c_str(),
             (unsigned long long)c.seed);
    out += buf;
    snprintf(buf, sizeof buf,
             "# classes=%u features=%u hidden=%u samples=%u spread=%.4f "
             "lr=%.4f batch=%u\n",
             c.classes, c.features, c.hidden, c.samples, c.spread, c.lr,
             c.batch);
    out += buf;
  }
  out +=
      "round,mode,accuracy,uplink_bytes,bpp,ratio_vs_fedavg,enc_ms,agg_ms,"
      "mapping_mismatch_rate\n";
  for (const auto& r : rounds) {
    snprintf(buf, sizeof buf, "%u,%s,%.6f,%llu,%.4f,%.6f,%.3f,%.3f,%.6f\n",
             r.round, std::string(mode_name(r.mode)).c_str(), r.accuracy,
             (unsigned long long)r.uplink_bytes, r.bits_per_param,
             r.ratio_vs_fedavg, r.enc_ms, r.agg_ms, r.mapping_mismatch_rate);
    out += buf;
  }
  return out;
}

ExperimentMetrics run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);

  SyntheticDataset ds = generate_dataset(cfg.classes, cfg.features,
                                         cfg.samples, cfg.spread,
                                         derive_seed(cfg.seed, "data"));
  auto [train_idx, test_idx] =
      stratified_split(ds, 0.2, derive_seed(cfg.seed, "holdout"));
  Partition part =
      cfg.iid ? partition_iid(train_idx, cfg.clients,
                              derive_seed(cfg.seed, "partition"))
              : partition_dirichlet(ds, train_idx, cfg.clients, cfg.alpha,
                                    derive_seed(cfg.seed, "partition"));

  TinyModel global = TinyModel::init(cfg.features, cfg.hidden, cfg.classes,
                                     derive_seed(cfg.seed, "model"));
  const uint64_t d = global.dim();
  const uint32_t cohort =
      uint32_t(std::ceil(cfg.participation * double(cfg.clients) - 1e-9));
  const bool full = cohort >= cfg.clients;

  // Encrypted-path state. Plaintext slot values are centroid * shard size at
  // fraction_bits scale; the slot bound leaves |centroid| <= 8 before
  // saturation and the aggregate bound covers a full cohort of maxed slots.
  std::optional<dmcfe::PublicParams> pp;
  std::optional<dmcfe::SetupTranscript> transcript;
  std::vector<dmcfe::ClientKeyPair> keys;
  std::optional<dmcfe::DlogTable> table;
  std::optional<FixedPointCodec> codec;
  UpdateOptions opt;
  if (encrypted(cfg.mode)) {
    size_t wmax = 1;
    for (const auto& shard : part.clients) {
      wmax = std::max(wmax, shard.size());
    }
    dmcfe::Bounds b;
    b.slot = int64_t(8) * int64_t(wmax) << cfg.fraction_bits;
    b.aggregate = b.slot * int64_t(cohort);
    b.y_max = 1;
    pp = dmcfe::setup(cfg.key_size, cohort, derive_seed(cfg.seed, "session"),
                      b);
    table.emplace(pp->pairing(), cfg.dlog_baby_steps);
    codec.emplace(cfg.fraction_bits, b.slot);
    opt.kappa = cfg.kappa;
    opt.filter_bits = cfg.bpe;
    opt.huffman_mapping = cfg.mode == Mode::enccluster_nobf;
    if (full) {
      transcript.emplace(*pp);
      for (uint32_t k = 0; k < cohort; ++k) {
        keys.push_back(dmcfe::keygen(*pp, k, *transcript));
      }
    }
  }

  ExperimentMetrics out;
  out.config = cfg;

  std::vector<uint32_t> all(cfg.clients);
  std::iota(all.begin(), all.end(), 0u);

  for (uint32_t r = 0; r < cfg.rounds; ++r) {
    // Cohort selection is draw-without-replacement on a per-round stream.
    std::vector<uint32_t> sel;
    if (full) {
      sel = all;
    } else {
      std::vector<uint32_t> order = all;
      Rng rng(derive_seed(cfg.seed, "cohort", r));
      shuffle_u32(order, rng);
      sel.assign(order.begin(), order.begin() + cohort);
      std::sort(sel.begin(), sel.end());
    }

    std::vector<TinyModel> locals;
    std::vector<uint64_t> weights;
    uint64_t total = 0;
    double enc_ms = 0;
    for (uint32_t g : sel) {
      TinyModel m = global;
      m = local_train(std::move(m), ds, part.clients[g], cfg.epochs, cfg.lr,
                      cfg.batch,
                      derive_seed(cfg.seed, "train", uint64_t(r) * cfg.clients + g));
      locals.push_back(std::move(m));
      weights.push_back(part.clients[g].size());
      total += part.clients[g].size();
    }

    RoundMetrics rm;
    rm.round = r;
    rm.mode = cfg.mode;

    std::vector<double> next(d, 0.0);
    switch (cfg.mode) {
      case Mode::fedavg: {
        for (size_t i = 0; i < locals.size(); ++i) {
          double wi = double(weights[i]) / double(total);
          for (uint64_t j = 0; j < d; ++j) next[j] += wi * locals[i].w[j];
        }
        rm.uplink_bytes = uint64_t(locals.size()) * d * 4;
        rm.bits_per_param = 32;
        rm.ratio_vs_fedavg = 1.0;
        break;
      }
      case Mode::fedavg_wc: {
        for (size_t i = 0; i < locals.size(); ++i) {
          uint64_t cs = derive_seed(cfg.seed, "client", sel[i]);
          auto cm = clustering::cluster_weights(
              locals[i].w, cfg.kappa, derive_seed(cs, "kmeans", r),
              opt.kmeans_iterations);
          auto recon = clustering::reconstruct_weights(cm);
          double wi = double(weights[i]) / double(total);
          for (uint64_t j = 0; j < d; ++j) next[j] += wi * recon[j];
        }
        uint64_t per = uint64_t(cfg.kappa) * 4 +
                       (d * mapping_bits(cfg.kappa) + 7) / 8;
        rm.uplink_bytes = per * locals.size();
        rm.bits_per_param = double(per) * 8.0 / double(d);
        rm.ratio_vs_fedavg = double(per) * 8.0 / (double(d) * 32.0);
        break;
      }
      case Mode::enccluster:
      case Mode::enccluster_nobf: {
        // Under partial participation each round gets fresh key material for
        // exactly the sampled cohort; labels alone separate full-cohort
        // rounds.
        dmcfe::PublicParams* round_pp = &*pp;
        std::optional<dmcfe::PublicParams> sub_pp;
        std::vector<dmcfe::ClientKeyPair> sub_keys;
        std::vector<dmcfe::ClientKeyPair>* round_keys = &keys;
        if (!full) {
          sub_pp = dmcfe::setup(cfg.key_size, cohort,
                                derive_seed(cfg.seed, "session", r + 1),
                                pp->bounds());
          dmcfe::SetupTranscript t(*sub_pp);
          for (uint32_t k = 0; k < cohort; ++k) {
            sub_keys.push_back(dmcfe::keygen(*sub_pp, k, t));
          }
          round_pp = &*sub_pp;
          round_keys = &sub_keys;
        }

        std::vector<Bytes> wire;
        std::vector<ClientUpdate> ups;
        double t0 = now_ms();
        for (size_t i = 0; i < locals.size(); ++i) {
          uint64_t cs = derive_seed(cfg.seed, "client", sel[i]);
          ClientUpdate up = client_prepare_update(
              *round_pp, (*round_keys)[i], locals[i].w, weights[i], r, *codec,
              opt, cs);
          wire.push_back(message_to_bytes(*round_pp, up.message));
          ups.push_back(std::move(up));
        }
        enc_ms += now_ms() - t0;

        std::vector<RoundMessage> msgs;
        for (const auto& bytes : wire) {
          msgs.push_back(message_from_bytes(*round_pp, bytes));
        }

        double t1 = now_ms();
        AggregateResult agg =
            secure_aggregate(*round_pp, msgs, total, *codec, *table);
        rm.agg_ms = now_ms() - t1;
        next = std::move(agg.weights);

        uint64_t mism = 0;
        for (size_t i = 0; i < ups.size(); ++i) {
          const auto& truth = ups[i].model.assignments;
          const auto& got = agg.mappings[i];
          for (uint64_t j = 0; j < d; ++j) {
            if (got[j] != truth[j]) ++mism;
          }
        }
        rm.mapping_mismatch_rate =
            double(mism) / (double(d) * double(ups.size()));

        CommunicationLedger led = account_round(*round_pp, msgs, d);
        rm.uplink_bytes = led.total_bytes;
        rm.bits_per_param =
            double(led.total_bytes) * 8.0 / (double(d) * double(msgs.size()));
        rm.ratio_vs_fedavg = led.ratio;
        break;
      }
    }
    rm.enc_ms = enc_ms;

    global.w = std::move(next);
    rm.accuracy = accuracy(global, ds, test_idx);
    out.rounds.push_back(rm);
  }

  out.final_weights = global.w;
  out.final_accuracy = out.rounds.back().accuracy;
  return out;
}

}  // namespace enccluster::fl
