#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cfqkd/analysis.hpp"
#include "cfqkd/protocol.hpp"

namespace cfqkd::sim {

struct RunOptions {
  unsigned threads = 0;         // 0: pick from hardware concurrency
  double check_fraction = 0.0;  // share of announced rounds reserved for checking
  bool eve_flip = false;        // flip the interceptor key when its sender-error exceeds 1/2
  // Replaces the configured strategy's action mixture; used by the verifier's
  // fault-injection self-test.
  std::optional<adversary::ActionProbabilities> action_override{};
};

/// Order-independent counters accumulated over an experiment. Key-bit cells
/// index as (alice<<1)|bob, or (alice<<2)|(bob<<1)|eve when an interceptor is
/// present. With a positive check fraction, a disjoint random subset of the
/// announced rounds goes into the *_check cells and is excluded from the key.
struct ExperimentTally {
  protocol::ClickStats stats{};
  std::array<std::uint64_t, 4> ab_cells{};
  std::array<std::uint64_t, 8> abe_cells{};
  std::array<std::uint64_t, 4> ab_check{};
  std::array<std::uint64_t, 8> abe_check{};
  std::uint64_t check_reserved = 0;
  bool has_eve = false;
  std::uint64_t attack_rounds = 0;
  std::uint64_t d4_clicks = 0;
  std::uint64_t attack_sifted = 0;
  std::uint64_t attack_sifted_eve_same_alice = 0;
  std::uint64_t superposed_into_bob = 0;

  void merge(const ExperimentTally& o) {
    stats.merge(o.stats);
    for (std::size_t i = 0; i < 4; ++i) {
      ab_cells[i] += o.ab_cells[i];
      ab_check[i] += o.ab_check[i];
    }
    for (std::size_t i = 0; i < 8; ++i) {
      abe_cells[i] += o.abe_cells[i];
      abe_check[i] += o.abe_check[i];
    }
    check_reserved += o.check_reserved;
    has_eve = has_eve || o.has_eve;
    attack_rounds += o.attack_rounds;
    d4_clicks += o.d4_clicks;
    attack_sifted += o.attack_sifted;
    attack_sifted_eve_same_alice += o.attack_sifted_eve_same_alice;
    superposed_into_bob += o.superposed_into_bob;
  }
};

namespace detail {

inline void accumulate_round(ExperimentTally& tally, const protocol::RoundRecord& rec,
                             const RunOptions& opts, bool has_eve, RandomStream& rng) {
  tally.stats.add(rec);
  bool superposed = !rec.loss_ab;
  if (rec.eve_action) {
    const adversary::EveAction& act = *rec.eve_action;
    superposed = act.kind == adversary::EveAction::Kind::Pass ||
                 (act.kind == adversary::EveAction::Kind::Attack && act.basis != rec.alice_pol);
    if (act.kind == adversary::EveAction::Kind::Attack) {
      ++tally.attack_rounds;
      tally.d4_clicks += rec.d4_clicked ? 1 : 0;
    }
  }
  tally.superposed_into_bob += superposed ? 1 : 0;
  if (!rec.sifted) return;

  int eve_bit = -1;
  if (has_eve) {
    const adversary::EveAction& act = *rec.eve_action;
    if (act.kind == adversary::EveAction::Kind::Attack) {
      eve_bit = 1 - quantum::bit_of(act.basis);
      ++tally.attack_sifted;
      tally.attack_sifted_eve_same_alice += eve_bit == rec.alice_bit ? 1 : 0;
    } else {
      eve_bit = rng.coin();
    }
  }
  const std::size_t ab = static_cast<std::size_t>(rec.alice_bit) * 2 +
                         static_cast<std::size_t>(rec.bob_bit);
  ++tally.ab_cells[ab];
  if (eve_bit >= 0) ++tally.abe_cells[ab * 2 + static_cast<std::size_t>(eve_bit)];
  if (opts.check_fraction > 0.0 && rng.bernoulli(opts.check_fraction)) {
    ++tally.check_reserved;
    ++tally.ab_check[ab];
    if (eve_bit >= 0) ++tally.abe_check[ab * 2 + static_cast<std::size_t>(eve_bit)];
  }
}

}  // namespace detail

/// Runs cfg.n_rounds rounds, sharded over worker threads. Every round draws
/// from its own (seed, index) stream and the counters merge additively, so
/// the tally is identical for any thread count.
inline ExperimentTally run_experiment(const StrategyConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  if (opts.check_fraction < 0.0 || opts.check_fraction >= 1.0) {
    throw std::invalid_argument("run_experiment: check fraction must lie in [0,1)");
  }
  if (opts.action_override && cfg.adversary == AdversaryMode::None) {
    throw std::invalid_argument("run_experiment: action override needs an adversary mode");
  }
  const bool has_eve = cfg.adversary != AdversaryMode::None;

  unsigned threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, threads);
  if (cfg.n_rounds < 4096) threads = 1;
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, cfg.n_rounds));

  const auto worker = [&](std::uint64_t lo, std::uint64_t hi, ExperimentTally& tally) {
    tally.has_eve = has_eve;
    for (std::uint64_t i = lo; i < hi; ++i) {
      RandomStream rng = RandomStream::for_stream(cfg.seed, i);
      protocol::RoundRecord rec;
      if (opts.action_override) {
        rec = protocol::run_round_with_adversary(
            cfg, i, adversary::StrategySampler{*opts.action_override}, rng);
      } else {
        rec = protocol::run_round(cfg, i, rng);
      }
      detail::accumulate_round(tally, rec, opts, has_eve, rng);
    }
  };

  std::vector<ExperimentTally> partial(threads);
  if (threads == 1) {
    worker(0, cfg.n_rounds, partial[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::uint64_t chunk = cfg.n_rounds / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t lo = chunk * t;
      const std::uint64_t hi = t + 1 == threads ? cfg.n_rounds : chunk * (t + 1);
      pool.emplace_back(worker, lo, hi, std::ref(partial[t]));
    }
    for (std::thread& th : pool) th.join();
  }
  ExperimentTally total;
  for (const ExperimentTally& t : partial) total.merge(t);
  return total;
}

// ---------------------------------------------------------------------------
// Estimates with confidence intervals
// ---------------------------------------------------------------------------

namespace detail {

inline analysis::JointDistribution joint_from_ab(const std::array<std::uint64_t, 4>& c) {
  const double n = static_cast<double>(c[0] + c[1] + c[2] + c[3]);
  return {c[0] / n, c[1] / n, c[2] / n, c[3] / n};
}

struct KeyTriple {
  std::array<std::uint64_t, 4> ab{}, ae{}, be{};
  std::uint64_t total = 0;
};

inline KeyTriple collapse_abe(const std::array<std::uint64_t, 8>& cells) {
  KeyTriple t;
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t e = 0; e < 2; ++e) {
        const std::uint64_t n = cells[a * 4 + b * 2 + e];
        t.ab[a * 2 + b] += n;
        t.ae[a * 2 + e] += n;
        t.be[b * 2 + e] += n;
        t.total += n;
      }
    }
  }
  return t;
}

// Sequential conditional-binomial multinomial sampler.
inline void multinomial(RandomStream& rng, std::uint64_t n, std::span<const double> probs,
                        std::span<std::uint64_t> out) {
  double remaining_p = 1.0;
  std::uint64_t remaining_n = n;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (remaining_n == 0 || remaining_p <= 0.0) {
      out[i] = 0;
      continue;
    }
    const double cond = std::clamp(probs[i] / remaining_p, 0.0, 1.0);
    std::binomial_distribution<long long> bin(static_cast<long long>(remaining_n), cond);
    out[i] = static_cast<std::uint64_t>(bin(rng));
    remaining_n -= out[i];
    remaining_p -= probs[i];
  }
  out[probs.size() - 1] = remaining_n;
}

inline analysis::Interval percentile_interval(std::vector<double>& values, double confidence) {
  std::sort(values.begin(), values.end());
  const double alpha = (1.0 - confidence) / 2.0;
  const double last = static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(alpha * last));
  const std::size_t hi = static_cast<std::size_t>(std::ceil((1.0 - alpha) * last));
  return {values[lo], values[hi]};
}

}  // namespace detail

/// Point estimates and confidence intervals derived from one experiment.
/// Plain proportions get binomial intervals; the information quantities and
/// the secret-key rate get percentile intervals from a seeded multinomial
/// bootstrap over the (unsifted, key-cell) category counts.
struct McEstimates {
  std::uint64_t rounds = 0;
  std::uint64_t sifted = 0;
  std::uint64_t key_bits = 0;  // sifted minus any reserved checking subset
  double r_raw = 0.0;
  analysis::Interval r_raw_interval{};
  double p_ab_diff = 0.0;
  analysis::Interval p_ab_diff_interval{};
  bool has_eve = false;
  double i_ab = 0.0, i_ea = 0.0, i_eb = 0.0;
  double secret_fraction = 0.0;
  analysis::Interval secret_fraction_interval{};
  double r_qkd = 0.0;
  analysis::Interval r_qkd_interval{};
};

inline McEstimates estimate(const ExperimentTally& tally, const RunOptions& opts,
                            double confidence, std::uint64_t bootstrap_seed,
                            int bootstrap_replicates = 400) {
  McEstimates est;
  est.rounds = tally.stats.total_rounds;
  est.sifted = tally.stats.sifted;
  est.has_eve = tally.has_eve;
  if (est.rounds == 0) throw std::invalid_argument("estimate: empty experiment");

  const bool use_check = opts.check_fraction > 0.0;
  est.key_bits = est.sifted - (use_check ? tally.check_reserved : 0);
  est.r_raw = static_cast<double>(est.key_bits) / static_cast<double>(est.rounds);
  est.r_raw_interval = analysis::binomial_interval(est.key_bits, est.rounds, confidence);

  std::array<std::uint64_t, 4> ab = use_check ? tally.ab_check : tally.ab_cells;
  std::array<std::uint64_t, 8> abe = use_check ? tally.abe_check : tally.abe_cells;
  const std::uint64_t pairs = ab[0] + ab[1] + ab[2] + ab[3];
  if (pairs == 0) return est;  // no statistics subset; proportions only

  if (est.has_eve && opts.eve_flip) {
    // Flip the interceptor's whole key when it disagrees with the sender in
    // the majority of positions; mutual informations are invariant.
    std::uint64_t ea_diff = 0;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t e = 0; e < 2; ++e)
          if (a != e) ea_diff += abe[a * 4 + b * 2 + e];
    if (2 * ea_diff > detail::collapse_abe(abe).total) {
      std::array<std::uint64_t, 8> flipped{};
      for (std::size_t i = 0; i < 8; ++i) flipped[i ^ 1u] = abe[i];
      abe = flipped;
    }
  }

  const std::uint64_t ab_diff = ab[1] + ab[2];
  est.p_ab_diff = static_cast<double>(ab_diff) / static_cast<double>(pairs);
  est.p_ab_diff_interval = analysis::binomial_interval(ab_diff, pairs, confidence);
  est.i_ab = analysis::mutual_information(detail::joint_from_ab(ab));

  if (!est.has_eve) return est;

  const detail::KeyTriple triple = detail::collapse_abe(abe);
  est.i_ea = analysis::mutual_information(detail::joint_from_ab(triple.ae));
  est.i_eb = analysis::mutual_information(detail::joint_from_ab(triple.be));
  est.secret_fraction = est.i_ab - std::min(est.i_ea, est.i_eb);
  est.r_qkd = est.r_raw * std::max(est.secret_fraction, 0.0);

  // Bootstrap over categories: rounds outside the statistics subset (split
  // into non-key and key-but-unchecked), then the eight key cells.
  const std::uint64_t plain_key = use_check ? est.key_bits : 0;
  const std::uint64_t rest = est.rounds - pairs - plain_key;
  std::vector<double> probs;
  probs.push_back(static_cast<double>(rest) / static_cast<double>(est.rounds));
  probs.push_back(static_cast<double>(plain_key) / static_cast<double>(est.rounds));
  for (std::size_t i = 0; i < 8; ++i) {
    probs.push_back(static_cast<double>(abe[i]) / static_cast<double>(est.rounds));
  }

  RandomStream rng = RandomStream::for_stream(bootstrap_seed, 0x626f6f74ull);
  std::vector<std::uint64_t> draw(probs.size());
  std::vector<double> sf_values, qkd_values;
  sf_values.reserve(bootstrap_replicates);
  qkd_values.reserve(bootstrap_replicates);
  for (int b = 0; b < bootstrap_replicates; ++b) {
    detail::multinomial(rng, est.rounds, probs, draw);
    std::array<std::uint64_t, 8> cells{};
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      cells[i] = draw[i + 2];
      m += cells[i];
    }
    if (m == 0) {
      sf_values.push_back(0.0);
      qkd_values.push_back(0.0);
      continue;
    }
    const detail::KeyTriple t = detail::collapse_abe(cells);
    const double i_ab = analysis::mutual_information(detail::joint_from_ab(t.ab));
    const double i_ea = analysis::mutual_information(detail::joint_from_ab(t.ae));
    const double i_eb = analysis::mutual_information(detail::joint_from_ab(t.be));
    const double sf = i_ab - std::min(i_ea, i_eb);
    const double key = use_check ? static_cast<double>(draw[1])
                                 : static_cast<double>(m);
    sf_values.push_back(sf);
    qkd_values.push_back(key / static_cast<double>(est.rounds) * std::max(sf, 0.0));
  }
  est.secret_fraction_interval = detail::percentile_interval(sf_values, confidence);
  est.r_qkd_interval = detail::percentile_interval(qkd_values, confidence);
  return est;
}

// ---------------------------------------------------------------------------
// Observable summary for eavesdropping-detection comparisons
// ---------------------------------------------------------------------------

/// The statistics the honest parties can actually see: per-detector,
/// per-polarization click rates (the interceptor's detector folds into the
/// no-click class), the sifted fraction, and the key mismatch fraction.
struct ObservableCounts {
  static constexpr std::size_t kClasses = 7;  // D1V D1H D2V D2H D3V D3H none
  static const char* class_name(std::size_t i) {
    static const char* names[kClasses] = {"D1:V", "D1:H", "D2:V", "D2:H",
                                          "D3:V", "D3:H", "no-click"};
    return names[i];
  }
  std::array<std::uint64_t, kClasses> clicks{};
  std::uint64_t rounds = 0;
  std::uint64_t sifted = 0;
  std::uint64_t mismatched = 0;  // among sifted pairs
};

inline ObservableCounts observables(const ExperimentTally& tally) {
  ObservableCounts obs;
  obs.rounds = tally.stats.total_rounds;
  obs.sifted = tally.stats.sifted;
  obs.mismatched = tally.ab_cells[1] + tally.ab_cells[2];
  const auto& clicks = tally.stats.clicks;
  for (std::size_t pol = 0; pol < 2; ++pol) {
    obs.clicks[0 + pol] = clicks[static_cast<std::size_t>(protocol::Outcome::D1)][pol];
    obs.clicks[2 + pol] = clicks[static_cast<std::size_t>(protocol::Outcome::D2)][pol];
    obs.clicks[4 + pol] = clicks[static_cast<std::size_t>(protocol::Outcome::D3)][pol];
    obs.clicks[6] += clicks[static_cast<std::size_t>(protocol::Outcome::D4Only)][pol] +
                     clicks[static_cast<std::size_t>(protocol::Outcome::NoClick)][pol];
  }
  return obs;
}

/// Two-sample z statistic for proportions, pooled variance.
inline double two_sample_z(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2,
                           std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("two_sample_z: empty samples");
  const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  const double var = pooled * (1.0 - pooled) *
                     (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
  if (var == 0.0) return p1 == p2 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(p1 - p2) / std::sqrt(var);
}

/// One-sample z statistic against an exact probability.
inline double one_sample_z(std::uint64_t k, std::uint64_t n, double p) {
  if (n == 0) throw std::invalid_argument("one_sample_z: empty sample");
  const double p_hat = static_cast<double>(k) / static_cast<double>(n);
  const double var = p * (1.0 - p) / static_cast<double>(n);
  if (var == 0.0) return p_hat == p ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(p_hat - p) / std::sqrt(var);
}

}  // namespace cfqkd::sim
