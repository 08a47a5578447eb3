#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfqkd/adversary.hpp"
#include "cfqkd/config.hpp"
#include "cfqkd/quantum.hpp"
#include "cfqkd/rng.hpp"

namespace cfqkd::protocol {

using quantum::Detector;
using quantum::PathState;
using quantum::Polarization;

enum class Outcome : std::uint8_t { D1 = 0, D2 = 1, D3 = 2, D4Only = 3, NoClick = 4 };
inline constexpr std::size_t kOutcomeCount = 5;

inline const char* name_of(Outcome o) {
  switch (o) {
    case Outcome::D1: return "D1";
    case Outcome::D2: return "D2";
    case Outcome::D3: return "D3";
    case Outcome::D4Only: return "D4";
    default: return "none";
  }
}

/// Full trace of one protocol round. The loss flags are the channel's latent
/// per-segment decisions, drawn every round; an erasure is applied only when
/// a path-b pulse is actually in the segment, so the flags condition the
/// round statistics cleanly even for rounds where nothing travels back.
struct RoundRecord {
  std::uint64_t index = 0;
  Polarization alice_pol = Polarization::V;
  int alice_bit = 0;
  Polarization bob_basis = Polarization::V;
  int bob_bit = 0;
  std::optional<adversary::EveAction> eve_action{};
  bool d4_clicked = false;
  bool loss_ab = false;
  bool loss_ba = false;
  Outcome outcome = Outcome::NoClick;
  std::optional<Polarization> outcome_pol{};
  bool sifted = false;
};

namespace detail {

// Receiver interaction, return segment, and final interference; shared by the
// honest and adversarial forward segments.
inline void finish_round(const StrategyConfig& cfg, PathState state, RoundRecord& rec,
                         RandomStream& rng) {
  rec.bob_basis = quantum::polarization_of_bit(rng.coin());
  rec.bob_bit = quantum::bit_of(rec.bob_basis);
  bool blocked = false;
  if (state.kind != PathState::Kind::Gone) {
    const quantum::PbsResult pbs = quantum::pbs_interact(state, rec.bob_basis, rng);
    state = pbs.state;
    blocked = pbs.blocked_click;
  }
  rec.loss_ba = rng.bernoulli(cfg.loss_rate);
  if (!blocked && state.kind == PathState::Kind::Superposed && rec.loss_ba) {
    state = quantum::erase_path_b(state, rng);
  }
  if (blocked) {
    rec.outcome = Outcome::D3;
    rec.outcome_pol = rec.alice_pol;
  } else {
    const quantum::OutcomeDistribution dist =
        quantum::interfere_at_bs2(state, cfg.reflectivity, cfg.transmissivity);
    switch (dist.sample(rng)) {
      case Detector::D1:
        rec.outcome = Outcome::D1;
        rec.outcome_pol = rec.alice_pol;
        break;
      case Detector::D2:
        rec.outcome = Outcome::D2;
        rec.outcome_pol = rec.alice_pol;
        break;
      default:
        rec.outcome = rec.d4_clicked ? Outcome::D4Only : Outcome::NoClick;
        break;
    }
  }
  rec.sifted = rec.outcome == Outcome::D1;
}

}  // namespace detail

/// One round with the forward segment replaced by an adversary hook. The hook
/// sees the state right after the first splitter and returns what continues
/// toward the receiver.
template <class ForwardHook>
RoundRecord run_round_with_adversary(const StrategyConfig& cfg, std::uint64_t index,
                                     ForwardHook&& hook, RandomStream& rng) {
  RoundRecord rec;
  rec.index = index;
  rec.alice_pol = quantum::polarization_of_bit(rng.coin());
  rec.alice_bit = quantum::bit_of(rec.alice_pol);
  const PathState emitted = quantum::split_at_bs1(rec.alice_pol, cfg.reflectivity,
                                                  cfg.transmissivity);
  const adversary::SegmentAction seg = hook(emitted, rng);
  rec.eve_action = seg.action;
  rec.d4_clicked = seg.d4_clicked;
  detail::finish_round(cfg, seg.state, rec, rng);
  return rec;
}

/// One full protocol round under the configured channel. Callers supply the
/// round's own random stream (see RandomStream::for_stream), which makes
/// record streams bit-reproducible for a fixed config regardless of how
/// rounds are scheduled.
inline RoundRecord run_round(const StrategyConfig& cfg, std::uint64_t index, RandomStream& rng) {
  if (cfg.adversary != AdversaryMode::None) {
    return run_round_with_adversary(cfg, index, adversary::strategy_sampler(cfg), rng);
  }
  RoundRecord rec;
  rec.index = index;
  rec.alice_pol = quantum::polarization_of_bit(rng.coin());
  rec.alice_bit = quantum::bit_of(rec.alice_pol);
  PathState state = quantum::split_at_bs1(rec.alice_pol, cfg.reflectivity, cfg.transmissivity);
  rec.loss_ab = rng.bernoulli(cfg.loss_rate);
  if (rec.loss_ab) state = quantum::erase_path_b(state, rng);
  detail::finish_round(cfg, state, rec, rng);
  return rec;
}

inline std::vector<RoundRecord> run_rounds(const StrategyConfig& cfg) {
  cfg.validate();
  std::vector<RoundRecord> records;
  records.reserve(cfg.n_rounds);
  for (std::uint64_t i = 0; i < cfg.n_rounds; ++i) {
    RandomStream rng = RandomStream::for_stream(cfg.seed, i);
    records.push_back(run_round(cfg, i, rng));
  }
  return records;
}

struct SiftResult {
  std::vector<int> alice_key;
  std::vector<int> bob_key;
  std::vector<std::uint64_t> announced_indices;
};

/// Raw keys come exactly from the D1 clicks, in round order; the sender
/// announces those rounds publicly.
inline SiftResult sift(std::span<const RoundRecord> records) {
  SiftResult out;
  for (const RoundRecord& rec : records) {
    if (rec.outcome != Outcome::D1) continue;
    out.alice_key.push_back(rec.alice_bit);
    out.bob_key.push_back(rec.bob_bit);
    out.announced_indices.push_back(rec.index);
  }
  return out;
}

inline double key_mismatch_rate(std::span<const int> alice_key, std::span<const int> bob_key) {
  if (alice_key.size() != bob_key.size()) {
    throw std::invalid_argument("key_mismatch_rate: keys differ in length");
  }
  if (alice_key.empty()) throw std::invalid_argument("key_mismatch_rate: empty keys");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < alice_key.size(); ++i) diff += alice_key[i] != bob_key[i];
  return static_cast<double>(diff) / static_cast<double>(alice_key.size());
}

/// Aggregated click statistics. Rounds are classified by the latent loss
/// flags: no loss on either segment, forward loss (regardless of the return
/// segment), or return loss alone.
struct ClickStats {
  std::uint64_t total_rounds = 0;
  std::array<std::array<std::uint64_t, 2>, kOutcomeCount> clicks{};  // [outcome][source pol bit]
  std::array<std::array<std::uint64_t, kOutcomeCount>, 2> clicks_by_match{};  // [bases match]
  std::uint64_t sifted = 0;
  std::uint64_t case_no_loss = 0, case_forward_loss = 0, case_return_loss = 0;
  std::uint64_t case_no_loss_sifted = 0, case_forward_loss_sifted = 0,
                case_return_loss_sifted = 0;

  void add(const RoundRecord& rec) {
    ++total_rounds;
    const auto out = static_cast<std::size_t>(rec.outcome);
    ++clicks[out][static_cast<std::size_t>(rec.alice_bit)];
    ++clicks_by_match[rec.bob_basis == rec.alice_pol ? 1 : 0][out];
    sifted += rec.sifted ? 1 : 0;
    if (rec.loss_ab) {
      ++case_forward_loss;
      case_forward_loss_sifted += rec.sifted ? 1 : 0;
    } else if (rec.loss_ba) {
      ++case_return_loss;
      case_return_loss_sifted += rec.sifted ? 1 : 0;
    } else {
      ++case_no_loss;
      case_no_loss_sifted += rec.sifted ? 1 : 0;
    }
  }

  void merge(const ClickStats& other) {
    total_rounds += other.total_rounds;
    for (std::size_t o = 0; o < kOutcomeCount; ++o) {
      clicks[o][0] += other.clicks[o][0];
      clicks[o][1] += other.clicks[o][1];
      clicks_by_match[0][o] += other.clicks_by_match[0][o];
      clicks_by_match[1][o] += other.clicks_by_match[1][o];
    }
    sifted += other.sifted;
    case_no_loss += other.case_no_loss;
    case_forward_loss += other.case_forward_loss;
    case_return_loss += other.case_return_loss;
    case_no_loss_sifted += other.case_no_loss_sifted;
    case_forward_loss_sifted += other.case_forward_loss_sifted;
    case_return_loss_sifted += other.case_return_loss_sifted;
  }
};

inline ClickStats aggregate_stats(std::span<const RoundRecord> records) {
  ClickStats stats;
  for (const RoundRecord& rec : records) stats.add(rec);
  return stats;
}

}  // namespace cfqkd::protocol
