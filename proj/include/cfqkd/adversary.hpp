#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cfqkd/config.hpp"
#include "cfqkd/quantum.hpp"
#include "cfqkd/rng.hpp"

namespace cfqkd::adversary {

using quantum::PathState;
using quantum::Polarization;

/// One per-round decision of the interceptor.
struct EveAction {
  enum class Kind : std::uint8_t { Pass, Attack, Block };

  Kind kind = Kind::Pass;
  Polarization basis = Polarization::V;  // meaningful for Attack only

  static EveAction pass() { return {}; }
  static EveAction attack(Polarization basis) { return {Kind::Attack, basis}; }
  static EveAction block() { return {Kind::Block, Polarization::V}; }
};

/// Per-round interception log. Attacked rounds carry a provisional key bit:
/// the complement of the interception basis, i.e. the bit of whatever
/// polarization her splitter forwards to the receiver.
struct EveRoundLog {
  std::uint64_t index = 0;
  EveAction action{};
  bool d4_clicked = false;
  std::optional<int> provisional_bit{};
};

inline EveRoundLog make_log(std::uint64_t index, const EveAction& action, bool d4_clicked) {
  std::optional<int> bit;
  if (action.kind == EveAction::Kind::Attack) bit = 1 - quantum::bit_of(action.basis);
  return {index, action, d4_clicked, bit};
}

/// Per-round action mixture; the remainder is Pass.
struct ActionProbabilities {
  double attack = 0.0;
  double block = 0.0;
  double pass() const { return 1.0 - attack - block; }
};

/// Mixtures whose induced loss reproduces the channel loss exactly:
/// below one half, attack a 2*eta fraction and pass the rest; at or above,
/// attack a 2*(1-eta) fraction and block the remaining 2*eta-1. ForcedAttack
/// intercepts everything (and imitates loss 1/2).
inline ActionProbabilities action_probabilities(AdversaryMode mode, double loss_rate) {
  switch (mode) {
    case AdversaryMode::StrategyI:
      if (!(loss_rate >= 0.0 && loss_rate < 0.5)) {
        throw std::invalid_argument("action_probabilities: strategy I needs loss below 1/2");
      }
      return {2.0 * loss_rate, 0.0};
    case AdversaryMode::StrategyII:
      if (!(loss_rate >= 0.5 && loss_rate <= 1.0)) {
        throw std::invalid_argument("action_probabilities: strategy II needs loss at or above 1/2");
      }
      return {2.0 * (1.0 - loss_rate), 2.0 * loss_rate - 1.0};
    case AdversaryMode::ForcedAttack:
      return {1.0, 0.0};
    default:
      throw std::invalid_argument("action_probabilities: no adversary configured");
  }
}

inline EveAction choose_action(const ActionProbabilities& probs, RandomStream& rng) {
  const double u = rng.next_unit();
  if (u < probs.attack) return EveAction::attack(quantum::polarization_of_bit(rng.coin()));
  if (u < probs.attack + probs.block) return EveAction::block();
  return EveAction::pass();
}

inline EveAction choose_action(const StrategyConfig& cfg, RandomStream& rng) {
  return choose_action(action_probabilities(cfg.adversary, cfg.loss_rate), rng);
}

struct InterceptResult {
  PathState state;
  bool d4_clicked = false;
};

/// Polarization-splitting interception in front of the receiver's site, on a
/// lossless replacement segment. A matching polarization in path b is
/// absorbed by the interceptor's detector (so vacuum continues toward the
/// receiver either way); the orthogonal polarization passes completely.
inline InterceptResult eve_intercept(const PathState& state, Polarization basis,
                                     RandomStream& rng) {
  if (state.kind == PathState::Kind::Gone) {
    throw std::invalid_argument("eve_intercept: no photon left in either path");
  }
  if (basis != state.pol) return {state, false};
  switch (state.kind) {
    case PathState::Kind::Superposed:
      if (rng.bernoulli(state.prob_b())) return {PathState::gone(), true};
      return {PathState::in_path_a(state.pol), false};
    case PathState::Kind::InPathB:
      return {PathState::gone(), true};
    default:
      return {state, false};  // nothing in path b
  }
}

/// Key assembly from the public announcements: attacked rounds yield the
/// provisional bit, everything else is filled with coin flips. Logs must be
/// sorted by round index.
inline std::vector<int> extract_eve_key(std::span<const EveRoundLog> logs,
                                        std::span<const std::uint64_t> announced_indices,
                                        RandomStream& rng) {
  std::vector<int> key;
  key.reserve(announced_indices.size());
  for (std::uint64_t idx : announced_indices) {
    const EveRoundLog* log = nullptr;
    if (idx < logs.size() && logs[idx].index == idx) {
      log = &logs[idx];
    } else {
      const auto it = std::lower_bound(
          logs.begin(), logs.end(), idx,
          [](const EveRoundLog& l, std::uint64_t value) { return l.index < value; });
      if (it != logs.end() && it->index == idx) log = &*it;
    }
    if (log == nullptr) {
      throw std::out_of_range("extract_eve_key: announced round has no log entry");
    }
    key.push_back(log->provisional_bit ? *log->provisional_bit : rng.coin());
  }
  return key;
}

/// What one round hands the receiver after the forward segment when that
/// segment belongs to the interceptor.
struct SegmentAction {
  PathState state;
  EveAction action{};
  bool d4_clicked = false;
};

/// Samples the configured strategy round by round. Block is a deterministic
/// erasure of the path-b pulse; the interceptor's detector never fires on it.
struct StrategySampler {
  ActionProbabilities probs;

  SegmentAction operator()(const PathState& state, RandomStream& rng) const {
    const EveAction action = choose_action(probs, rng);
    switch (action.kind) {
      case EveAction::Kind::Attack: {
        const InterceptResult r = eve_intercept(state, action.basis, rng);
        return {r.state, action, r.d4_clicked};
      }
      case EveAction::Kind::Block:
        return {quantum::erase_path_b(state, rng), action, false};
      default:
        return {state, action, false};
    }
  }
};

inline StrategySampler strategy_sampler(const StrategyConfig& cfg) {
  return {action_probabilities(cfg.adversary, cfg.loss_rate)};
}

/// How the density matrix entering the receiver is assembled.
enum class ChannelMixture : std::uint8_t {
  AttackLowLoss,   // pass/attack mixture imitating loss below 1/2
  AttackHighLoss,  // attack/block mixture imitating loss at or above 1/2
  LossyChannel     // honest segment with loss rate eta
};

/// Density matrix of the state entering the receiver's site, built along the
/// requested construction route. All routes are mixtures of the intact
/// two-rail state and the erased (vacuum-or-path-a) state with weights
/// (1-eta, eta); the attack routes assemble those weights from their action
/// fractions.
inline quantum::MixedState rho_into_bob(Polarization pol, double loss_rate, double reflectivity,
                                        double transmissivity, ChannelMixture mixture) {
  quantum::detail::require_splitter(reflectivity, transmissivity, "rho_into_bob");
  if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) {
    throw std::invalid_argument("rho_into_bob: loss rate must lie in [0,1]");
  }
  if (mixture == ChannelMixture::AttackLowLoss && !(loss_rate < 0.5)) {
    throw std::invalid_argument("rho_into_bob: the low-loss attack mixture needs loss below 1/2");
  }
  if (mixture == ChannelMixture::AttackHighLoss && !(loss_rate >= 0.5)) {
    throw std::invalid_argument(
        "rho_into_bob: the high-loss attack mixture needs loss at or above 1/2");
  }

  using MS = quantum::MixedState;
  std::array<quantum::Complex, MS::kDim> amplitude{};
  amplitude[MS::basis_index(false, pol)] = std::sqrt(transmissivity);
  amplitude[MS::basis_index(true, pol)] = std::sqrt(reflectivity);
  const MS rho_intact = MS::pure(amplitude);
  const MS rho_erased =
      quantum::mix({{reflectivity, MS::basis_projector(MS::kVacuumIndex)},
                    {transmissivity, MS::basis_projector(MS::basis_index(false, pol))}});

  const double eta = loss_rate;
  switch (mixture) {
    case ChannelMixture::LossyChannel:
      return quantum::mix({{1.0 - eta, rho_intact}, {eta, rho_erased}});
    case ChannelMixture::AttackLowLoss:
      // pass fraction keeps the state intact; attacks split evenly between a
      // transparent basis and an erasing one
      return quantum::mix({{1.0 - 2.0 * eta, rho_intact}, {eta, rho_intact}, {eta, rho_erased}});
    case ChannelMixture::AttackHighLoss:
    default:
      // attacked rounds split evenly; blocked rounds always erase
      return quantum::mix(
          {{1.0 - eta, rho_intact}, {1.0 - eta, rho_erased}, {2.0 * eta - 1.0, rho_erased}});
  }
}

}  // namespace cfqkd::adversary
