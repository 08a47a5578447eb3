#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cfqkd {

enum class AdversaryMode : std::uint8_t { None, StrategyI, StrategyII, ForcedAttack };

/// Parameters of one simulated experiment. Loss is one-way and identical for
/// the forward and return channel segments. The interception strategies are
/// tied to the loss regime they can imitate: StrategyI below one half,
/// StrategyII at or above. ForcedAttack intercepts every round regardless.
struct StrategyConfig {
  double reflectivity = 0.5;    // beam-splitter R, shared by both splitters
  double transmissivity = 0.5;  // beam-splitter T = 1 - R
  double loss_rate = 0.0;       // one-way loss probability per segment
  AdversaryMode adversary = AdversaryMode::None;
  std::uint64_t n_rounds = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(reflectivity > 0.0 && reflectivity < 1.0) ||
        std::abs(reflectivity + transmissivity - 1.0) > 1e-12) {
      throw std::invalid_argument("StrategyConfig: need R in (0,1) and R + T = 1");
    }
    if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) {
      throw std::invalid_argument("StrategyConfig: loss rate must lie in [0,1]");
    }
    if (n_rounds == 0) throw std::invalid_argument("StrategyConfig: need at least one round");
    if (adversary == AdversaryMode::StrategyI && !(loss_rate < 0.5)) {
      throw std::invalid_argument("StrategyConfig: strategy I applies to loss below 1/2");
    }
    if (adversary == AdversaryMode::StrategyII && !(loss_rate >= 0.5)) {
      throw std::invalid_argument("StrategyConfig: strategy II applies to loss at or above 1/2");
    }
  }
};

inline StrategyConfig make_config(double reflectivity, double loss_rate, AdversaryMode adversary,
                                  std::uint64_t n_rounds, std::uint64_t seed) {
  StrategyConfig cfg;
  cfg.reflectivity = reflectivity;
  cfg.transmissivity = 1.0 - reflectivity;
  cfg.loss_rate = loss_rate;
  cfg.adversary = adversary;
  cfg.n_rounds = n_rounds;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace cfqkd
