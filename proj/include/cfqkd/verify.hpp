#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cfqkd/adversary.hpp"
#include "cfqkd/experiment.hpp"
#include "cfqkd/sweep.hpp"

namespace cfqkd::sim {

enum class FaultInjection : std::uint8_t { None, StrategyIIBlockProbability };

struct VerifyOptions {
  std::uint64_t n_rounds = 1'000'000;
  std::uint64_t seed = 1;
  double reflectivity = 0.5;
  unsigned threads = 0;
  double confidence = 0.99;
  FaultInjection fault = FaultInjection::None;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline bool all_passed(std::span<const CheckResult> checks) {
  for (const CheckResult& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return RandomStream::for_stream(base, tag).next_u64();
}

struct Suite {
  std::vector<CheckResult> checks;
  void add(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
};

}  // namespace detail

/// Runs the full self-verification suite:
///  (a) algebraic identities of the closed forms, including the equality of
///      the attack mixtures with the honest lossy channel on a density-matrix
///      grid for both polarizations;
///  (b) Monte Carlo estimates against the closed forms over the loss grid;
///  (c) indistinguishability of the intercepted runs from honest lossy runs
///      in every statistic the honest parties can see.
/// The fault injection hook perturbs the high-loss strategy's block
/// probability so the statistics section can demonstrate a detection.
inline std::vector<CheckResult> run_verify(const VerifyOptions& opts) {
  using analysis::CheatStrategy;
  using analysis::Party;
  detail::Suite suite;
  const double refl = opts.reflectivity;
  const double trans = 1.0 - refl;
  const std::string ci_label = format_number(opts.confidence * 100.0) + "% CI";

  // ---- (a) algebraic checks -------------------------------------------

  for (quantum::Polarization pol : {quantum::Polarization::V, quantum::Polarization::H}) {
    for (const bool high : {false, true}) {
      double worst = 0.0;
      double worst_eta = 0.0;
      for (int i = 0; i <= 20; ++i) {
        const double eta = i * 0.05;
        if (high != (eta >= 0.5)) continue;
        const auto mix_kind = high ? adversary::ChannelMixture::AttackHighLoss
                                   : adversary::ChannelMixture::AttackLowLoss;
        const double d = quantum::density_distance(
            adversary::rho_into_bob(pol, eta, refl, trans, mix_kind),
            adversary::rho_into_bob(pol, eta, refl, trans,
                                    adversary::ChannelMixture::LossyChannel));
        if (d > worst) {
          worst = d;
          worst_eta = eta;
        }
      }
      suite.add(std::string("density-equality/pol=") + quantum::symbol_of(pol) +
                    (high ? "/high-loss" : "/low-loss"),
                worst <= 1e-12,
                "max distance " + format_number(worst) + " at eta=" + format_number(worst_eta) +
                    ", bound 1e-12");
    }
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double eta = i * 0.01;
      worst = std::max(worst, std::abs(analysis::strategy1_component_rates(eta, refl, trans).total() -
                                       analysis::raw_key_rate(eta, refl, trans)));
    }
    suite.add("rate-conservation/low-loss", worst <= 1e-12,
              "max |cheated - honest| " + format_number(worst) + ", bound 1e-12");
    worst = 0.0;
    for (int i = 50; i <= 100; ++i) {
      const double eta = i * 0.01;
      worst = std::max(worst, std::abs(analysis::strategy2_cheated_rate(eta, refl, trans) -
                                       analysis::raw_key_rate(eta, refl, trans)));
    }
    suite.add("rate-conservation/high-loss", worst <= 1e-12,
              "max |cheated - honest| " + format_number(worst) + ", bound 1e-12");
  }

  {
    double worst = 0.0;
    for (int i = 50; i <= 100; ++i) {
      const double eta = i * 0.01;
      const double i_ab = analysis::mutual_information(analysis::ab_joint(eta));
      const double i_ea = analysis::mutual_information(
          analysis::eve_joint(eta, CheatStrategy::HighLoss, Party::Alice));
      worst = std::max(worst, std::abs(i_ea - i_ab));
    }
    suite.add("transpose-identity", worst <= 1e-12,
              "max |I(E;A) - I(A;B)| over high-loss grid " + format_number(worst) +
                  ", bound 1e-12");
  }

  {
    bool ok_low = true, ok_high = true;
    for (int i = 0; i < 50; ++i) {
      const double eta = i * 0.01;
      const double i_ea = analysis::mutual_information(
          analysis::eve_joint(eta, CheatStrategy::LowLoss, Party::Alice));
      const double i_eb = analysis::mutual_information(
          analysis::eve_joint(eta, CheatStrategy::LowLoss, Party::Bob));
      ok_low = ok_low && i_eb <= i_ea + 1e-12;
    }
    for (int i = 50; i <= 100; ++i) {
      const double eta = i * 0.01;
      const double i_ea = analysis::mutual_information(
          analysis::eve_joint(eta, CheatStrategy::HighLoss, Party::Alice));
      const double i_eb = analysis::mutual_information(
          analysis::eve_joint(eta, CheatStrategy::HighLoss, Party::Bob));
      ok_high = ok_high && i_ea <= i_eb + 1e-12;
    }
    suite.add("min-information-side/low-loss", ok_low, "I(E;B) <= I(E;A) on [0,1/2)");
    suite.add("min-information-side/high-loss", ok_high, "I(E;A) <= I(E;B) on [1/2,1]");
  }

  {
    const double at_third = analysis::mutual_information(
        analysis::eve_joint(1.0 / 3.0, CheatStrategy::LowLoss, Party::Bob));
    const double below = analysis::mutual_information(
        analysis::eve_joint(1.0 / 3.0 - 0.05, CheatStrategy::LowLoss, Party::Bob));
    const double above = analysis::mutual_information(
        analysis::eve_joint(1.0 / 3.0 + 0.05, CheatStrategy::LowLoss, Party::Bob));
    suite.add("zero-information-point", at_third <= 1e-12 && below > 1e-4 && above > 1e-4,
              "I(E;B) at eta=1/3: " + format_number(at_third) + " (bound 1e-12); at 1/3 -/+ 0.05: " +
                  format_number(below) + ", " + format_number(above) + " (> 1e-4)");
  }

  {
    double worst = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double eta = 0.5 + i * 0.05;
      worst = std::max(worst, std::abs(analysis::secret_fraction(eta, refl, trans)));
    }
    suite.add("security-collapse-analytic", worst <= 1e-12,
              "max |secret fraction| on [1/2,1] " + format_number(worst) + ", bound 1e-12");
  }

  {
    bool raw_increasing = true, qkd_non_increasing = true;
    double prev_raw = analysis::raw_key_rate(0.0, refl, trans);
    double prev_qkd = analysis::secret_key_rate(0.0, refl, trans);
    for (int i = 1; i <= 100; ++i) {
      const double eta = i * 0.01;
      const double raw = analysis::raw_key_rate(eta, refl, trans);
      const double qkd = analysis::secret_key_rate(eta, refl, trans);
      raw_increasing = raw_increasing && raw > prev_raw;
      qkd_non_increasing = qkd_non_increasing && qkd <= prev_qkd + 1e-15;
      prev_raw = raw;
      prev_qkd = qkd;
    }
    suite.add("monotonicity/raw-rate", raw_increasing, "strictly increasing on the loss grid");
    suite.add("monotonicity/secret-rate", qkd_non_increasing,
              "non-increasing on the loss grid");
  }

  {
    const double eps = 1e-12;
    double worst = 0.0;
    for (Party party : {Party::Alice, Party::Bob}) {
      const double low =
          analysis::eve_joint(0.5 - eps, CheatStrategy::LowLoss, party).same();
      const double high = analysis::eve_joint(0.5, CheatStrategy::HighLoss, party).same();
      worst = std::max(worst, std::abs(low - high));
    }
    suite.add("strategy-boundary-continuity", worst <= 1e-9,
              "max joint discontinuity at eta=1/2: " + format_number(worst) + ", bound 1e-9");
  }

  // ---- (b) Monte Carlo against the closed forms ------------------------

  const std::uint64_t n = opts.n_rounds;
  std::vector<ExperimentTally> honest_grid;
  for (int i = 0; i <= 10; ++i) {
    const double eta = i * 0.1;
    StrategyConfig cfg = make_config(refl, eta, AdversaryMode::None, n,
                                     detail::derive_seed(opts.seed, 100 + i));
    honest_grid.push_back(run_experiment(cfg, {.threads = opts.threads}));
  }

  for (int i = 0; i <= 10; ++i) {
    const double eta = i * 0.1;
    const ExperimentTally& tally = honest_grid[static_cast<std::size_t>(i)];
    const double expected = analysis::raw_key_rate(eta, refl, trans);
    const analysis::Interval ci =
        analysis::binomial_interval(tally.stats.sifted, tally.stats.total_rounds,
                                    opts.confidence);
    suite.add("raw-key-rate/eta=" + format_number(eta), ci.contains(expected),
              "sifted fraction " +
                  format_number(static_cast<double>(tally.stats.sifted) /
                                static_cast<double>(tally.stats.total_rounds)) +
                  " vs analytic " + format_number(expected) + ", " + ci_label + " [" +
                  format_number(ci.lo) + ", " + format_number(ci.hi) + "]");
  }

  for (int i = 0; i <= 10; ++i) {
    const double eta = i * 0.1;
    const ExperimentTally& tally = honest_grid[static_cast<std::size_t>(i)];
    const std::uint64_t pairs = tally.ab_cells[0] + tally.ab_cells[1] + tally.ab_cells[2] +
                                tally.ab_cells[3];
    const std::uint64_t diff = tally.ab_cells[1] + tally.ab_cells[2];
    const double expected = analysis::ab_joint(eta).diff();
    const analysis::Interval ci = analysis::binomial_interval(diff, pairs, opts.confidence);
    suite.add("key-mismatch-rate/eta=" + format_number(eta), ci.contains(expected),
              "mismatch " + format_number(static_cast<double>(diff) / static_cast<double>(pairs)) +
                  " vs analytic " + format_number(expected) + ", " + ci_label + " [" +
                  format_number(ci.lo) + ", " + format_number(ci.hi) + "]");
  }

  for (const double eta : {0.3, 0.7}) {
    const ExperimentTally& tally = honest_grid[static_cast<std::size_t>(std::lround(eta * 10))];
    const analysis::CaseSiftProbabilities probs = analysis::case_probabilities(refl, trans);
    const double z1 = one_sample_z(tally.stats.case_no_loss_sifted, tally.stats.case_no_loss,
                                   probs.no_loss);
    const double z2 = one_sample_z(tally.stats.case_forward_loss_sifted,
                                   tally.stats.case_forward_loss, probs.forward_loss);
    const double z3 = one_sample_z(tally.stats.case_return_loss_sifted,
                                   tally.stats.case_return_loss, probs.return_loss);
    const double worst = std::max({z1, z2, z3});
    suite.add("case-sift-rates/eta=" + format_number(eta), worst <= 5.0,
              "worst |z| " + format_number(worst) + " across the three loss cases, bound 5");
  }

  const auto strategy_run = [&](double eta, std::uint64_t tag) {
    const AdversaryMode mode = eta < 0.5 ? AdversaryMode::StrategyI : AdversaryMode::StrategyII;
    StrategyConfig cfg = make_config(refl, eta, mode, n, detail::derive_seed(opts.seed, tag));
    RunOptions run_opts;
    run_opts.threads = opts.threads;
    if (opts.fault == FaultInjection::StrategyIIBlockProbability &&
        mode == AdversaryMode::StrategyII) {
      adversary::ActionProbabilities probs = adversary::action_probabilities(mode, eta);
      probs.block = std::min(1.0, probs.block + 0.04);
      probs.attack = 1.0 - probs.block;
      run_opts.action_override = probs;
    }
    return run_experiment(cfg, run_opts);
  };

  for (const double eta : {0.25, 0.75}) {
    const ExperimentTally tally = strategy_run(eta, 200 + static_cast<std::uint64_t>(eta * 100));
    const auto triple = detail::collapse_abe(tally.abe_cells);
    const std::uint64_t ea_same = triple.ae[0] + triple.ae[3];
    const double expected =
        analysis::eve_joint(eta, analysis::strategy_for(eta), Party::Alice).same();
    const analysis::Interval ci =
        analysis::binomial_interval(ea_same, triple.total, opts.confidence);
    suite.add("eve-alice-agreement/eta=" + format_number(eta), ci.contains(expected),
              "agreement " +
                  format_number(static_cast<double>(ea_same) / static_cast<double>(triple.total)) +
                  " vs analytic " + format_number(expected) + ", " + ci_label + " [" +
                  format_number(ci.lo) + ", " + format_number(ci.hi) + "]");

    const analysis::Interval d4_ci =
        analysis::binomial_interval(tally.d4_clicks, tally.attack_rounds, opts.confidence);
    suite.add("d4-click-rate/eta=" + format_number(eta), d4_ci.contains(refl / 2.0),
              "rate " +
                  format_number(static_cast<double>(tally.d4_clicks) /
                                static_cast<double>(tally.attack_rounds)) +
                  " vs R/2 = " + format_number(refl / 2.0) + ", " + ci_label + " [" +
                  format_number(d4_ci.lo) + ", " + format_number(d4_ci.hi) + "]");
  }

  {
    StrategyConfig cfg = make_config(refl, 0.5, AdversaryMode::ForcedAttack, n,
                                     detail::derive_seed(opts.seed, 300));
    const ExperimentTally tally = run_experiment(cfg, {.threads = opts.threads});
    const analysis::Interval ci = analysis::binomial_interval(
        tally.superposed_into_bob, tally.stats.total_rounds, opts.confidence);
    suite.add("forced-attack-effective-loss", ci.contains(0.5),
              "path-b survival toward the receiver " +
                  format_number(static_cast<double>(tally.superposed_into_bob) /
                                static_cast<double>(tally.stats.total_rounds)) +
                  " vs 1/2, " + ci_label + " [" + format_number(ci.lo) + ", " +
                  format_number(ci.hi) + "]");
  }

  for (const double eta : {0.5, 0.75, 1.0}) {
    const ExperimentTally tally = strategy_run(eta, 400 + static_cast<std::uint64_t>(eta * 100));
    const McEstimates est = estimate(tally, {}, opts.confidence,
                                     detail::derive_seed(opts.seed, 500));
    suite.add("secret-fraction-zero/eta=" + format_number(eta),
              est.secret_fraction_interval.contains(0.0),
              "MC secret fraction " + format_number(est.secret_fraction) + ", " + ci_label + " [" +
                  format_number(est.secret_fraction_interval.lo) + ", " +
                  format_number(est.secret_fraction_interval.hi) + "] must contain 0");
  }

  // ---- (c) statistical indistinguishability ----------------------------

  for (const double eta : {0.3, 0.5, 0.8}) {
    const ExperimentTally& honest =
        honest_grid[static_cast<std::size_t>(std::lround(eta * 10))];
    const ExperimentTally attacked =
        strategy_run(eta, 600 + static_cast<std::uint64_t>(eta * 100));
    const ObservableCounts ho = observables(honest);
    const ObservableCounts ao = observables(attacked);
    double worst = 0.0;
    std::string worst_name = "none";
    const auto consider = [&](const std::string& name, std::uint64_t k1, std::uint64_t n1,
                              std::uint64_t k2, std::uint64_t n2) {
      const double z = two_sample_z(k1, n1, k2, n2);
      if (z > worst) {
        worst = z;
        worst_name = name;
      }
    };
    for (std::size_t c = 0; c < ObservableCounts::kClasses; ++c) {
      consider(ObservableCounts::class_name(c), ho.clicks[c], ho.rounds, ao.clicks[c],
               ao.rounds);
    }
    consider("sifted-rate", ho.sifted, ho.rounds, ao.sifted, ao.rounds);
    consider("mismatch-rate", ho.mismatched, ho.sifted, ao.mismatched, ao.sifted);
    suite.add("attack-indistinguishability/eta=" + format_number(eta), worst <= 5.0,
              "worst statistic " + worst_name + " with |z| " + format_number(worst) +
                  ", bound 5");
  }

  return suite.checks;
}

}  // namespace cfqkd::sim
