#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfqkd::analysis {

inline constexpr double kTol = 1e-12;

namespace detail {

inline void require_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(what) + ": value must lie in [0,1]");
  }
}

inline void require_splitter(double reflectivity, double transmissivity, const char* who) {
  if (!(reflectivity >= 0.0 && reflectivity <= 1.0) ||
      std::abs(reflectivity + transmissivity - 1.0) > kTol) {
    throw std::domain_error(std::string(who) + ": need R in [0,1] and R + T = 1");
  }
}

// p*log2(p) with the 0*log0 = 0 convention.
inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace detail

/// 2x2 joint probability table over two parties' key bits.
struct JointDistribution {
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;

  double same() const { return p00 + p11; }
  double diff() const { return p01 + p10; }

  void require_valid() const {
    if (p00 < 0.0 || p01 < 0.0 || p10 < 0.0 || p11 < 0.0 ||
        std::abs(p00 + p01 + p10 + p11 - 1.0) > kTol) {
      throw std::domain_error("JointDistribution: cells must be non-negative and sum to 1");
    }
  }

  /// Bit-symmetric table: agreement mass split over (0,0) and (1,1),
  /// disagreement mass over (0,1) and (1,0).
  static JointDistribution symmetric(double p_same) {
    detail::require_unit_interval(p_same, "JointDistribution::symmetric");
    const double s = p_same / 2.0;
    const double d = (1.0 - p_same) / 2.0;
    return {s, d, d, s};
  }

  /// Relabels the first party's bits (0 <-> 1).
  JointDistribution with_first_flipped() const { return {p10, p11, p00, p01}; }
};

// ---------------------------------------------------------------------------
// Honest protocol under one-way loss eta on each segment
// ---------------------------------------------------------------------------

/// Sift probabilities conditioned on the channel's per-round loss pattern:
/// no loss on either segment, loss on the forward segment, loss on the
/// return segment only.
struct CaseSiftProbabilities {
  double no_loss = 0.0;       // RT/2: bases must match before the blocking measurement pays off
  double forward_loss = 0.0;  // RT: the surviving path-a photon alone decides
  double return_loss = 0.0;   // RT: both basis branches sift at the same rate
};

inline CaseSiftProbabilities case_probabilities(double reflectivity, double transmissivity) {
  detail::require_splitter(reflectivity, transmissivity, "case_probabilities");
  const double rt = reflectivity * transmissivity;
  return {rt / 2.0, rt, rt};
}

/// Raw-key bits per source photon: the loss-pattern cases weighted by
/// (1-eta)^2, eta and (1-eta)*eta collapse to (1 + 2*eta - eta^2)/2 * T*R.
inline double raw_key_rate(double eta, double reflectivity, double transmissivity) {
  detail::require_unit_interval(eta, "raw_key_rate");
  detail::require_splitter(reflectivity, transmissivity, "raw_key_rate");
  return (1.0 + 2.0 * eta - eta * eta) / 2.0 * transmissivity * reflectivity;
}

/// Joint distribution of the two honest parties' sifted bits. Agreement
/// probability 1/(1 + 2*eta - eta^2); only the no-loss case is error-free.
inline JointDistribution ab_joint(double eta) {
  detail::require_unit_interval(eta, "ab_joint");
  const double denom = 1.0 + 2.0 * eta - eta * eta;
  return JointDistribution::symmetric(1.0 / denom);
}

// ---------------------------------------------------------------------------
// Interception strategies
// ---------------------------------------------------------------------------

/// Closed-form model of the interceptor: one strategy imitates loss below
/// one half, the other loss at or above one half.
enum class CheatStrategy : std::uint8_t { LowLoss, HighLoss };

inline CheatStrategy strategy_for(double eta) {
  detail::require_unit_interval(eta, "strategy_for");
  return eta < 0.5 ? CheatStrategy::LowLoss : CheatStrategy::HighLoss;
}

enum class Party : std::uint8_t { Alice, Bob };

/// Per-photon key rate of one component of the low-loss strategy, split by
/// agreement with each party.
struct ComponentRates {
  double total = 0.0;
  double ea_same = 0.0, ea_diff = 0.0;
  double eb_same = 0.0, eb_diff = 0.0;
};

/// The low-loss strategy's cheated-key components: rounds the interceptor
/// skipped (she guesses), attacked rounds whose basis matched the source
/// polarization (her bit is always wrong against the sender), and attacked
/// rounds whose basis differed (her bit always matches the sender).
struct LowLossComponentRates {
  ComponentRates guessed;
  ComponentRates basis_matched;
  ComponentRates basis_differed;

  double total() const { return guessed.total + basis_matched.total + basis_differed.total; }
};

inline LowLossComponentRates strategy1_component_rates(double eta, double reflectivity,
                                                       double transmissivity) {
  detail::require_splitter(reflectivity, transmissivity, "strategy1_component_rates");
  if (!(eta >= 0.0 && eta < 0.5)) {
    throw std::domain_error("strategy1_component_rates: defined for loss below 1/2");
  }
  const double rt = reflectivity * transmissivity;
  LowLossComponentRates c;

  c.guessed.total = (1.0 - eta - 2.0 * eta * eta) / 2.0 * rt;
  c.guessed.ea_same = c.guessed.ea_diff = c.guessed.total / 2.0;
  c.guessed.eb_same = c.guessed.eb_diff = c.guessed.total / 2.0;

  c.basis_matched.total = eta * rt;
  c.basis_matched.ea_same = 0.0;
  c.basis_matched.ea_diff = eta * rt;
  c.basis_matched.eb_same = c.basis_matched.eb_diff = eta / 2.0 * rt;

  c.basis_differed.total = (eta + eta * eta) / 2.0 * rt;
  c.basis_differed.ea_same = c.basis_differed.total;
  c.basis_differed.ea_diff = 0.0;
  c.basis_differed.eb_same = eta * (1.0 - eta) / 2.0 * rt;
  c.basis_differed.eb_diff = eta * eta * rt;

  return c;
}

/// The high-loss strategy's cheated-key rate, assembled from its own action
/// fractions (a 2*(1-eta) attack share plus full blocks); it equals the
/// honest parties' raw-key rate.
inline double strategy2_cheated_rate(double eta, double reflectivity, double transmissivity) {
  detail::require_splitter(reflectivity, transmissivity, "strategy2_cheated_rate");
  if (!(eta >= 0.5 && eta <= 1.0)) {
    throw std::domain_error("strategy2_cheated_rate: defined for loss at or above 1/2");
  }
  const double rt = reflectivity * transmissivity;
  const double attacked_matched = eta * rt;                      // low-loss strategy's rate
  const double attacked_differed = (eta + eta * eta) / 2.0 * rt;  // ditto
  return (1.0 - eta) / eta * (attacked_matched + attacked_differed) + (2.0 * eta - 1.0) * rt;
}

/// Closed-form joint of the interceptor's key with one party's key, for the
/// strategy matching the loss regime.
inline JointDistribution eve_joint(double eta, CheatStrategy strategy, Party party) {
  const double denom = 1.0 + 2.0 * eta - eta * eta;
  double same = 0.0;
  if (strategy == CheatStrategy::LowLoss) {
    if (!(eta >= 0.0 && eta < 0.5)) {
      throw std::domain_error("eve_joint: the low-loss strategy needs loss below 1/2");
    }
    same = party == Party::Alice ? (1.0 + eta) / (2.0 * denom)
                                 : (1.0 + 3.0 * eta - 4.0 * eta * eta) / (2.0 * denom);
  } else {
    if (!(eta >= 0.5 && eta <= 1.0)) {
      throw std::domain_error("eve_joint: the high-loss strategy needs loss at or above 1/2");
    }
    same = party == Party::Alice ? (2.0 * eta - eta * eta) / denom
                                 : (1.0 - eta + eta * eta) / denom;
  }
  return JointDistribution::symmetric(same);
}

// ---------------------------------------------------------------------------
// Information measures
// ---------------------------------------------------------------------------

/// Mutual information in bits, 0*log0 terms dropped. Joint-entropy terms are
/// summed over value-sorted cells, so relabeling either party's bits leaves
/// the result bit-identical; tiny negative rounding residue clamps to zero.
inline double mutual_information(const JointDistribution& j) {
  j.require_valid();
  const double a0 = j.p00 + j.p01;
  const double a1 = j.p10 + j.p11;
  const double b0 = j.p00 + j.p10;
  const double b1 = j.p01 + j.p11;
  std::array<double, 4> cells{j.p00, j.p01, j.p10, j.p11};
  std::sort(cells.begin(), cells.end());
  double h_joint = 0.0;
  for (double c : cells) h_joint -= detail::plogp(c);
  const double h_a = -(detail::plogp(a0) + detail::plogp(a1));
  const double h_b = -(detail::plogp(b0) + detail::plogp(b1));
  return std::max(0.0, h_a + h_b - h_joint);
}

inline double binary_entropy(double p) {
  detail::require_unit_interval(p, "binary_entropy");
  return -(detail::plogp(p) + detail::plogp(1.0 - p));
}

/// Fraction of the raw key extractable as secret key under one-way
/// postprocessing: I(A;B) minus the better-informed of the interceptor's two
/// mutual informations, with the strategy chosen by the loss regime. Not
/// clamped; a non-positive value means nothing is extractable.
inline double secret_fraction(double eta, double reflectivity, double transmissivity) {
  detail::require_unit_interval(eta, "secret_fraction");
  detail::require_splitter(reflectivity, transmissivity, "secret_fraction");
  const CheatStrategy strategy = strategy_for(eta);
  const double i_ab = mutual_information(ab_joint(eta));
  const double i_ea = mutual_information(eve_joint(eta, strategy, Party::Alice));
  const double i_eb = mutual_information(eve_joint(eta, strategy, Party::Bob));
  return i_ab - std::min(i_ea, i_eb);
}

/// Secret-key bits per source photon: raw rate times the clamped secret
/// fraction.
inline double secret_key_rate(double eta, double reflectivity, double transmissivity) {
  return raw_key_rate(eta, reflectivity, transmissivity) *
         std::max(secret_fraction(eta, reflectivity, transmissivity), 0.0);
}

// ---------------------------------------------------------------------------
// Statistical plumbing for the Monte Carlo comparisons
// ---------------------------------------------------------------------------

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie strictly inside (0,1)");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

struct Interval {
  double lo = 0.0, hi = 0.0;
  double half_width() const { return (hi - lo) / 2.0; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Two-sided binomial proportion interval: normal approximation around the
/// point estimate plus a 1/(2n) continuity correction, clipped to [0,1].
inline Interval binomial_interval(std::uint64_t successes, std::uint64_t trials,
                                  double confidence) {
  if (trials == 0 || successes > trials) {
    throw std::domain_error("binomial_interval: need 0 <= successes <= trials, trials > 0");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::domain_error("binomial_interval: confidence must lie in (0,1)");
  }
  const double n = static_cast<double>(trials);
  const double p_hat = static_cast<double>(successes) / n;
  const double z = normal_quantile(0.5 + confidence / 2.0);
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / n) + 0.5 / n;
  return {std::max(0.0, p_hat - half), std::min(1.0, p_hat + half)};
}

}  // namespace cfqkd::analysis
