#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>

#include "cfqkd/rng.hpp"

namespace cfqkd::quantum {

using Complex = std::complex<double>;

// Tolerance for algebraic identities (normalization, hermiticity, traces).
inline constexpr double kAlgebraTol = 1e-12;
// Eigenvalue floor for positive-semidefinite checks; absorbs accumulated
// rounding in mixture assembly.
inline constexpr double kEigenFloor = -1e-10;

enum class Polarization : std::uint8_t { V = 0, H = 1 };

constexpr int bit_of(Polarization p) noexcept { return p == Polarization::H ? 1 : 0; }

constexpr Polarization polarization_of_bit(int bit) noexcept {
  return bit ? Polarization::H : Polarization::V;
}

constexpr Polarization orthogonal(Polarization p) noexcept {
  return p == Polarization::V ? Polarization::H : Polarization::V;
}

inline char symbol_of(Polarization p) noexcept { return p == Polarization::V ? 'V' : 'H'; }

/// Single-photon dual-rail state with a classical polarization label.
/// Path a never leaves the sender's site; path b is the public channel
/// segment. Polarization stays a definite label for the whole round: every
/// element in the layout preserves, filters, or absorbs it.
struct PathState {
  enum class Kind : std::uint8_t { Superposed, InPathA, InPathB, Gone };

  Kind kind = Kind::Gone;
  Complex amp_a{};  // path-a amplitude (Superposed only)
  Complex amp_b{};  // path-b amplitude (Superposed only)
  Polarization pol = Polarization::V;  // meaningless for Gone

  static PathState superposed(Complex amp_a, Complex amp_b, Polarization pol) {
    const double total = std::norm(amp_a) + std::norm(amp_b);
    if (std::abs(total - 1.0) > kAlgebraTol) {
      throw std::invalid_argument("PathState::superposed: amplitudes must be normalized");
    }
    return {Kind::Superposed, amp_a, amp_b, pol};
  }
  static PathState in_path_a(Polarization pol) { return {Kind::InPathA, {}, {}, pol}; }
  static PathState in_path_b(Polarization pol) { return {Kind::InPathB, {}, {}, pol}; }
  static PathState gone() { return {}; }

  double prob_a() const noexcept { return std::norm(amp_a); }
  double prob_b() const noexcept { return std::norm(amp_b); }
};

enum class Detector : std::uint8_t { D1 = 0, D2 = 1, D3 = 2, D4 = 3, None = 4 };
inline constexpr std::size_t kDetectorCount = 5;

/// Click probabilities for one measurement stage, plus the polarization any
/// click would report (all detectors resolve polarization).
struct OutcomeDistribution {
  std::array<double, kDetectorCount> p{};
  Polarization click_pol = Polarization::V;

  double& operator[](Detector d) { return p[static_cast<std::size_t>(d)]; }
  double operator[](Detector d) const { return p[static_cast<std::size_t>(d)]; }

  double total() const {
    double sum = 0.0;
    for (double v : p) sum += v;
    return sum;
  }

  void require_normalized() const {
    if (std::abs(total() - 1.0) > kAlgebraTol) {
      throw std::logic_error("OutcomeDistribution: probabilities must sum to 1");
    }
  }

  Detector sample(RandomStream& rng) const {
    const double u = rng.next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < kDetectorCount; ++i) {
      acc += p[i];
      if (u < acc) return static_cast<Detector>(i);
    }
    return Detector::None;
  }
};

namespace detail {

inline void require_splitter(double reflectivity, double transmissivity, const char* who) {
  if (!(reflectivity > 0.0 && reflectivity < 1.0) ||
      std::abs(reflectivity + transmissivity - 1.0) > kAlgebraTol) {
    throw std::invalid_argument(std::string(who) + ": need R in (0,1) and R + T = 1");
  }
}

}  // namespace detail

/// First beam splitter. A definite-polarization photon splits into
/// sqrt(T) on path a and sqrt(R) on path b, real non-negative amplitudes.
/// (Phase convention: see interfere_at_bs2.)
inline PathState split_at_bs1(Polarization pol, double reflectivity, double transmissivity) {
  detail::require_splitter(reflectivity, transmissivity, "split_at_bs1");
  return PathState::superposed(std::sqrt(transmissivity), std::sqrt(reflectivity), pol);
}

/// Removes the path-b pulse (channel loss or a deliberate block): a
/// superposed state collapses by the Born rule, a pulse entirely in path b is
/// destroyed, and states with nothing in path b pass through unchanged.
inline PathState erase_path_b(const PathState& state, RandomStream& rng) {
  switch (state.kind) {
    case PathState::Kind::Superposed:
      return rng.bernoulli(state.prob_a()) ? PathState::in_path_a(state.pol) : PathState::gone();
    case PathState::Kind::InPathB:
      return PathState::gone();
    default:
      return state;
  }
}

struct PbsResult {
  PathState state;
  bool blocked_click = false;  // the path-b component hit the side detector
};

/// Polarizing beam splitter at the receiver. The basis polarization in path b
/// is deflected to the side detector (a blocking measurement); the orthogonal
/// polarization passes completely untouched.
inline PbsResult pbs_interact(const PathState& state, Polarization pbs_basis, RandomStream& rng) {
  if (state.kind == PathState::Kind::Gone) {
    throw std::invalid_argument("pbs_interact: no photon left in either path");
  }
  if (pbs_basis != state.pol) return {state, false};
  switch (state.kind) {
    case PathState::Kind::Superposed:
      if (rng.bernoulli(state.prob_b())) return {PathState::in_path_b(state.pol), true};
      return {PathState::in_path_a(state.pol), false};
    case PathState::Kind::InPathB:
      return {state, true};
    default:
      return {state, false};  // nothing in path b to block
  }
}

/// Second beam splitter, where the two rails recombine. Convention: the
/// unitary [[sqrt(T), sqrt(R)], [sqrt(R), -sqrt(T)]] maps (path a, path b)
/// onto (D2, D1). An undisturbed round therefore interferes into D2 with
/// certainty, and a photon known to be in path a splits R:T between D1 and
/// D2. Both splitters share the same R and T.
inline OutcomeDistribution interfere_at_bs2(const PathState& state, double reflectivity,
                                            double transmissivity) {
  detail::require_splitter(reflectivity, transmissivity, "interfere_at_bs2");
  OutcomeDistribution out;
  switch (state.kind) {
    case PathState::Kind::Gone:
      out[Detector::None] = 1.0;
      break;
    case PathState::Kind::Superposed: {
      const double root_r = std::sqrt(reflectivity);
      const double root_t = std::sqrt(transmissivity);
      const Complex to_d2 = root_t * state.amp_a + root_r * state.amp_b;
      const Complex to_d1 = root_r * state.amp_a - root_t * state.amp_b;
      out[Detector::D1] = std::norm(to_d1);
      out[Detector::D2] = std::norm(to_d2);
      out.click_pol = state.pol;
      break;
    }
    case PathState::Kind::InPathA:
      out[Detector::D1] = reflectivity;
      out[Detector::D2] = transmissivity;
      out.click_pol = state.pol;
      break;
    case PathState::Kind::InPathB:
      out[Detector::D1] = transmissivity;
      out[Detector::D2] = reflectivity;
      out.click_pol = state.pol;
      break;
  }
  return out;
}

namespace detail {

// Smallest eigenvalue of a 5x5 Hermitian matrix via cyclic Jacobi sweeps on
// the real symmetric embedding [[Re, -Im], [Im, Re]], whose spectrum is the
// Hermitian spectrum doubled.
inline double min_eigenvalue_hermitian5(const std::array<Complex, 25>& m) {
  constexpr std::size_t n = 10;
  std::array<double, n * n> a{};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double re = m[i * 5 + j].real();
      const double im = m[i * 5 + j].imag();
      a[i * n + j] = re;
      a[i * n + (j + 5)] = -im;
      a[(i + 5) * n + j] = im;
      a[(i + 5) * n + (j + 5)] = re;
    }
  }
  // Symmetrize to protect against inputs that are only Hermitian to rounding.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a[i * n + j] + a[j * n + i]);
      a[i * n + j] = avg;
      a[j * n + i] = avg;
    }
  }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(a[i * n + j]));
    }
    if (off < 1e-14) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  double min_eig = a[0];
  for (std::size_t i = 1; i < n; ++i) min_eig = std::min(min_eig, a[i * n + i]);
  return min_eig;
}

}  // namespace detail

/// Density matrix over the five-dimensional single-photon space
/// {vacuum, path-a V, path-a H, path-b V, path-b H}.
class MixedState {
 public:
  static constexpr std::size_t kDim = 5;
  static constexpr std::size_t kVacuumIndex = 0;

  static constexpr std::size_t basis_index(bool in_path_b, Polarization pol) noexcept {
    return 1 + (in_path_b ? 2 : 0) + static_cast<std::size_t>(bit_of(pol));
  }

  MixedState() = default;

  Complex& at(std::size_t row, std::size_t col) { return m_[row * kDim + col]; }
  const Complex& at(std::size_t row, std::size_t col) const { return m_[row * kDim + col]; }

  static MixedState pure(const std::array<Complex, kDim>& amplitude) {
    double total = 0.0;
    for (const Complex& a : amplitude) total += std::norm(a);
    if (std::abs(total - 1.0) > kAlgebraTol) {
      throw std::invalid_argument("MixedState::pure: amplitudes must be normalized");
    }
    MixedState rho;
    for (std::size_t i = 0; i < kDim; ++i) {
      for (std::size_t j = 0; j < kDim; ++j) {
        rho.at(i, j) = amplitude[i] * std::conj(amplitude[j]);
      }
    }
    return rho;
  }

  static MixedState basis_projector(std::size_t index) {
    if (index >= kDim) throw std::out_of_range("MixedState::basis_projector: bad index");
    MixedState rho;
    rho.at(index, index) = 1.0;
    return rho;
  }

  double trace() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) sum += at(i, i).real();
    return sum;
  }

  double hermiticity_error() const {
    double err = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) {
      for (std::size_t j = 0; j < kDim; ++j) {
        err = std::max(err, std::abs(at(i, j) - std::conj(at(j, i))));
      }
    }
    return err;
  }

  double min_eigenvalue() const { return detail::min_eigenvalue_hermitian5(m_); }

  bool is_valid() const {
    return hermiticity_error() <= kAlgebraTol && std::abs(trace() - 1.0) <= kAlgebraTol &&
           min_eigenvalue() >= kEigenFloor;
  }

  void require_valid(const char* context) const {
    if (!is_valid()) {
      throw std::invalid_argument(std::string(context) +
                                  ": not a valid density matrix (hermiticity/trace/positivity)");
    }
  }

 private:
  std::array<Complex, kDim * kDim> m_{};
};

/// Convex mixture of density matrices. Weights must be non-negative and sum
/// to one; components and the result must satisfy the density-matrix
/// invariants.
inline MixedState mix(std::span<const std::pair<double, MixedState>> components) {
  if (components.empty()) throw std::invalid_argument("mix: no components");
  double total_weight = 0.0;
  for (const auto& [weight, rho] : components) {
    if (weight < 0.0) throw std::invalid_argument("mix: negative weight");
    total_weight += weight;
    rho.require_valid("mix component");
  }
  if (std::abs(total_weight - 1.0) > kAlgebraTol) {
    throw std::invalid_argument("mix: weights must sum to 1");
  }
  MixedState out;
  for (const auto& [weight, rho] : components) {
    for (std::size_t i = 0; i < MixedState::kDim; ++i) {
      for (std::size_t j = 0; j < MixedState::kDim; ++j) {
        out.at(i, j) += weight * rho.at(i, j);
      }
    }
  }
  out.require_valid("mix result");
  return out;
}

inline MixedState mix(std::initializer_list<std::pair<double, MixedState>> components) {
  return mix(std::span<const std::pair<double, MixedState>>(components.begin(), components.size()));
}

/// Largest absolute entrywise difference; zero iff the matrices agree within
/// representation.
inline double density_distance(const MixedState& a, const MixedState& b) {
  a.require_valid("density_distance lhs");
  b.require_valid("density_distance rhs");
  double dist = 0.0;
  for (std::size_t i = 0; i < MixedState::kDim; ++i) {
    for (std::size_t j = 0; j < MixedState::kDim; ++j) {
      dist = std::max(dist, std::abs(a.at(i, j) - b.at(i, j)));
    }
  }
  return dist;
}

}  // namespace cfqkd::quantum
