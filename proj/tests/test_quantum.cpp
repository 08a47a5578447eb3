#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cfqkd/quantum.hpp"

using namespace cfqkd;
using namespace cfqkd::quantum;

namespace {

double born_frequency(double prob_a, std::uint64_t samples, std::uint64_t seed) {
  std::uint64_t in_a = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    RandomStream rng = RandomStream::for_stream(seed, i);
    const PathState s = PathState::superposed(std::sqrt(prob_a), std::sqrt(1.0 - prob_a),
                                              Polarization::V);
    if (erase_path_b(s, rng).kind == PathState::Kind::InPathA) ++in_a;
  }
  return static_cast<double>(in_a) / static_cast<double>(samples);
}

}  // namespace

TEST_CASE("polarization bits form a bijection") {
  CHECK(bit_of(Polarization::V) == 0);
  CHECK(bit_of(Polarization::H) == 1);
  CHECK(polarization_of_bit(0) == Polarization::V);
  CHECK(polarization_of_bit(1) == Polarization::H);
  CHECK(orthogonal(Polarization::V) == Polarization::H);
}

TEST_CASE("split_at_bs1 places sqrt(T) on path a and sqrt(R) on path b") {
  const PathState balanced = split_at_bs1(Polarization::V, 0.5, 0.5);
  CHECK(balanced.kind == PathState::Kind::Superposed);
  CHECK(balanced.amp_a.real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(balanced.amp_b.real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(balanced.pol == Polarization::V);

  const PathState skewed = split_at_bs1(Polarization::H, 0.25, 0.75);
  CHECK(skewed.amp_a.real() == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
  CHECK(skewed.amp_b.real() == doctest::Approx(std::sqrt(0.25)).epsilon(1e-15));
  CHECK(skewed.pol == Polarization::H);

  CHECK_THROWS_AS(split_at_bs1(Polarization::V, 1.1, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(split_at_bs1(Polarization::V, 0.5, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(split_at_bs1(Polarization::V, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("erase_path_b collapses by the Born rule and is identity off path b") {
  RandomStream rng(7);
  CHECK(erase_path_b(PathState::in_path_b(Polarization::H), rng).kind == PathState::Kind::Gone);
  const PathState in_a = PathState::in_path_a(Polarization::H);
  CHECK(erase_path_b(in_a, rng).kind == PathState::Kind::InPathA);
  CHECK(erase_path_b(PathState::gone(), rng).kind == PathState::Kind::Gone);

  // survivors keep their polarization
  for (int i = 0; i < 64; ++i) {
    RandomStream r = RandomStream::for_stream(11, static_cast<std::uint64_t>(i));
    const PathState out = erase_path_b(split_at_bs1(Polarization::H, 0.3, 0.7), r);
    if (out.kind == PathState::Kind::InPathA) CHECK(out.pol == Polarization::H);
  }
}

TEST_CASE("erase_path_b branch frequencies match the amplitudes" * doctest::timeout(60)) {
  constexpr std::uint64_t n = 1'000'000;
  for (const double t : {0.5, 0.75}) {
    const double freq = born_frequency(t, n, 20240811);
    const double sigma = std::sqrt(t * (1.0 - t) / static_cast<double>(n));
    CHECK(std::abs(freq - t) <= 5.0 * sigma);
  }
}

TEST_CASE("pbs_interact blocks the matching polarization and passes the other" *
          doctest::timeout(60)) {
  // matching basis: blocked with probability |amp_b|^2
  constexpr std::uint64_t n = 1'000'000;
  std::uint64_t blocked = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    RandomStream rng = RandomStream::for_stream(5, i);
    const PbsResult r = pbs_interact(split_at_bs1(Polarization::V, 0.3, 0.7), Polarization::V,
                                     rng);
    if (r.blocked_click) {
      ++blocked;
      CHECK(r.state.kind == PathState::Kind::InPathB);
    } else {
      CHECK(r.state.kind == PathState::Kind::InPathA);
    }
  }
  const double freq = static_cast<double>(blocked) / static_cast<double>(n);
  CHECK(std::abs(freq - 0.3) <= 5.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(n)));

  // orthogonal basis: untouched
  RandomStream rng(3);
  const PathState sup = split_at_bs1(Polarization::V, 0.4, 0.6);
  const PbsResult passed = pbs_interact(sup, Polarization::H, rng);
  CHECK(passed.blocked_click == false);
  CHECK(passed.state.kind == PathState::Kind::Superposed);
  CHECK(passed.state.amp_a == sup.amp_a);
  CHECK(passed.state.amp_b == sup.amp_b);

  // nothing in path b to block
  const PbsResult in_a = pbs_interact(PathState::in_path_a(Polarization::V), Polarization::V,
                                      rng);
  CHECK(in_a.blocked_click == false);
  CHECK(in_a.state.kind == PathState::Kind::InPathA);

  CHECK(pbs_interact(PathState::in_path_b(Polarization::V), Polarization::V, rng).blocked_click);
  CHECK_THROWS_AS(pbs_interact(PathState::gone(), Polarization::V, rng), std::invalid_argument);
}

TEST_CASE("interfere_at_bs2 on the canonical inputs") {
  // undisturbed superposition: D2 with certainty, destructive interference at
  // D1 is exact
  for (const double r : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    const OutcomeDistribution dist = interfere_at_bs2(split_at_bs1(Polarization::V, r, 1.0 - r),
                                                      r, 1.0 - r);
    CHECK(dist[Detector::D1] == 0.0);
    CHECK(dist[Detector::D2] == doctest::Approx(1.0).epsilon(1e-12));
    dist.require_normalized();
  }

  const OutcomeDistribution path_a =
      interfere_at_bs2(PathState::in_path_a(Polarization::H), 0.5, 0.5);
  CHECK(path_a[Detector::D1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(path_a[Detector::D2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(path_a.click_pol == Polarization::H);

  const OutcomeDistribution vacuum = interfere_at_bs2(PathState::gone(), 0.5, 0.5);
  CHECK(vacuum[Detector::None] == 1.0);
  vacuum.require_normalized();
}

TEST_CASE("bs2 convention is unitary for every splitter ratio") {
  for (int i = 1; i < 100; ++i) {
    const double r = i * 0.01;
    const double t = 1.0 - r;
    const double rt = std::sqrt(r), tt = std::sqrt(t);
    // columns of [[tt, rt], [rt, -tt]] must be orthonormal
    CHECK(std::abs(tt * tt + rt * rt - 1.0) <= 1e-12);
    CHECK(std::abs(rt * rt + tt * tt - 1.0) <= 1e-12);
    CHECK(std::abs(tt * rt - rt * tt) <= 1e-15);
  }
}

TEST_CASE("every outcome distribution reachable through the elements is normalized") {
  for (int i = 0; i < 200; ++i) {
    RandomStream rng = RandomStream::for_stream(99, static_cast<std::uint64_t>(i));
    const double r = 0.01 + 0.98 * rng.next_unit();
    const Polarization pol = polarization_of_bit(rng.coin());
    PathState s = split_at_bs1(pol, r, 1.0 - r);
    if (rng.coin()) s = erase_path_b(s, rng);
    if (s.kind != PathState::Kind::Gone) {
      s = pbs_interact(s, polarization_of_bit(rng.coin()), rng).state;
    }
    if (s.kind == PathState::Kind::InPathB) continue;  // absorbed at the side detector
    const OutcomeDistribution dist = interfere_at_bs2(s, r, 1.0 - r);
    CHECK(std::abs(dist.total() - 1.0) <= 1e-12);
  }
}

TEST_CASE("mixed state validity: hermiticity, trace, positivity") {
  const MixedState vac = MixedState::basis_projector(MixedState::kVacuumIndex);
  CHECK(vac.is_valid());
  CHECK(vac.min_eigenvalue() >= -1e-14);

  std::array<Complex, 5> amp{};
  amp[MixedState::basis_index(false, Polarization::V)] = std::sqrt(0.5);
  amp[MixedState::basis_index(true, Polarization::V)] = std::sqrt(0.5);
  const MixedState pure = MixedState::pure(amp);
  CHECK(pure.is_valid());
  CHECK(pure.trace() == doctest::Approx(1.0).epsilon(1e-14));

  MixedState bad = vac;
  bad.at(1, 1) = 0.5;
  bad.at(0, 0) = 0.5;
  bad.at(0, 1) = Complex(0.0, 0.4);  // not hermitian
  CHECK_FALSE(bad.is_valid());

  MixedState negative;
  negative.at(0, 0) = 1.5;
  negative.at(1, 1) = -0.5;
  CHECK(negative.hermiticity_error() <= 1e-15);
  CHECK(negative.min_eigenvalue() < -1e-10);
  CHECK_FALSE(negative.is_valid());
  CHECK_THROWS_AS(negative.require_valid("test"), std::invalid_argument);
}

TEST_CASE("jacobi eigenvalues on known spectra") {
  MixedState uniform;
  for (std::size_t i = 0; i < 5; ++i) uniform.at(i, i) = 0.2;
  CHECK(uniform.min_eigenvalue() == doctest::Approx(0.2).epsilon(1e-12));

  std::array<Complex, 5> amp{};
  amp[1] = std::sqrt(0.5);
  amp[3] = std::sqrt(0.5);
  const MixedState rho = quantum::mix({{0.3, MixedState::pure(amp)},
                                       {0.7, MixedState::basis_projector(0)}});
  // spectrum {0.7, 0.3, 0, 0, 0}
  CHECK(rho.min_eigenvalue() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mix validates weights and is linear") {
  const MixedState a = MixedState::basis_projector(0);
  const MixedState b = MixedState::basis_projector(1);

  const MixedState identity_mixture = mix({{1.0, a}});
  CHECK(density_distance(identity_mixture, a) == 0.0);

  CHECK_THROWS_AS(mix({{0.5, a}, {0.6, b}}), std::invalid_argument);
  CHECK_THROWS_AS(mix({{-0.1, a}, {1.1, b}}), std::invalid_argument);

  const MixedState m = mix({{0.25, a}, {0.75, b}});
  CHECK(m.at(0, 0).real() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.at(1, 1).real() == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("mix is order-independent within tolerance") {
  std::array<Complex, 5> amp{};
  amp[1] = std::sqrt(0.4);
  amp[3] = -std::sqrt(0.6);
  const std::vector<std::pair<double, MixedState>> parts = {
      {0.2, MixedState::basis_projector(0)},
      {0.3, MixedState::pure(amp)},
      {0.5, MixedState::basis_projector(2)},
  };
  const std::vector<std::pair<double, MixedState>> permuted = {parts[2], parts[0], parts[1]};
  const MixedState lhs = mix(std::span<const std::pair<double, MixedState>>(parts));
  const MixedState rhs = mix(std::span<const std::pair<double, MixedState>>(permuted));
  CHECK(density_distance(lhs, rhs) <= 1e-12);
}

TEST_CASE("density_distance on hand-written matrices") {
  std::array<Complex, 5> amp{};
  amp[MixedState::basis_index(false, Polarization::V)] = std::sqrt(0.5);
  amp[MixedState::basis_index(true, Polarization::V)] = std::sqrt(0.5);
  const MixedState pure = MixedState::pure(amp);
  const MixedState vac = MixedState::basis_projector(MixedState::kVacuumIndex);

  CHECK(density_distance(pure, pure) == 0.0);

  // against the vacuum projector the vacuum diagonal differs by 1 (0 vs 1),
  // the largest entry difference
  CHECK(density_distance(pure, vac) == doctest::Approx(1.0).epsilon(1e-15));

  // against the erased mixture (R vacuum + T path-a) the largest differing
  // entries are the 0.5 off-diagonals and the half-empty diagonals
  const MixedState erased = mix({{0.5, vac},
                                 {0.5, MixedState::basis_projector(
                                           MixedState::basis_index(false, Polarization::V))}});
  CHECK(density_distance(pure, erased) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("random streams are reproducible and uniform-ish") {
  RandomStream a = RandomStream::for_stream(42, 7);
  RandomStream b = RandomStream::for_stream(42, 7);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  RandomStream c = RandomStream::for_stream(42, 8);
  bool any_different = false;
  RandomStream a2 = RandomStream::for_stream(42, 7);
  for (int i = 0; i < 16; ++i) any_different = any_different || (a2.next_u64() != c.next_u64());
  CHECK(any_different);

  RandomStream u(123);
  double sum = 0.0;
  constexpr int n = 100'000;
  for (int i = 0; i < n; ++i) sum += u.next_unit();
  CHECK(std::abs(sum / n - 0.5) <= 5.0 * std::sqrt(1.0 / 12.0 / n));

  RandomStream e(9);
  CHECK_FALSE(e.bernoulli(0.0));
  CHECK(e.bernoulli(1.0));
}
