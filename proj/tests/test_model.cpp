#include <doctest.h>

#include <cmath>
#include <random>

#include "probeflow/model.hpp"

using namespace probeflow;

TEST_CASE("speed laws evaluate by hand") {
  CHECK(SpeedLaw::greenshields(1.0).speed(1.0) == 0.0);
  CHECK(SpeedLaw::epsilon(0.0).speed(0.375) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(SpeedLaw::epsilon(1.0 / 3.0).speed(0.125) == doctest::Approx(175.0 / 192.0).epsilon(1e-15));
  CHECK_THROWS_AS(SpeedLaw::greenshields(1.0).speed(1.5), DomainError);
}

TEST_CASE("harmonic speed") {
  CHECK(harmonic_speed(0.5, 0.5) == 0.5);
  CHECK(harmonic_speed(0.0, 0.7) == 0.0);
  CHECK(harmonic_speed(0.2, 0.5) == doctest::Approx(0.2 / 0.7).epsilon(1e-15));
}

TEST_CASE("cutoff profile is a symmetric C1 bump") {
  const CutoffProfile chi(0.05, 0.15);
  CHECK(chi(0.0) == 1.0);
  CHECK(chi(0.05) == 1.0);
  CHECK(chi(0.15) == 0.0);
  CHECK(chi(0.1) == doctest::Approx(0.5));
  for (double xi = -0.2; xi <= 0.2; xi += 0.001) {
    CHECK(chi(xi) == chi(-xi));
    CHECK(chi(xi) >= 0.0);
    CHECK(chi(xi) <= 1.0);
  }
  const double h = 1e-9;
  for (double edge : {0.05, 0.15, -0.05, -0.15}) {
    const double left = (chi(edge) - chi(edge - h)) / h;
    const double right = (chi(edge + h) - chi(edge)) / h;
    CHECK(std::abs(left - right) < 1e-6);
  }
  CHECK_THROWS(CutoffProfile(0.2, 0.1));
}

TEST_CASE("encoded speed reduces to the examples") {
  const auto law = SpeedLaw::greenshields(1.0);
  const CutoffProfile chi(0.05, 0.15);
  std::vector<ProbeState> none;
  CHECK(encoded_speed(law, chi, std::span<const ProbeState>(none), 3.0, 0.3) == doctest::Approx(0.7));
  std::vector<ProbeState> stopped = {{0.0, 0.0}};
  CHECK(encoded_speed(law, chi, std::span<const ProbeState>(stopped), 0.01, 0.4) == 0.0);
  std::vector<ProbeState> half = {{0.0, 0.2}};
  const double expect = 0.5 * (2.0 * 0.2 * 0.5 / 0.7) + 0.5 * 0.5;
  CHECK(encoded_speed(law, chi, std::span<const ProbeState>(half), 0.1, 0.5) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("flux vanishes at the ends of the density range") {
  FluxModel m{SpeedLaw::greenshields(1.0), CutoffProfile(), {ProbeTrajectory(0.0, {{0, 1, SegmentMode::Speed, 0.3}})}};
  for (double x : {-1.0, 0.0, 0.07, 0.12}) {
    CHECK(eval_flux(m, 0.5, x, 0.0) == 0.0);
    CHECK(eval_flux(m, 0.5, x, 1.0) == 0.0);
  }
  FluxModel free{SpeedLaw::greenshields(1.0), CutoffProfile(), {}};
  CHECK(eval_flux(free, 0.0, 0.0, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("encoded speed stays within the harmonic envelope") {
  const auto law = SpeedLaw::greenshields(1.0);
  FluxModel m{law, CutoffProfile(), {ProbeTrajectory(0.0, {{0, 2, SegmentMode::Speed, 1.5}}),
                                     ProbeTrajectory(0.08, {{0, 2, SegmentMode::Speed, 0.1}})}};
  const double P = 1.5;
  const double cap = std::max(2.0 * P * 1.0 / (P + 1.0), 1.0);
  for (double x = -0.3; x <= 0.5; x += 0.01)
    for (double r = 0.0; r <= 1.0; r += 0.05) {
      const double v = eval_encoded_speed(m, 0.0, x, r);
      CHECK(v >= 0.0);
      CHECK(v <= cap + 1e-15);
    }
}

TEST_CASE("g function") {
  const auto law = SpeedLaw::greenshields(1.0);
  CHECK(eval_g(law, 0.3, 0.0) == 0.0);
  CHECK(eval_g(law, 1.0, 0.4) == 0.0);
  CHECK(eval_g(law, 0.5, 0.5) == doctest::Approx(0.125));
}

TEST_CASE("admissibility") {
  CHECK(check_admissible(SpeedLaw::greenshields(1.0)).all_pass());
  CHECK(check_admissible(SpeedLaw::epsilon(1.0 / 3.0)).all_pass());
  CHECK(check_admissible(SpeedLaw::epsilon(-1.0 / 3.0)).all_pass());
  // eps = 1 gives f = rho - rho^3, still concave but outside the family range.
  const auto wide = check_admissible(SpeedLaw::epsilon(1.0));
  CHECK_FALSE(wide.all_pass());
  CHECK(wide.concavity_pass());
  REQUIRE(wide.find("family_range") != nullptr);
  CHECK_FALSE(wide.find("family_range")->pass);
  // eps = -0.8: f''(1) = -2 - 4 eps > 0.
  const auto bad = check_admissible(SpeedLaw::epsilon(-0.8));
  REQUIRE(bad.find("flux_concave") != nullptr);
  CHECK_FALSE(bad.find("flux_concave")->pass);
  CHECK_FALSE(check_admissible(SpeedLaw::tabulated({1.0, 0.5, 0.2})).all_pass());
}

TEST_CASE("Lipschitz constants") {
  FluxModel free{SpeedLaw::greenshields(1.0), CutoffProfile(), {}};
  CHECK(lipschitz_constants(free).lip_x == 0.0);
  CHECK(lipschitz_constants(free).lip_rho == doctest::Approx(2.0));
  FluxModel one{SpeedLaw::greenshields(1.0), CutoffProfile(), {ProbeTrajectory(0.0, {{0, 1, SegmentMode::Speed, 1.0}})}};
  CHECK(lipschitz_constants(one).max_harmonic == doctest::Approx(1.0));
}

TEST_CASE("mixed difference constant") {
  // v constant: the mixed derivative c^2 / (q + c)^2 peaks at q = 0 with value 1.
  const auto flat = SpeedLaw::tabulated({0.7, 0.7});
  CHECK(mixed_difference_constant(flat, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
  const auto law = SpeedLaw::greenshields(1.0);
  CHECK(mixed_difference_constant(law, 0.0) == 0.0);

  const double B = mixed_difference_constant(law, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int k = 0; k < 10000; ++k) {
    const double r1 = u(rng), r2 = u(rng), q1 = u(rng), q2 = u(rng);
    const double mixed = eval_g(law, r1, q1) - eval_g(law, r1, q2) - eval_g(law, r2, q1) + eval_g(law, r2, q2);
    if (std::abs(mixed) > B * std::abs(r1 - r2) * std::abs(q1 - q2) * (1.0 + 1e-9)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("stability constant") {
  FluxModel free{SpeedLaw::greenshields(1.0), CutoffProfile(), {}};
  const auto c0 = stability_constant_C(free, 1.0);
  CHECK(c0.bounded);
  CHECK(c0.value == 0.0);

  FluxModel probe{SpeedLaw::greenshields(1.0), CutoffProfile(0.05, 0.15),
                  {ProbeTrajectory(0.0, {{0, 10, SegmentMode::Speed, 0.5}})}};
  const auto c1 = stability_constant_C(probe, 10.0);
  REQUIRE(c1.bounded);
  CHECK(c1.lip_speed == 0.0);
  // Frozen from the first evaluation.
  CHECK(c1.value == doctest::Approx(67.498650026999471).epsilon(1e-12));

  FluxModel jump{SpeedLaw::greenshields(1.0), CutoffProfile(),
                 {ProbeTrajectory(0.0, {{0, 1, SegmentMode::Speed, 0.5}, {1, 2, SegmentMode::Speed, 0.2}})}};
  CHECK_FALSE(stability_constant_C(jump, 2.0).bounded);
}

TEST_CASE("probe programs") {
  const ProbeTrajectory p(1.0, {{0, 2, SegmentMode::Speed, 0.5}, {3, 4, SegmentMode::Speed, 1.0}});
  CHECK(p.programmed_speed(1.0) == 0.5);
  CHECK(p.programmed_speed(2.5) == 0.0);
  CHECK(p.displacement(0.0, 4.0) == doctest::Approx(2.0));
  double last = p.state_at(0.0).x;
  for (double t = 0.0; t <= 4.0; t += 0.05) {
    CHECK(p.state_at(t).x >= last);
    last = p.state_at(t).x;
  }
  CHECK_THROWS(ProbeTrajectory(0.0, {{0, 1, SegmentMode::Speed, -0.1}}));
  CHECK_THROWS(ProbeTrajectory(0.0, {{0, 2, SegmentMode::Speed, 0.1}, {1, 3, SegmentMode::Speed, 0.2}}));
}
