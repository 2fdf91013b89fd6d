#include <doctest.h>

#include <cmath>

#include "probeflow/inverse.hpp"

using namespace probeflow;

namespace {

Scenario flat_road(double rho, double probe_speed, double T) {
  Scenario s;
  s.name = "flat";
  s.x_min = -1.0;
  s.x_max = 3.0;
  s.T = T;
  s.dx = 0.01;
  s.background = rho;
  s.snapshots = 3;
  s.passive_probes = true;
  s.probes = {ProbeTrajectory(0.0, {{0.0, T, SegmentMode::Speed, probe_speed}})};
  return s;
}

}  // namespace

TEST_CASE("error functional") {
  const auto law = SpeedLaw::greenshields(1.0);
  auto s = flat_road(0.5, 0.5, 1.0);
  CHECK(error_functional(run(s), 0, law).value <= 1e-15);
  s = flat_road(0.5, 0.2, 1.0);
  CHECK(error_functional(run(s), 0, law).value == doctest::Approx(0.3).epsilon(1e-12));

  auto coupled = builtin("fig_int3");
  coupled.dx = 0.01;
  const auto r = run(coupled);
  CHECK(error_functional(r, 0, coupled.law).value <= 1e-10 * coupled.T);
}

TEST_CASE("phi on the Riemann datum") {
  const auto pos = phi_epsilon(0.1, 1.0);
  CHECK(pos.computed == doctest::Approx(0.3859375).epsilon(1e-15));
  CHECK(pos.branch == "eps>0");
  CHECK(pos.agree);

  const auto zero = phi_epsilon(0.0, 1.0);
  CHECK(zero.computed == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(zero.paper_formula == doctest::Approx(1.125));
  CHECK(zero.branch == "eps<=0");
  CHECK_FALSE(zero.agree);

  const auto lim = phi_one_sided_limits();
  CHECK(lim.plus == doctest::Approx(0.375).epsilon(1e-9));
  CHECK(lim.minus == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(lim.plus - lim.minus >= 0.25 - 1e-9);
  CHECK_THROWS_AS(phi_epsilon(0.5, 1.0), DomainError);
}

TEST_CASE("E on a flat road is piecewise linear in V") {
  const auto s = flat_road(0.5, 0.3, 1.0);
  for (double V : {0.2, 0.6, 1.0, 1.7})
    CHECK(evaluate_E(s, V) == doctest::Approx(std::abs(0.3 - 0.5 * V)).epsilon(1e-10));
  const auto samples = scan_E(s, 0.2, 1.8, 9);
  CHECK(samples.size() == 9);
  const auto best = minimize_E(samples, [&](double V) { return evaluate_E(s, V); }, 40);
  CHECK_FALSE(best.boundary);
  CHECK(best.V == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("monotone E gives a flagged boundary minimum") {
  const auto s = flat_road(0.5, 0.05, 1.0);
  const auto samples = scan_E(s, 0.2, 1.0, 5);
  const auto best = minimize_E(samples, [&](double V) { return evaluate_E(s, V); }, 10);
  CHECK(best.boundary);
  CHECK(best.V == 0.2);
  CHECK(best.evaluations == 0);
}

TEST_CASE("golden section search") {
  int evals = 0;
  const auto [x, fx] = golden_section([](double v) { return (v - 0.3) * (v - 0.3); }, 0.0, 1.0, 60, &evals);
  CHECK(x == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(fx <= 1e-15);
  CHECK(evals > 0);
}

TEST_CASE("planted truth is recovered") {
  const auto planted = plant_truth(planted_base(), 1.2);
  const auto samples = scan_E(planted, 0.6, 2.0, 15);
  const auto best = minimize_E(samples, [&](double V) { return evaluate_E(planted, V); }, 20);
  CHECK(std::abs(best.V - 1.2) <= (2.0 - 0.6) / 15 + 1e-3);
  const auto mb = modulus_bound(planted, 0.6, 2.0, 0.44);
  CHECK(mb.compliant);
  CHECK(max_difference_quotient(samples) <= mb.bound);
}

TEST_CASE("rescaling identity") {
  const std::vector<DatumBlock> datum = {{0.0, 2.0, 0.375}};
  CHECK(rescaling_check(1.0, 1.0, datum, 0.125, -1.0, 2.0, 1.0, 5e-3).discrepancy <= 1e-14);
  const auto a = rescaling_check(1.0, 2.0, datum, 0.125, -1.0, 2.0, 1.0, 5e-3);
  const auto b = rescaling_check(1.0, 2.0, datum, 0.125, -1.0, 2.0, 1.0, 2.5e-3);
  CHECK(a.discrepancy <= 3.0 * a.dx * a.tv0);
  CHECK(b.discrepancy <= a.discrepancy);
}

TEST_CASE("curve estimate checks") {
  const auto law = SpeedLaw::epsilon(0.0);
  const auto rho0 = StepFunction{{0.0}, {0.125, 0.375}};
  const PolyCurve g{{0.0, 1.0}, {0.0, 0.9}};
  const auto same = lemma1_check(law, rho0, g, g, 0.15, 4);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  CHECK(same.pass);
  const PolyCurve behind{{0.0, 1.0}, {-0.1, 0.8}};
  const auto r = lemma1_check(law, rho0, g, behind, 0.15, 4);
  CHECK(r.pass);
  CHECK(r.lhs / r.rhs == doctest::Approx(0.15 / 0.4).epsilon(1e-12));
}
