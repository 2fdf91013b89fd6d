#include <doctest.h>

#include <cmath>

#include "probeflow/fronttrack.hpp"
#include "probeflow/riemann.hpp"

using namespace probeflow;

namespace {
double logistic(double r) { return r * (1.0 - r); }
}  // namespace

TEST_CASE("piecewise-linear interpolation of the flux") {
  const auto f1 = piecewise_linearize(logistic, 1);
  REQUIRE(f1.levels() == 2);
  CHECK(f1.breakpoint(0) == 0.0);
  CHECK(f1(0.5) == 0.25);
  CHECK(f1(1.0) == 0.0);
  const auto f6 = piecewise_linearize(logistic, 6);
  for (int k = 0; k <= f6.levels(); ++k) CHECK(f6.values[static_cast<std::size_t>(k)] == logistic(k / 64.0));
  CHECK(piecewise_linearize(logistic, 4).lipschitz() <= 1.0);
}

TEST_CASE("quantization") {
  const auto dyadic = make_step_function(0.25, {{{0.0, 1.0}, 0.75}});
  const auto same = quantize_datum(dyadic, 4);
  CHECK(same.levels == std::vector<int>{4, 12, 4});
  const auto collapse = quantize_datum(make_step_function(0.24, {{{0.0, 1.0}, 0.26}}), 4);
  CHECK(collapse.levels == std::vector<int>{4});
  CHECK(collapse.knots.empty());
  const auto blocks = quantize_datum(
      make_step_function(0.0, {{{0.001, 0.1}, 1.0}, {{0.2, 0.4}, 1.0}, {{0.5, 0.8}, 1.0}}), 3);
  for (int l : blocks.levels) CHECK((l == 0 || l == 8));
  CHECK(blocks.tv_quantized <= blocks.tv_original);
}

TEST_CASE("Riemann fronts") {
  const auto f = piecewise_linearize(logistic, 3);
  const auto shock = ft_riemann(f, 1, 5);
  REQUIRE(shock.size() == 1);
  CHECK(shock[0].speed == doctest::Approx(0.25));
  CHECK(ft_riemann(f, 3, 3).empty());

  const auto fan = ft_riemann(piecewise_linearize(logistic, 2), 3, 0);
  REQUIRE(fan.size() == 3);
  CHECK(fan[0].speed == doctest::Approx(-0.25));
  CHECK(fan[1].speed == doctest::Approx(0.25));
  CHECK(fan[2].speed == doctest::Approx(0.75));
  CHECK(fan[0].left == 3);
  CHECK(fan[2].right == 0);
}

TEST_CASE("a single front moves at its speed") {
  const auto f = piecewise_linearize(logistic, 3);
  auto state = make_front_state(f, quantize_datum(StepFunction{{0.0}, {0.125, 0.375}}, 3));
  REQUIRE(state.fronts.size() == 1);
  const auto later = ft_evolve(state, 1.5);
  CHECK(later.fronts[0].x == doctest::Approx(0.75));
  CHECK(later.collisions == 0);
}

TEST_CASE("two shocks merge") {
  const auto f = piecewise_linearize(logistic, 3);
  const auto datum = StepFunction{{-0.1, 0.1}, {0.125, 0.375, 0.625}};
  auto state = make_front_state(f, quantize_datum(datum, 3));
  REQUIRE(state.fronts.size() == 2);
  CHECK(state.fronts[0].speed == doctest::Approx(0.5));
  CHECK(state.fronts[1].speed == doctest::Approx(0.0));
  const auto before = ft_evolve(state, 0.39);
  CHECK(before.fronts.size() == 2);
  const auto after = ft_evolve(state, 0.6);
  REQUIRE(after.fronts.size() == 1);
  CHECK(after.fronts[0].left == 1);
  CHECK(after.fronts[0].right == 5);
  CHECK(after.fronts[0].speed == doctest::Approx(0.25));
  CHECK(after.fronts[0].x == doctest::Approx(0.1 + 0.25 * 0.2));
  CHECK(after.total_variation() <= state.total_variation() + 1e-15);
  after.check_consistency();
}

TEST_CASE("front tracking matches the exact Riemann solution on the dyadic grid") {
  const int n = 6;
  const auto law = SpeedLaw::epsilon(0.0);
  const auto f = piecewise_linearize(law, n);
  const auto history = evolve_with_history(
      make_front_state(f, quantize_datum(StepFunction{{0.0}, {0.125, 0.375}}, n)), 1.0);
  const auto exact = solve_riemann(law, 0.125, 0.375);
  for (double x = -0.5; x <= 1.5; x += 0.01)
    CHECK(history.value_at(1.0, x) == sample_solution(exact, x));
}

TEST_CASE("random evolutions keep the invariants") {
  const auto law = SpeedLaw::epsilon(0.2);
  const int n = 5;
  const auto f = piecewise_linearize(law, n);
  const auto datum = make_step_function(
      0.1, {{{-1.0, -0.5}, 0.9}, {{-0.3, 0.0}, 0.4}, {{0.2, 0.6}, 1.0}, {{0.9, 1.0}, 0.0}});
  const auto q = quantize_datum(datum, n);
  auto state = make_front_state(f, q);
  double tv = state.total_variation();
  for (double t = 0.1; t <= 3.0; t += 0.1) {
    state = ft_evolve(state, t);
    state.check_consistency();
    CHECK(state.total_variation() <= tv + 1e-15);
    tv = state.total_variation();
    for (std::size_t i = 1; i < state.fronts.size(); ++i) CHECK(state.fronts[i - 1].x < state.fronts[i].x);
    for (const auto& fr : state.fronts) CHECK(fr.speed == doctest::Approx(f.slope(fr.left, fr.right)));
  }
}

TEST_CASE("curve integrals") {
  const auto law = SpeedLaw::epsilon(0.0);
  const int n = 3;
  const auto history = evolve_with_history(
      make_front_state(piecewise_linearize(law, n),
                       quantize_datum(StepFunction{{0.0}, {0.125, 0.375}}, n)),
      1.0);
  const PolyCurve g1{{0.0, 1.0}, {0.0, 0.9}};
  const auto self = sample_curve_integral(history, law, g1, g1, 1.0, 0.15);
  CHECK(self.integral == 0.0);

  // A speed-0.9 line started delta behind the shock catches it at t = delta / 0.4.
  const double delta = 0.1;
  const PolyCurve g2{{0.0, 1.0}, {-delta, 0.9 - delta}};
  const auto ci = sample_curve_integral(history, law, g1, g2, 1.0, 0.15);
  CHECK(ci.integral == doctest::Approx(0.25 * delta / 0.4).epsilon(1e-12));
  CHECK(ci.bound == doctest::Approx(0.25 * delta / 0.15).epsilon(1e-12));
  CHECK(ci.integral <= ci.bound);

  const PolyCurve slow{{0.0, 1.0}, {0.0, 0.3}};
  CHECK_THROWS_AS(sample_curve_integral(history, law, g1, slow, 1.0, 0.15), PreconditionError);

  const auto flat = evolve_with_history(
      make_front_state(piecewise_linearize(law, n), quantize_datum(make_step_function(0.5, {}), n)), 1.0);
  CHECK(sample_curve_integral(flat, law, g1, g2, 1.0, 0.15).integral == 0.0);
}
