#pragma once

#include <functional>
#include <string>
#include <vector>

#include "probeflow/model.hpp"
#include "probeflow/riemann.hpp"

namespace probeflow {

/// Continuous interpolant of a flux on the dyadic grid k 2^-n, k = 0..2^n.
/// States are handled as integer levels k throughout front tracking.
struct PiecewiseLinearFlux {
  int n = 0;
  std::vector<double> values;  // values[k] = f(k / 2^n)

  int levels() const { return static_cast<int>(values.size()) - 1; }
  double step() const { return 1.0 / static_cast<double>(levels()); }
  double breakpoint(int k) const { return static_cast<double>(k) * step(); }
  /// Difference quotient of f between levels a != b.
  double slope(int a, int b) const;
  double operator()(double rho) const;
  double lipschitz() const;
};

PiecewiseLinearFlux piecewise_linearize(const std::function<double(double)>& f, int n);
PiecewiseLinearFlux piecewise_linearize(const SpeedLaw& law, int n);

/// Piecewise-constant profile: values[i] holds on (knots[i-1], knots[i]),
/// with values.front() on the far left and values.back() on the far right.
struct StepFunction {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double x, TraceSide side = TraceSide::Right) const;
  double total_variation() const;
  /// int_a^b of the profile.
  double integral(double a, double b) const;
};

/// Build a step function from blocks of value on [from, to) over a background.
/// Later blocks override earlier ones where they overlap.
StepFunction make_step_function(double background,
                                const std::vector<std::pair<std::pair<double, double>, double>>& blocks);

/// Exact int |u - w| over [a, b].
double l1_distance(const StepFunction& u, const StepFunction& w, double a, double b);

struct QuantizedDatum {
  int n = 0;
  std::vector<double> knots;
  std::vector<int> levels;  // levels.size() == knots.size() + 1
  double tv_original = 0.0;
  double tv_quantized = 0.0;

  StepFunction to_step_function() const;
};

/// Round every value to the nearest multiple of 2^-n (ties to even) and merge
/// neighbours that collapse onto the same level.
QuantizedDatum quantize_datum(const StepFunction& datum, int n);

struct Front {
  double x = 0.0;
  int left = 0;
  int right = 0;
  double speed = 0.0;
};

/// Fronts solving the Riemann problem for the piecewise-linear flux, all
/// starting at position x and ordered by strictly increasing speed.
std::vector<Front> ft_riemann(const PiecewiseLinearFlux& flux, int left, int right, double x = 0.0);

struct FrontState {
  PiecewiseLinearFlux flux;
  double t = 0.0;
  int far_left = 0;
  std::vector<Front> fronts;
  long collisions = 0;

  int far_right() const { return fronts.empty() ? far_left : fronts.back().right; }
  double total_variation() const;
  StepFunction profile() const;
  /// Throws InternalError when ordering, chaining or speeds are inconsistent.
  void check_consistency() const;
  std::string dump() const;
};

FrontState make_front_state(const PiecewiseLinearFlux& flux, const QuantizedDatum& datum);

/// Resolve collisions in time order until t_end. Fronts that meet within 1e-12
/// in time are merged into one Riemann problem between their outer states.
FrontState ft_evolve(FrontState state, double t_end);

/// Exact piecewise-linear description of an evolution: one epoch per
/// interval between collision batches.
struct FrontHistory {
  struct Epoch {
    double t0 = 0.0;
    double t1 = 0.0;
    int far_left = 0;
    std::vector<Front> fronts;  // positions at t0
  };
  PiecewiseLinearFlux flux;
  std::vector<Epoch> epochs;

  double t_end() const { return epochs.empty() ? 0.0 : epochs.back().t1; }
  const Epoch& epoch_at(double t) const;
  double value_at(double t, double x, TraceSide side = TraceSide::Right) const;
  double total_variation_at(double t) const;
};

FrontHistory evolve_with_history(FrontState state, double t_end);

/// Piecewise-linear curve through (times[k], positions[k]).
struct PolyCurve {
  std::vector<double> times;
  std::vector<double> positions;

  double position(double t) const;
  /// Slope of the piece containing t (right piece at a knot).
  double speed(double t) const;
};

struct CurveIntegral {
  double integral = 0.0;
  double bound = 0.0;
  double tv0 = 0.0;
  double c0_distance = 0.0;
};

/// int_0^T |rho(t, g1(t)) - rho(t, g2(t))| dt computed exactly, together with
/// TV(rho0) ||g1 - g2||_C0 / c. Both curves must outrun the characteristics
/// by c; law provides f' for that check.
CurveIntegral sample_curve_integral(const FrontHistory& history, const SpeedLaw& law,
                                    const PolyCurve& g1, const PolyCurve& g2, double T,
                                    double c);

}  // namespace probeflow
