#pragma once

#include <functional>
#include <string>
#include <vector>

#include "probeflow/fronttrack.hpp"
#include "probeflow/fvsolver.hpp"
#include "probeflow/riemann.hpp"
#include "probeflow/scenarios.hpp"

namespace probeflow {

// ---------------------------------------------------------------------------
// Error functional
// ---------------------------------------------------------------------------

struct TraceSample {
  double t = 0.0;
  double x = 0.0;
  double trace = 0.0;
  double v_trace = 0.0;
};

struct ErrorFunctionalReport {
  double value = 0.0;
  std::vector<TraceSample> series;
  long steps = 0;
};

/// sum over solver steps of |p' - v(trace)| dt along the realized path of
/// probe `index`.
ErrorFunctionalReport error_functional(const RunResult& run, std::size_t index, const SpeedLaw& law);

// ---------------------------------------------------------------------------
// The discontinuous map phi
// ---------------------------------------------------------------------------

struct PhiReport {
  double eps = 0.0;
  double T = 1.0;
  double computed = 0.0;       // exact value over [0, T]
  double paper_formula = 0.0;  // reference closed form over [0, T]
  std::string branch;          // "eps<=0" or "eps>0"
  bool agree = false;
  double shock_speed = 0.0;
  double trace = 0.0;
};

/// Riemann datum 1/8 | 3/8 under (1 + eps rho)(1 - rho), probe p(t) = t/2.
PhiReport phi_epsilon(double eps, double T, TraceSide side = TraceSide::Right);

struct PhiLimits {
  double minus = 0.0;  // phi(0-) / T
  double plus = 0.0;   // phi(0+) / T
};

/// One-sided limits per unit time, evaluated at eps = -/+ offset.
PhiLimits phi_one_sided_limits(double offset = 1e-12, TraceSide side = TraceSide::Right);

// ---------------------------------------------------------------------------
// Calibration map E(V)
// ---------------------------------------------------------------------------

struct ESample {
  double V = 0.0;
  double E = 0.0;
};

/// E(V) for the Greenshields law V(1 - rho); probes stay out of the flux.
double evaluate_E(const Scenario& scenario, double V);

/// Worker count: PROBEFLOW_THREADS if set, else the hardware concurrency.
unsigned worker_count();

/// N evenly spaced V in [v_min, v_max], evaluated in parallel.
std::vector<ESample> scan_E(const Scenario& scenario, double v_min, double v_max, int N);

struct MinimizeResult {
  double V = 0.0;
  double E = 0.0;
  bool boundary = false;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int evaluations = 0;
};

std::pair<double, double> golden_section(const std::function<double(double)>& f, double lo,
                                         double hi, int iters, int* evaluations = nullptr);

/// Best grid sample, then golden section on its two neighbouring cells.
/// A boundary minimum is returned as is and flagged.
MinimizeResult minimize_E(const std::vector<ESample>& samples,
                          const std::function<double(double)>& evaluator, int refine_iters);

/// Largest |E(V_{i+1}) - E(V_i)| / (V_{i+1} - V_i).
double max_difference_quotient(const std::vector<ESample>& samples);

struct ModulusBound {
  bool compliant = false;  // datum and path satisfy the calibration hypotheses
  double inf_rho0 = 0.0;
  double inf_speed = 0.0;
  double required_speed = 0.0;  // v_max (1 - 2 rho_check)
  double c = 0.0;               // 2 (inf rho0 - rho_check)
  double tv0 = 0.0;
  double path_norm = 0.0;       // sup |p| on [0, T]
  double bound = 0.0;           // v_max tv0 |p| / (c v_min) + T
};

ModulusBound modulus_bound(const Scenario& scenario, double v_min, double v_max, double rho_check);

/// Replace probe 0 by the path a coupled probe follows under V_true: the
/// result is a scenario whose data are matched exactly at V_true.
Scenario plant_truth(const Scenario& base, double V_true);

/// Background 0.45 with a 0.55 block, suitable for plant_truth.
Scenario planted_base();

// ---------------------------------------------------------------------------
// Rescaling identity and the curve estimate
// ---------------------------------------------------------------------------

struct RescalingReport {
  double discrepancy = 0.0;  // max over snapshots of the L1 distance
  double tv0 = 0.0;
  double dx = 0.0;
};

/// Run V1 from rho0(x) and V2 from rho0(V1 x / V2) and compare
/// rho_{V2}(t, x) with rho_{V1}(t, V1 x / V2).
RescalingReport rescaling_check(double V1, double V2, const std::vector<DatumBlock>& datum,
                                double background, double x_min, double x_max, double T,
                                double dx);

struct Lemma1Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

Lemma1Result lemma1_check(const SpeedLaw& law, const StepFunction& rho0, const PolyCurve& g1,
                          const PolyCurve& g2, double c, int n);

}  // namespace probeflow
