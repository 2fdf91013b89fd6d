#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probeflow/error.hpp"

namespace probeflow {

// ---------------------------------------------------------------------------
// Speed laws
// ---------------------------------------------------------------------------

enum class SpeedFamily { Greenshields, Epsilon, Tabulated };

/// Fundamental-diagram speed v(rho) on the normalized density range [0,1].
///
/// Three families are supported: Greenshields V(1-rho), the perturbed
/// family (1+eps*rho)(1-rho), and a tabulated law given on a uniform
/// rho-grid with linear interpolation. Evaluation is templated on the
/// scalar type; the coefficients are stored in double precision.
class SpeedLaw {
 public:
  static SpeedLaw greenshields(double v_max);
  /// eps must lie in [-1,1]; admissibility (strict concavity) holds for
  /// |eps| <= 1/3 and is checked by check_admissible, not here.
  static SpeedLaw epsilon(double eps);
  /// values[k] = v(k/(m-1)), m >= 2, all values >= 0.
  static SpeedLaw tabulated(std::vector<double> values);

  SpeedFamily family() const { return family_; }
  double v_max() const { return v_max_; }
  double eps() const { return eps_; }
  const std::vector<double>& table() const { return table_; }

  template <typename Scalar>
  Scalar speed(Scalar rho) const {
    check_density(static_cast<double>(rho));
    switch (family_) {
      case SpeedFamily::Greenshields:
        return Scalar(v_max_) * (Scalar(1) - rho);
      case SpeedFamily::Epsilon:
        return (Scalar(1) + Scalar(eps_) * rho) * (Scalar(1) - rho);
      case SpeedFamily::Tabulated:
        break;
    }
    const auto cells = static_cast<double>(table_.size() - 1);
    const double pos = static_cast<double>(rho) * cells;
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (k >= table_.size() - 1) k = table_.size() - 2;
    const Scalar theta = rho * Scalar(cells) - Scalar(static_cast<double>(k));
    return Scalar(table_[k]) + theta * Scalar(table_[k + 1] - table_[k]);
  }

  /// dv/drho. For tabulated laws the right-sided slope (left-sided at 1).
  double derivative(double rho) const;
  double second_derivative(double rho) const;

  /// q(rho) = rho v(rho) and its derivatives.
  double flux(double rho) const { return rho * speed(rho); }
  double flux_derivative(double rho) const;
  double flux_second_derivative(double rho) const;

  /// Lip(v) on [0,1].
  double lipschitz() const;
  /// Lip(rho v) on [0,1], max |q'| over a fine sample.
  double flux_lipschitz() const;

  std::string describe() const;

  bool operator==(const SpeedLaw&) const = default;

 private:
  static void check_density(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0))
      throw DomainError("density " + std::to_string(rho) + " outside [0,1]");
  }

  SpeedFamily family_ = SpeedFamily::Greenshields;
  double v_max_ = 1.0;
  double eps_ = 0.0;
  std::vector<double> table_;
};

inline double eval_speed_law(const SpeedLaw& law, double rho) { return law.speed(rho); }

/// Harmonic mean 2wv/(w+v) of a probe speed and a law speed, continuously
/// extended by 0 at (0,0).
template <typename Scalar>
Scalar harmonic_speed(Scalar w, Scalar v) {
  if (w == v) return w;
  const Scalar sum = w + v;
  if (sum < Scalar(1e-12)) return Scalar(0);
  return Scalar(2) * w * v / sum;
}

/// g(rho, q) = q rho v(rho) / (q + v(rho)).
double eval_g(const SpeedLaw& law, double rho, double q);

// ---------------------------------------------------------------------------
// Cutoff profile
// ---------------------------------------------------------------------------

/// Even C^1 weight: 1 on |xi| <= inner, 0 on |xi| >= outer, cubic
/// smoothstep in between.
class CutoffProfile {
 public:
  CutoffProfile() = default;
  CutoffProfile(double inner, double outer);

  double inner() const { return inner_; }
  double outer() const { return outer_; }

  template <typename Scalar>
  Scalar operator()(Scalar xi) const {
    using std::abs;
    const Scalar a = abs(xi);
    if (a <= Scalar(inner_)) return Scalar(1);
    if (a >= Scalar(outer_)) return Scalar(0);
    const Scalar s = (a - Scalar(inner_)) / Scalar(outer_ - inner_);
    return Scalar(1) - s * s * (Scalar(3) - Scalar(2) * s);
  }

  double derivative(double xi) const;
  /// max |chi'| = 3 / (2 (outer - inner)).
  double lipschitz() const { return 1.5 / (outer_ - inner_); }

  bool operator==(const CutoffProfile&) const = default;

 private:
  double inner_ = 0.05;
  double outer_ = 0.15;
};

// ---------------------------------------------------------------------------
// Probe trajectories
// ---------------------------------------------------------------------------

enum class SegmentMode { Speed, Coupled };

/// One entry of a probe program on the half-open interval [from, to).
struct ProbeSegment {
  double from = 0.0;
  double to = 0.0;
  SegmentMode mode = SegmentMode::Speed;
  double speed = 0.0;  // used in Speed mode only

  bool operator==(const ProbeSegment&) const = default;
};

/// Sample of a realized probe path: position and speed at the start of a
/// solver step, plus the density trace that was read there.
struct ProbeSample {
  double t = 0.0;
  double x = 0.0;
  double speed = 0.0;
  double trace = 0.0;
};

/// Instantaneous probe data entering the flux: position and speed.
struct ProbeState {
  double x = 0.0;
  double speed = 0.0;
};

class ProbeTrajectory {
 public:
  ProbeTrajectory() = default;
  /// Segments are sorted by start time; overlaps and negative speeds are
  /// rejected. Time not covered by a segment has speed 0. A positive
  /// mollify radius box-filters the exogenous speed program (only allowed
  /// for programs without coupled segments).
  ProbeTrajectory(double x0, std::vector<ProbeSegment> program, double mollify = 0.0);

  double x0() const { return x0_; }
  const std::vector<ProbeSegment>& program() const { return program_; }
  double mollify() const { return mollify_; }

  bool has_coupled() const;
  bool coupled_at(double t) const;

  /// Exogenous speed at t (mollified when enabled). Throws StateError on a
  /// coupled segment.
  double programmed_speed(double t) const;
  /// Exact distance travelled on [t0, t1] under the exogenous program.
  double displacement(double t0, double t1) const;
  /// Lip(p) = sup |p'|; coupled segments are bounded by v_max.
  double max_speed(double v_max) const;
  /// Lip(p') on [0, horizon]; nullopt when the speed program jumps
  /// (unmollified piecewise-constant program) or has coupled segments.
  std::optional<double> speed_lipschitz(double horizon) const;
  /// Segment boundaries (from/to) in increasing order.
  std::vector<double> breakpoints() const;
  /// (min, max) of the exogenous speed over [0, horizon].
  std::pair<double, double> speed_range(double horizon) const;

  /// Position and speed at time t. Exogenous-only programs are evaluated
  /// analytically; coupled programs need a realized path covering t.
  ProbeState state_at(double t) const;

  const std::vector<ProbeSample>& realized() const { return realized_; }
  void record(const ProbeSample& s) { realized_.push_back(s); }
  void clear_realized() { realized_.clear(); }

  /// Program equality; the realized path is run output and not compared.
  bool operator==(const ProbeTrajectory& o) const {
    return x0_ == o.x0_ && program_ == o.program_ && mollify_ == o.mollify_;
  }

 private:
  double raw_speed(double t) const;
  double antiderivative(double t) const;         // A(t) = int_0^t s
  double second_antiderivative(double t) const;  // B(t) = int_0^t A
  double position_offset(double t) const;        // int_0^t s_mollified

  double x0_ = 0.0;
  std::vector<ProbeSegment> program_;
  double mollify_ = 0.0;
  // Piecewise-constant raw speed: speed_[k] on [knots_[k], knots_[k+1]),
  // speed_before_ for t < 0 and 0 after the last knot.
  std::vector<double> knots_;
  std::vector<double> speeds_;
  std::vector<double> a_at_knot_;
  std::vector<double> b_at_knot_;
  double speed_before_ = 0.0;
  std::vector<ProbeSample> realized_;
};

// ---------------------------------------------------------------------------
// Encoded flux
// ---------------------------------------------------------------------------

/// Speed of the data-encoded model at position x for given probe states:
/// each probe contributes weight chi(x - p_i) pulling v towards the harmonic
/// mean with its speed; total weight above 1 is renormalized.
template <typename Scalar>
Scalar encoded_speed(const SpeedLaw& law, const CutoffProfile& cutoff,
                     std::span<const ProbeState> probes, Scalar x, Scalar rho) {
  const Scalar v = law.speed(rho);
  Scalar total_weight(0);
  Scalar pull(0);
  for (const auto& p : probes) {
    const Scalar w = cutoff(x - Scalar(p.x));
    if (w == Scalar(0)) continue;
    total_weight += w;
    pull += w * (harmonic_speed(Scalar(p.speed), v) - v);
  }
  if (total_weight > Scalar(1)) pull /= total_weight;
  return v + pull;
}

struct FluxModel {
  SpeedLaw law;
  CutoffProfile cutoff;
  std::vector<ProbeTrajectory> probes;

  std::vector<ProbeState> probe_states(double t) const;
};

double eval_encoded_speed(const FluxModel& model, double t, double x, double rho);
double eval_flux(const FluxModel& model, double t, double x, double rho);

// ---------------------------------------------------------------------------
// Admissibility and analytic constants
// ---------------------------------------------------------------------------

struct ConditionResult {
  std::string name;
  bool pass = false;
  /// Worst observed value of the checked quantity (e.g. the largest second
  /// difference for a concavity test, the largest increase for monotonicity).
  double worst = 0.0;
};

struct AdmissibilityReport {
  std::vector<ConditionResult> conditions;
  bool all_pass() const;
  bool concavity_pass() const;
  const ConditionResult* find(const std::string& name) const;
};

/// Sampled check of the speed-law conditions on n_samples uniform points.
AdmissibilityReport check_admissible(const SpeedLaw& law, int n_samples = 201);

/// Closed-form second derivative of q_w(rho) = rho w v / (w + v).
double harmonic_flux_second_derivative(const SpeedLaw& law, double rho, double w);

struct LipschitzConstants {
  double max_harmonic = 0.0;   // M
  double lip_x = 0.0;          // (M + V) Lip(chi), 0 without probes
  double lip_rho = 0.0;        // 2 Lip(v)
  double lip_x_rho_sampled = 0.0;
  double lip_x_rho_stated = 0.0;  // (1 + Lip(chi)) Lip(v)
  double lip_x_rho_direct = 0.0;  // 3 Lip(chi) Lip(v)
};

LipschitzConstants lipschitz_constants(const FluxModel& model);

/// Grid supremum of |d^2 g / drho dq| over [0,1] x [q_min,P] by nested
/// central differences of eval_g.
double mixed_difference_constant(const SpeedLaw& law, double max_probe_speed,
                                 double min_probe_speed = 0.0, int grid = 401);

/// Grid supremum of |dg/drho| over [0,1] x [q_min, P].
double g_rho_lipschitz(const SpeedLaw& law, double max_probe_speed,
                       double min_probe_speed = 0.0, int grid = 401);

struct StabilityConstant {
  bool bounded = false;
  double value = 0.0;  // valid when bounded
  double lip_chi = 0.0;
  double lip_p = 0.0;
  double lip_flux = 0.0;         // Lip(rho v)
  double lip_g_rho = 0.0;        // sup |d g/d rho| over [0,1]x[0,P]
  double lip_g_mixed = 0.0;      // mixed-difference constant
  double lip_speed = 0.0;        // Lip(p'), valid when bounded
};

/// Rate C of the L1 stability estimate ||rho1(t)-rho2(t)|| <= e^{Ct} ||..||.
/// Each probe adds its own contribution; g-terms carry the factor 2 of the
/// model's harmonic mean.
StabilityConstant stability_constant_C(const FluxModel& model, double horizon);

}  // namespace probeflow
