#include "probeflow/model.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace probeflow {

namespace {

constexpr double kFdStep = 1e-6;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

// ---------------------------------------------------------------------------
// SpeedLaw
// ---------------------------------------------------------------------------

SpeedLaw SpeedLaw::greenshields(double v_max) {
  if (!(v_max > 0.0) || !std::isfinite(v_max))
    throw DomainError("Greenshields maximal speed must be positive");
  SpeedLaw law;
  law.family_ = SpeedFamily::Greenshields;
  law.v_max_ = v_max;
  return law;
}

SpeedLaw SpeedLaw::epsilon(double eps) {
  if (!(eps >= -1.0 && eps <= 1.0))
    throw DomainError("epsilon " + std::to_string(eps) + " outside [-1,1]");
  SpeedLaw law;
  law.family_ = SpeedFamily::Epsilon;
  law.eps_ = eps;
  // v' = eps - 1 - 2 eps rho <= 0 on [0,1] for |eps| <= 1, so max v = v(0).
  law.v_max_ = 1.0;
  return law;
}

SpeedLaw SpeedLaw::tabulated(std::vector<double> values) {
  if (values.size() < 2) throw DomainError("tabulated speed law needs at least 2 values");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("tabulated speed values must be finite and non-negative");
  SpeedLaw law;
  law.family_ = SpeedFamily::Tabulated;
  law.v_max_ = *std::max_element(values.begin(), values.end());
  if (!(law.v_max_ > 0.0)) throw DomainError("tabulated speed law is identically zero");
  law.table_ = std::move(values);
  return law;
}

double SpeedLaw::derivative(double rho) const {
  check_density(rho);
  switch (family_) {
    case SpeedFamily::Greenshields:
      return -v_max_;
    case SpeedFamily::Epsilon:
      return eps_ - 1.0 - 2.0 * eps_ * rho;
    case SpeedFamily::Tabulated:
      break;
  }
  const auto cells = static_cast<double>(table_.size() - 1);
  auto k = static_cast<std::size_t>(std::floor(rho * cells));
  if (k >= table_.size() - 1) k = table_.size() - 2;
  return (table_[k + 1] - table_[k]) * cells;
}

double SpeedLaw::second_derivative(double rho) const {
  check_density(rho);
  return family_ == SpeedFamily::Epsilon ? -2.0 * eps_ : 0.0;
}

double SpeedLaw::flux_derivative(double rho) const {
  return speed(rho) + rho * derivative(rho);
}

double SpeedLaw::flux_second_derivative(double rho) const {
  return 2.0 * derivative(rho) + rho * second_derivative(rho);
}

double SpeedLaw::lipschitz() const {
  switch (family_) {
    case SpeedFamily::Greenshields:
      return v_max_;
    case SpeedFamily::Epsilon:
      return std::max(std::abs(eps_ - 1.0), std::abs(1.0 + eps_));
    case SpeedFamily::Tabulated:
      break;
  }
  double lip = 0.0;
  const auto cells = static_cast<double>(table_.size() - 1);
  for (std::size_t k = 0; k + 1 < table_.size(); ++k)
    lip = std::max(lip, std::abs(table_[k + 1] - table_[k]) * cells);
  return lip;
}

double SpeedLaw::flux_lipschitz() const {
  double lip = 0.0;
  constexpr int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double rho = static_cast<double>(i) / (n - 1);
    lip = std::max(lip, std::abs(flux_derivative(rho)));
  }
  return lip;
}

std::string SpeedLaw::describe() const {
  char buf[96];
  switch (family_) {
    case SpeedFamily::Greenshields:
      std::snprintf(buf, sizeof buf, "greenshields(V=%.17g)", v_max_);
      break;
    case SpeedFamily::Epsilon:
      std::snprintf(buf, sizeof buf, "epsilon(eps=%.17g)", eps_);
      break;
    case SpeedFamily::Tabulated:
      std::snprintf(buf, sizeof buf, "tabulated(%zu values)", table_.size());
      break;
  }
  return buf;
}

double eval_g(const SpeedLaw& law, double rho, double q) {
  const double v = law.speed(rho);
  const double den = q + v;
  if (den < 1e-12) return 0.0;
  return q * rho * v / den;
}

// ---------------------------------------------------------------------------
// CutoffProfile
// ---------------------------------------------------------------------------

CutoffProfile::CutoffProfile(double inner, double outer) : inner_(inner), outer_(outer) {
  if (!(inner > 0.0 && outer > inner) || !std::isfinite(outer))
    throw DomainError("cutoff radii must satisfy 0 < inner < outer");
}

double CutoffProfile::derivative(double xi) const {
  const double a = std::abs(xi);
  if (a <= inner_ || a >= outer_) return 0.0;
  const double width = outer_ - inner_;
  const double s = (a - inner_) / width;
  const double d = -6.0 * s * (1.0 - s) / width;
  return xi < 0.0 ? -d : d;
}

// ---------------------------------------------------------------------------
// ProbeTrajectory
// ---------------------------------------------------------------------------

ProbeTrajectory::ProbeTrajectory(double x0, std::vector<ProbeSegment> program, double mollify)
    : x0_(x0), program_(std::move(program)), mollify_(mollify) {
  if (!std::isfinite(x0)) throw DomainError("probe start position must be finite");
  if (!(mollify >= 0.0) || !std::isfinite(mollify))
    throw DomainError("mollification radius must be non-negative");
  std::sort(program_.begin(), program_.end(),
            [](const ProbeSegment& a, const ProbeSegment& b) { return a.from < b.from; });
  for (std::size_t i = 0; i < program_.size(); ++i) {
    const auto& s = program_[i];
    if (!(s.from >= 0.0) || !(s.to > s.from) || !std::isfinite(s.to))
      throw DomainError("probe segment needs 0 <= from < to");
    if (s.mode == SegmentMode::Speed && (!(s.speed >= 0.0) || !std::isfinite(s.speed)))
      throw DomainError("probe speeds must be non-negative");
    if (i > 0 && program_[i - 1].to > s.from)
      throw DomainError("probe segments overlap");
  }
  if (mollify_ > 0.0 && has_coupled())
    throw DomainError("mollification requires an exogenous-only probe program");

  double cur = 0.0;
  for (const auto& s : program_) {
    if (s.from > cur) {
      knots_.push_back(cur);
      speeds_.push_back(0.0);
    }
    knots_.push_back(s.from);
    speeds_.push_back(s.mode == SegmentMode::Speed ? s.speed : 0.0);
    cur = s.to;
  }
  knots_.push_back(cur);
  speeds_.push_back(0.0);
  speed_before_ = speeds_.front();

  a_at_knot_.resize(knots_.size());
  b_at_knot_.resize(knots_.size());
  a_at_knot_[0] = 0.0;
  b_at_knot_[0] = 0.0;
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    const double dt = knots_[k] - knots_[k - 1];
    a_at_knot_[k] = a_at_knot_[k - 1] + speeds_[k - 1] * dt;
    b_at_knot_[k] = b_at_knot_[k - 1] + a_at_knot_[k - 1] * dt + 0.5 * speeds_[k - 1] * dt * dt;
  }
}

bool ProbeTrajectory::has_coupled() const {
  return std::any_of(program_.begin(), program_.end(),
                     [](const ProbeSegment& s) { return s.mode == SegmentMode::Coupled; });
}

bool ProbeTrajectory::coupled_at(double t) const {
  for (const auto& s : program_)
    if (s.mode == SegmentMode::Coupled && t >= s.from && t < s.to) return true;
  return false;
}

double ProbeTrajectory::raw_speed(double t) const {
  if (t < 0.0) return speed_before_;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return speeds_[k];
}

double ProbeTrajectory::antiderivative(double t) const {
  if (t < 0.0) return speed_before_ * t;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return a_at_knot_[k] + speeds_[k] * (t - knots_[k]);
}

double ProbeTrajectory::second_antiderivative(double t) const {
  if (t < 0.0) return 0.5 * speed_before_ * t * t;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double d = t - knots_[k];
  return b_at_knot_[k] + a_at_knot_[k] * d + 0.5 * speeds_[k] * d * d;
}

double ProbeTrajectory::position_offset(double t) const {
  if (mollify_ == 0.0) return antiderivative(t);
  const double tau = mollify_;
  return (second_antiderivative(t + tau) - second_antiderivative(tau) -
          second_antiderivative(t - tau) + second_antiderivative(-tau)) /
         (2.0 * tau);
}

double ProbeTrajectory::programmed_speed(double t) const {
  if (coupled_at(t)) throw StateError("probe speed at a coupled segment depends on the density");
  if (mollify_ == 0.0) return raw_speed(t);
  return (antiderivative(t + mollify_) - antiderivative(t - mollify_)) / (2.0 * mollify_);
}

double ProbeTrajectory::displacement(double t0, double t1) const {
  if (mollify_ == 0.0) {
    // Within one constant piece the increment is exact.
    const auto it0 = std::upper_bound(knots_.begin(), knots_.end(), t0);
    const auto it1 = std::upper_bound(knots_.begin(), knots_.end(), t1);
    if (t0 >= 0.0 && it0 == it1) return raw_speed(t0) * (t1 - t0);
  }
  return position_offset(t1) - position_offset(t0);
}

double ProbeTrajectory::max_speed(double v_max) const {
  double p = 0.0;
  for (const auto& s : program_)
    p = std::max(p, s.mode == SegmentMode::Coupled ? v_max : s.speed);
  return p;
}

std::vector<double> ProbeTrajectory::breakpoints() const {
  std::vector<double> out;
  for (const auto& s : program_) {
    out.push_back(s.from);
    out.push_back(s.to);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Points where the mollified speed changes slope, clipped to [0, horizon].
std::vector<double> critical_times(const std::vector<double>& knots, double tau, double horizon) {
  std::vector<double> pts{0.0, horizon};
  for (double k : knots)
    for (double c : {k - tau, k + tau})
      if (c > 0.0 && c < horizon) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

std::optional<double> ProbeTrajectory::speed_lipschitz(double horizon) const {
  if (has_coupled()) return std::nullopt;
  if (mollify_ == 0.0) {
    for (std::size_t k = 1; k < knots_.size(); ++k)
      if (knots_[k] > 0.0 && knots_[k] < horizon && speeds_[k] != speeds_[k - 1])
        return std::nullopt;
    return 0.0;
  }
  const auto pts = critical_times(knots_, mollify_, horizon);
  double lip = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double t = 0.5 * (pts[i] + pts[i + 1]);
    lip = std::max(lip, std::abs(raw_speed(t + mollify_) - raw_speed(t - mollify_)) /
                            (2.0 * mollify_));
  }
  return lip;
}

std::pair<double, double> ProbeTrajectory::speed_range(double horizon) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto pts = critical_times(knots_, mollify_, horizon);
  // A piecewise-constant program is read on [0, horizon): drop the endpoint.
  if (mollify_ == 0.0) pts.pop_back();
  for (double t : pts) {
    const double s = programmed_speed(t);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (mollify_ == 0.0) {
    // raw speed is piecewise constant: include every piece that meets [0, horizon)
    for (std::size_t k = 0; k < knots_.size(); ++k)
      if (knots_[k] < horizon) {
        lo = std::min(lo, speeds_[k]);
        hi = std::max(hi, speeds_[k]);
      }
  }
  return {lo, hi};
}

ProbeState ProbeTrajectory::state_at(double t) const {
  if (!has_coupled()) return {x0_ + position_offset(t), programmed_speed(t)};
  constexpr double tol = 1e-12;
  if (realized_.empty() || t < realized_.front().t - tol || t > realized_.back().t + tol)
    throw StateError("coupled probe position at t=" + std::to_string(t) +
                     " is not resolved by the realized path");
  auto it = std::upper_bound(realized_.begin(), realized_.end(), t,
                             [](double v, const ProbeSample& s) { return v < s.t; });
  if (it != realized_.begin()) --it;
  const double x = it->x + it->speed * (t - it->t);
  const double speed = coupled_at(t) ? it->speed : programmed_speed(t);
  return {x, speed};
}

// ---------------------------------------------------------------------------
// FluxModel
// ---------------------------------------------------------------------------

std::vector<ProbeState> FluxModel::probe_states(double t) const {
  std::vector<ProbeState> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(p.state_at(t));
  return out;
}

double eval_encoded_speed(const FluxModel& model, double t, double x, double rho) {
  const auto states = model.probe_states(t);
  return encoded_speed(model.law, model.cutoff, std::span<const ProbeState>(states), x, rho);
}

double eval_flux(const FluxModel& model, double t, double x, double rho) {
  return rho * eval_encoded_speed(model, t, x, rho);
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

bool AdmissibilityReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.pass; });
}

bool AdmissibilityReport::concavity_pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) {
    return c.pass || c.name.find("concave") == std::string::npos;
  });
}

const ConditionResult* AdmissibilityReport::find(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

template <typename F>
ConditionResult strict_concavity(std::string name, int n, F&& f) {
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = f(static_cast<double>(i) / (n - 1));
  for (std::size_t i = 1; i + 1 < vals.size(); ++i)
    worst = std::max(worst, vals[i - 1] - 2.0 * vals[i] + vals[i + 1]);
  return {std::move(name), worst < 0.0, worst};
}

}  // namespace

AdmissibilityReport check_admissible(const SpeedLaw& law, int n_samples) {
  if (n_samples < 3) throw DomainError("admissibility check needs at least 3 samples");
  AdmissibilityReport report;
  const double v1 = law.speed(1.0);
  report.conditions.push_back({"v(1)=0", v1 == 0.0, std::abs(v1)});

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double rise = -std::numeric_limits<double>::infinity();
  double prev = law.speed(0.0);
  for (int i = 0; i < n_samples; ++i) {
    const double v = law.speed(static_cast<double>(i) / (n_samples - 1));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (i > 0) rise = std::max(rise, v - prev);
    prev = v;
  }
  const double overshoot = std::max(-lo, hi - law.v_max());
  report.conditions.push_back({"bounded", overshoot <= 1e-12, overshoot});
  report.conditions.push_back({"monotone", rise <= 1e-12, rise});
  report.conditions.push_back(
      strict_concavity("flux_concave", n_samples, [&](double r) { return law.flux(r); }));
  for (double factor : {0.1, 0.5, 1.0, 2.0}) {
    const double w = factor * law.v_max();
    char name[48];
    std::snprintf(name, sizeof name, "harmonic_concave_w=%g", factor);
    report.conditions.push_back(
        strict_concavity(name, n_samples, [&](double r) { return eval_g(law, r, w); }));
  }
  if (law.family() == SpeedFamily::Epsilon) {
    const double excess = std::abs(law.eps()) - 1.0 / 3.0;
    report.conditions.push_back({"family_range", excess <= 0.0, excess});
  }
  return report;
}

double harmonic_flux_second_derivative(const SpeedLaw& law, double rho, double w) {
  const double v = law.speed(rho);
  const double dv = law.derivative(rho);
  const double s = v + w;
  return w * w * (s * law.flux_second_derivative(rho) - 2.0 * rho * dv * dv) / (s * s * s);
}

// ---------------------------------------------------------------------------
// Analytic constants
// ---------------------------------------------------------------------------

namespace {

double max_probe_speed(const FluxModel& model) {
  double p = 0.0;
  for (const auto& probe : model.probes) p = std::max(p, probe.max_speed(model.law.v_max()));
  return p;
}

}  // namespace

LipschitzConstants lipschitz_constants(const FluxModel& model) {
  LipschitzConstants c;
  const double vmax = model.law.v_max();
  const double lip_v = model.law.lipschitz();
  const double lip_chi = model.cutoff.lipschitz();
  c.lip_rho = 2.0 * lip_v;
  c.lip_x_rho_stated = (1.0 + lip_chi) * lip_v;
  c.lip_x_rho_direct = 3.0 * lip_chi * lip_v;
  if (model.probes.empty()) return c;

  const double P = max_probe_speed(model);
  // 2wv/(w+v) is increasing in both arguments: the max sits at the corner.
  c.max_harmonic = harmonic_speed(P, vmax);
  c.lip_x = (c.max_harmonic + vmax) * lip_chi;

  // d/dx V = chi'(xi) (h(w, v(rho)) - v(rho)); Lipschitz modulus in rho by
  // difference quotients on a (xi, w, rho) grid.
  constexpr int n_xi = 41, n_w = 11, n_rho = 201;
  const double outer = model.cutoff.outer();
  for (int i = 0; i < n_xi; ++i) {
    const double xi = -outer + 2.0 * outer * i / (n_xi - 1);
    const double dchi = model.cutoff.derivative(xi);
    if (dchi == 0.0) continue;
    for (int j = 0; j < n_w; ++j) {
      const double w = P * j / (n_w - 1);
      double prev = 0.0;
      for (int k = 0; k < n_rho; ++k) {
        const double rho = static_cast<double>(k) / (n_rho - 1);
        const double v = model.law.speed(rho);
        const double dx = dchi * (harmonic_speed(w, v) - v);
        if (k > 0)
          c.lip_x_rho_sampled =
              std::max(c.lip_x_rho_sampled, std::abs(dx - prev) * (n_rho - 1));
        prev = dx;
      }
    }
  }
  return c;
}

double mixed_difference_constant(const SpeedLaw& law, double max_probe_speed,
                                 double min_probe_speed, int grid) {
  if (!(max_probe_speed > min_probe_speed)) return 0.0;
  const double qlo = std::max(0.0, min_probe_speed);
  const double qhi = max_probe_speed;
  const double h = kFdStep * 10.0;
  const double k = h * (qhi - qlo);
  double sup = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double rho = static_cast<double>(i) / (grid - 1);
    const double r0 = clamp01(rho - h), r1 = clamp01(rho + h);
    for (int j = 0; j < grid; ++j) {
      const double q = qlo + (qhi - qlo) * j / (grid - 1);
      const double q0 = std::max(qlo, q - k), q1 = std::min(qhi, q + k);
      const double mixed = eval_g(law, r1, q1) - eval_g(law, r1, q0) -
                           eval_g(law, r0, q1) + eval_g(law, r0, q0);
      sup = std::max(sup, std::abs(mixed) / ((r1 - r0) * (q1 - q0)));
    }
  }
  return sup;
}

double g_rho_lipschitz(const SpeedLaw& law, double max_probe_speed, double min_probe_speed,
                       int grid) {
  const double qlo = std::max(0.0, min_probe_speed);
  const double qhi = std::max(qlo, max_probe_speed);
  const double h = kFdStep * 10.0;
  double sup = 0.0;
  for (int j = 0; j < grid; ++j) {
    const double q = grid > 1 ? qlo + (qhi - qlo) * j / (grid - 1) : qhi;
    for (int i = 0; i < grid; ++i) {
      const double rho = static_cast<double>(i) / (grid - 1);
      const double r0 = clamp01(rho - h), r1 = clamp01(rho + h);
      sup = std::max(sup, std::abs(eval_g(law, r1, q) - eval_g(law, r0, q)) / (r1 - r0));
    }
  }
  return sup;
}

StabilityConstant stability_constant_C(const FluxModel& model, double horizon) {
  StabilityConstant c;
  c.lip_chi = model.cutoff.lipschitz();
  c.lip_flux = model.law.flux_lipschitz();
  c.bounded = true;
  if (model.probes.empty()) return c;

  const double vmax = model.law.v_max();
  for (const auto& probe : model.probes) {
    const auto lip_speed = probe.speed_lipschitz(horizon);
    const double lip_p = probe.max_speed(vmax);
    double qlo = 0.0, qhi = lip_p;
    if (!probe.has_coupled()) std::tie(qlo, qhi) = probe.speed_range(horizon);
    const double g_rho = g_rho_lipschitz(model.law, qhi, qlo);
    c.lip_p = std::max(c.lip_p, lip_p);
    c.lip_g_rho = std::max(c.lip_g_rho, g_rho);
    if (!lip_speed) {
      c.bounded = false;
      continue;
    }
    const double mixed = mixed_difference_constant(model.law, qhi, qlo);
    c.lip_g_mixed = std::max(c.lip_g_mixed, mixed);
    c.lip_speed = std::max(c.lip_speed, *lip_speed);
    // The harmonic term is 2 g(rho, p'), hence the factors 2 on g.
    c.value += c.lip_chi * (1.0 + lip_p) * (2.0 * g_rho + c.lip_flux) +
               2.0 * mixed * *lip_speed;
  }
  if (!c.bounded) c.value = std::numeric_limits<double>::infinity();
  return c;
}

}  // namespace probeflow
