#include "probeflow/inverse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace probeflow {

// ---------------------------------------------------------------------------
// Error functional
// ---------------------------------------------------------------------------

ErrorFunctionalReport error_functional(const RunResult& run, std::size_t index, const SpeedLaw& law) {
  if (index >= run.probes.size())
    throw PreconditionError("probe index " + std::to_string(index) + " out of range");
  const auto& samples = run.probes[index].realized();
  if (samples.size() < 2) throw PreconditionError("probe has no realized path");
  ErrorFunctionalReport report;
  report.series.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const double v = law.speed(s.trace);
    report.series.push_back({s.t, s.x, s.trace, v});
    if (k + 1 == samples.size()) break;
    // The trace is frozen over a solver step: the midpoint and left values agree.
    report.value += std::abs(s.speed - v) * (samples[k + 1].t - s.t);
    ++report.steps;
  }
  return report;
}

// ---------------------------------------------------------------------------
// phi
// ---------------------------------------------------------------------------

PhiReport phi_epsilon(double eps, double T, TraceSide side) {
  if (!(eps >= -1.0 / 3.0 && eps <= 1.0 / 3.0))
    throw DomainError("epsilon " + std::to_string(eps) + " outside [-1/3, 1/3]");
  if (!(T > 0.0)) throw DomainError("T must be positive");
  const SpeedLaw law = SpeedLaw::epsilon(eps);
  const auto sol = solve_riemann(law, 0.125, 0.375);
  constexpr double probe_speed = 0.5;

  PhiReport r;
  r.eps = eps;
  r.T = T;
  r.shock_speed = sol.shock_speed;
  // p(t) = t/2 sits on the ray xi = 1/2 for all t > 0.
  r.trace = sample_solution(sol, probe_speed, side);
  r.computed = std::abs(probe_speed - law.speed(r.trace)) * T;
  if (eps <= 0.0) {
    r.branch = "eps<=0";
    r.paper_formula = (9.0 / 8.0 + 15.0 * eps / 64.0) * T;
  } else {
    r.branch = "eps>0";
    r.paper_formula = (3.0 / 8.0 + 7.0 * eps / 64.0) * T;
  }
  r.agree = std::abs(r.computed - r.paper_formula) <= 1e-12 * T;
  return r;
}

PhiLimits phi_one_sided_limits(double offset, TraceSide side) {
  return {phi_epsilon(-offset, 1.0, side).computed, phi_epsilon(offset, 1.0, side).computed};
}

// ---------------------------------------------------------------------------
// E(V)
// ---------------------------------------------------------------------------

double evaluate_E(const Scenario& scenario, double V) {
  Scenario s = scenario;
  s.law = SpeedLaw::greenshields(V);
  s.passive_probes = true;
  try {
    return error_functional(run(s), 0, s.law).value;
  } catch (const StabilityError& e) {
    throw StabilityError(std::string(e.what()) + " [V=" + std::to_string(V) + "]");
  }
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PROBEFLOW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

std::vector<ESample> scan_E(const Scenario& scenario, double v_min, double v_max, int N) {
  if (!(v_max > v_min && v_min > 0.0)) throw PreconditionError("need v_max > v_min > 0");
  if (N < 2) throw PreconditionError("need at least 2 samples");
  std::vector<ESample> out(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    out[static_cast<std::size_t>(i)].V =
        i + 1 == N ? v_max : v_min + (v_max - v_min) * i / (N - 1);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        out[i].E = evaluate_E(scenario, out[i].V);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(worker_count(), static_cast<unsigned>(N));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::pair<double, double> golden_section(const std::function<double(double)>& f, double lo,
                                         double hi, int iters, int* evaluations) {
  if (!(hi > lo)) throw PreconditionError("golden section needs lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  for (int k = 0; k < iters; ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  if (evaluations) *evaluations += evals;
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

MinimizeResult minimize_E(const std::vector<ESample>& samples,
                          const std::function<double(double)>& evaluator, int refine_iters) {
  if (samples.size() < 2) throw PreconditionError("need at least 2 samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].E < samples[best].E) best = i;

  MinimizeResult r;
  r.V = samples[best].V;
  r.E = samples[best].E;
  r.bracket_lo = samples[best == 0 ? 0 : best - 1].V;
  r.bracket_hi = samples[std::min(best + 1, samples.size() - 1)].V;
  if (best == 0 || best + 1 == samples.size()) {
    r.boundary = true;
    return r;
  }
  if (refine_iters <= 0) return r;
  const auto [v, e] = golden_section(evaluator, r.bracket_lo, r.bracket_hi, refine_iters, &r.evaluations);
  if (e < r.E || (e == r.E && v < r.V)) {
    r.V = v;
    r.E = e;
  }
  return r;
}

double max_difference_quotient(const std::vector<ESample>& samples) {
  double q = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i)
    q = std::max(q, std::abs(samples[i].E - samples[i - 1].E) / (samples[i].V - samples[i - 1].V));
  return q;
}

ModulusBound modulus_bound(const Scenario& s, double v_min, double v_max, double rho_check) {
  if (s.probes.empty()) throw PreconditionError("scenario has no probe");
  const auto& p = s.probes.front();
  if (p.has_coupled()) throw PreconditionError("modulus bound needs an exogenous probe path");
  ModulusBound b;
  b.inf_rho0 = s.background;
  std::vector<std::pair<std::pair<double, double>, double>> blocks;
  for (const auto& blk : s.datum) {
    b.inf_rho0 = std::min(b.inf_rho0, blk.value);
    blocks.push_back({{blk.from, blk.to}, blk.value});
  }
  b.tv0 = make_step_function(s.background, blocks).total_variation();
  b.inf_speed = p.speed_range(s.T).first;
  b.required_speed = v_max * (1.0 - 2.0 * rho_check);
  b.c = 2.0 * (b.inf_rho0 - rho_check);
  b.compliant = b.inf_rho0 > rho_check && b.inf_speed >= b.required_speed;
  // Speeds are non-negative, so p is monotone and |p| peaks at an endpoint.
  b.path_norm = std::max(std::abs(p.x0()), std::abs(p.x0() + p.displacement(0.0, s.T)));
  b.bound = b.c > 0.0 ? v_max * b.tv0 * b.path_norm / (b.c * v_min) + s.T
                      : std::numeric_limits<double>::infinity();
  return b;
}

Scenario plant_truth(const Scenario& base, double V_true) {
  if (base.probes.empty()) throw PreconditionError("scenario has no probe");
  Scenario s = base;
  s.law = SpeedLaw::greenshields(V_true);
  s.passive_probes = true;
  s.probes = {ProbeTrajectory(base.probes.front().x0(), {{0.0, base.T, SegmentMode::Coupled, 0.0}})};
  const auto result = run(s);
  const auto& path = result.probes.front().realized();
  std::vector<ProbeSegment> program;
  program.reserve(path.size());
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    program.push_back({path[k].t, path[k + 1].t, SegmentMode::Speed, path[k].speed});
  Scenario planted = base;
  planted.passive_probes = true;
  planted.probes = {ProbeTrajectory(base.probes.front().x0(), std::move(program))};
  return planted;
}

Scenario planted_base() {
  Scenario s;
  s.name = "planted";
  s.x_min = -1.0;
  s.x_max = 4.0;
  s.T = 2.0;
  s.law = SpeedLaw::greenshields(1.0);
  s.background = 0.45;
  s.datum = {{0.5, 1.5, 0.55}};
  s.probes = {ProbeTrajectory(0.0, {{0.0, 2.0, SegmentMode::Coupled, 0.0}})};
  s.passive_probes = true;
  s.snapshots = 11;
  s.reconstructed = {"all"};
  return s;
}

// ---------------------------------------------------------------------------
// Rescaling identity
// ---------------------------------------------------------------------------

namespace {

double snap_to_cells(double x, double dx, bool up) {
  const double u = x / dx;
  const double r = std::round(u);
  if (std::abs(u - r) < 1e-9) return r * dx;
  return (up ? std::ceil(u) : std::floor(u)) * dx;
}

double interpolate(const DensityField& f, double y) {
  const double u = (y - f.grid.x_min) / f.grid.dx - 0.5;
  const double last = static_cast<double>(f.grid.cells - 1);
  if (u <= 0.0) return f.rho[0];
  if (u >= last) return f.rho[f.grid.cells - 1];
  const auto j = static_cast<Eigen::Index>(std::floor(u));
  const double theta = u - static_cast<double>(j);
  return (1.0 - theta) * f.rho[j] + theta * f.rho[j + 1];
}

}  // namespace

RescalingReport rescaling_check(double V1, double V2, const std::vector<DatumBlock>& datum,
                                double background, double x_min, double x_max, double T,
                                double dx) {
  if (!(V1 > 0.0 && V2 > 0.0)) throw DomainError("speeds must be positive");
  const double scale = V2 / V1;

  Scenario s1;
  s1.name = "rescale_v1";
  s1.x_min = x_min;
  s1.x_max = x_max;
  s1.T = T;
  s1.dx = dx;
  s1.law = SpeedLaw::greenshields(V1);
  s1.background = background;
  s1.datum = datum;
  s1.snapshots = 11;

  Scenario s2 = s1;
  s2.name = "rescale_v2";
  s2.law = SpeedLaw::greenshields(V2);
  s2.x_min = snap_to_cells(x_min * scale, dx, false);
  s2.x_max = snap_to_cells(x_max * scale, dx, true);
  for (auto& b : s2.datum) {
    b.from *= scale;
    b.to *= scale;
  }

  const auto r1 = run(s1);
  const auto r2 = run(s2);
  RescalingReport rep;
  rep.dx = dx;
  std::vector<std::pair<std::pair<double, double>, double>> blocks;
  for (const auto& b : datum) blocks.push_back({{b.from, b.to}, b.value});
  rep.tv0 = make_step_function(background, blocks).total_variation();
  for (std::size_t k = 0; k < r1.snapshots.size() && k < r2.snapshots.size(); ++k) {
    const auto& f1 = r1.snapshots[k];
    const auto& f2 = r2.snapshots[k];
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < f2.grid.cells; ++j) {
      const double y = f2.grid.center(j) / scale;
      if (y < f1.grid.center(0) || y > f1.grid.center(f1.grid.cells - 1)) continue;
      l1 += std::abs(f2.rho[j] - interpolate(f1, y)) * dx;
    }
    rep.discrepancy = std::max(rep.discrepancy, l1);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Curve estimate
// ---------------------------------------------------------------------------

Lemma1Result lemma1_check(const SpeedLaw& law, const StepFunction& rho0, const PolyCurve& g1,
                          const PolyCurve& g2, double c, int n) {
  if (g1.times.empty() || g2.times.empty()) throw PreconditionError("curves need knots");
  const double T = std::min(g1.times.back(), g2.times.back());
  const auto flux = piecewise_linearize(law, n);
  const auto history = evolve_with_history(make_front_state(flux, quantize_datum(rho0, n)), T);
  const auto ci = sample_curve_integral(history, law, g1, g2, T, c);
  return {ci.integral, ci.bound, ci.integral <= ci.bound};
}

}  // namespace probeflow
