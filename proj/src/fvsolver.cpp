#include "probeflow/fvsolver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace probeflow {

namespace {

constexpr double kBoundTol = 1e-12;
constexpr double kFdStep = 1e-6;

template <typename Error>
[[noreturn]] void rethrow_tagged(const Error& e, long step, double t) {
  std::ostringstream os;
  os.precision(17);
  os << e.what() << " (step " << step << ", t=" << t << ")";
  throw Error(os.str());
}

double speed_at(const SpeedLaw& law, const CutoffProfile& cutoff,
                const std::vector<ProbeState>& probes, double x, double rho) {
  return encoded_speed(law, cutoff, std::span<const ProbeState>(probes), x, rho);
}

// Sampled sup over the rho sweep of |d f / d rho| at a fixed x.
double sweep_derivative(const SpeedLaw& law, const CutoffProfile& cutoff,
                        const std::vector<ProbeState>& probes, double x) {
  auto f = [&](double r) { return r * speed_at(law, cutoff, probes, x, r); };
  double s = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double r = 0.05 * i;
    const double lo = std::max(0.0, r - kFdStep);
    const double hi = std::min(1.0, r + kFdStep);
    s = std::max(s, std::abs(f(hi) - f(lo)) / (hi - lo));
  }
  // Exact slope at rho = 1. For a slow probe the harmonic term steepens to
  // 2 v'(1) in a layer thinner than any difference step.
  double weight = 0.0;
  double pull = 0.0;
  const double dv = law.derivative(1.0);
  for (const auto& p : probes) {
    const double w = cutoff(x - p.x);
    weight += w;
    pull += w * (p.speed > 0.0 ? dv : -dv);
  }
  if (weight > 1.0) pull /= weight;
  return std::max(s, std::abs(dv + pull));
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid and fields
// ---------------------------------------------------------------------------

Grid Grid::uniform(double x_min, double x_max, double dx) {
  if (!(dx > 0.0) || !(x_max > x_min)) throw DomainError("grid needs dx > 0 and x_max > x_min");
  const double ratio = (x_max - x_min) / dx;
  const double whole = std::round(ratio);
  if (std::abs(ratio - whole) > 1e-9 * std::max(1.0, whole) || whole < 4.0)
    throw DomainError("domain length must be a whole number (>= 4) of cells");
  Grid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.dx = dx;
  g.cells = static_cast<Eigen::Index>(whole);
  return g;
}

Eigen::ArrayXd Grid::centers() const {
  return x_min + dx * (Eigen::ArrayXd::LinSpaced(cells, 0.0, static_cast<double>(cells - 1)) + 0.5);
}

DensityField init_field(const Grid& grid, const std::vector<DatumBlock>& datum, double background) {
  if (!(background >= 0.0 && background <= 1.0)) throw DomainError("background density outside [0,1]");
  DensityField field;
  field.grid = grid;
  field.rho = Eigen::ArrayXd::Constant(grid.cells, background);
  for (const auto& b : datum) {
    if (!(b.value >= 0.0 && b.value <= 1.0)) throw DomainError("datum value outside [0,1]");
    for (Eigen::Index j = 0; j < grid.cells; ++j) {
      const double lo = grid.x_min + static_cast<double>(j) * grid.dx;
      const double overlap = std::min(lo + grid.dx, b.to) - std::max(lo, b.from);
      if (overlap > 0.0) field.rho[j] += (b.value - background) * overlap / grid.dx;
    }
  }
  field.rho = field.rho.min(1.0).max(0.0);
  return field;
}

double cfl_dt(const DensityField& field, const FluxModel& model,
              const std::vector<ProbeState>& probes, double cfl) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("CFL number must lie in (0, 1]");
  // Away from every probe the flux is rho v(rho) and its derivative is exact.
  double s = 0.0;
  for (int i = 0; i <= 20; ++i) s = std::max(s, std::abs(model.law.flux_derivative(0.05 * i)));
  const double reach = model.cutoff.outer();
  for (const auto& p : probes) {
    const auto& g = field.grid;
    const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(
                                                     std::floor((p.x - reach - g.x_min) / g.dx)));
    const auto last = std::min<Eigen::Index>(
        g.cells - 1, static_cast<Eigen::Index>(std::ceil((p.x + reach - g.x_min) / g.dx)));
    for (Eigen::Index j = first; j <= last; ++j)
      s = std::max(s, sweep_derivative(model.law, model.cutoff, probes, g.center(j)));
  }
  return cfl * field.grid.dx / std::max(s, 1e-10);
}

Eigen::Index trace_cell(const Grid& grid, double p, TraceSide side) {
  // Right: first center >= p. Left: last center <= p.
  const double u = (p - grid.x_min) / grid.dx - 0.5;
  if (side == TraceSide::Right) {
    const double j = std::ceil(u);
    if (j < 0.0) return 0;
    if (j > static_cast<double>(grid.cells - 1)) return grid.cells - 1;
    return static_cast<Eigen::Index>(j);
  }
  const double j = std::floor(u);
  if (j < 0.0) return 0;
  if (j > static_cast<double>(grid.cells - 1)) return grid.cells - 1;
  return static_cast<Eigen::Index>(j);
}

double trace_value(const DensityField& field, double p, TraceSide side) {
  return field.rho[trace_cell(field.grid, p, side)];
}

DensityField lxf_step(const DensityField& field, const FluxModel& model,
                      const std::vector<ProbeState>& probes, double dt, StepFluxes* fluxes) {
  const auto n = field.grid.cells;
  const double dx = field.grid.dx;
  Eigen::ArrayXd rho(n + 2);
  rho.segment(1, n) = field.rho;
  rho[0] = field.rho[0];
  rho[n + 1] = field.rho[n - 1];

  Eigen::ArrayXd flux(n + 2);
  for (Eigen::Index j = 0; j < n + 2; ++j) {
    const double x = field.grid.center(j - 1);
    flux[j] = rho[j] * speed_at(model.law, model.cutoff, probes, x, rho[j]);
  }

  DensityField next;
  next.grid = field.grid;
  next.t = field.t + dt;
  next.rho = 0.5 * (rho.head(n) + rho.tail(n)) - (0.5 * dt / dx) * (flux.tail(n) - flux.head(n));

  const double lo = next.rho.minCoeff();
  const double hi = next.rho.maxCoeff();
  if (!(lo >= -kBoundTol && hi <= 1.0 + kBoundTol)) {
    std::ostringstream os;
    os.precision(17);
    os << "density left [0,1]: min " << lo << ", max " << hi;
    throw StabilityError(os.str());
  }
  next.rho = next.rho.max(0.0).min(1.0);
  if (fluxes) {
    fluxes->left = 0.5 * (flux[0] + flux[1]);
    fluxes->right = 0.5 * (flux[n] + flux[n + 1]);
    fluxes->raw_min = lo;
    fluxes->raw_max = hi;
  }
  return next;
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

std::vector<ProbeState> probe_states(const std::vector<ProbeTrajectory>& probes,
                                     const std::vector<double>& positions,
                                     const DensityField& field, const SpeedLaw& law,
                                     TraceSide side) {
  std::vector<ProbeState> out;
  out.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double x = positions[i];
    const double speed = probes[i].coupled_at(field.t)
                             ? law.speed(trace_value(field, x, side))
                             : probes[i].programmed_speed(field.t);
    out.push_back({x, speed});
  }
  return out;
}

void advance_probes(std::vector<ProbeTrajectory>& probes, std::vector<double>& positions,
                    const DensityField& field, const SpeedLaw& law, double dt, TraceSide side) {
  const double t = field.t;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto& probe = probes[i];
    const double trace = trace_value(field, positions[i], side);
    double speed = 0.0;
    double step = 0.0;
    if (probe.coupled_at(t)) {
      speed = law.speed(trace);
      step = speed * dt;
    } else {
      step = probe.displacement(t, t + dt);
      speed = step / dt;
    }
    probe.record({t, positions[i], speed, trace});
    positions[i] += step;
  }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

std::vector<double> snapshot_times(const Scenario& s) {
  const int n = std::max(s.snapshots, 2);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = s.T * k / (n - 1);
  out.back() = s.T;
  return out;
}

RunResult run(const Scenario& scenario) {
  const Grid grid = Grid::uniform(scenario.x_min, scenario.x_max, scenario.dx);
  const FluxModel model = scenario.flux_model();
  const TraceSide side = scenario.trace_side;

  RunResult result;
  result.probes = scenario.probes;
  for (auto& p : result.probes) p.clear_realized();
  std::vector<double> positions;
  for (const auto& p : result.probes) positions.push_back(p.x0());

  DensityField field = init_field(grid, scenario.datum, scenario.background);
  result.initial_mass = field.mass();

  const auto snaps = snapshot_times(scenario);
  std::vector<double> events(snaps.begin() + 1, snaps.end());
  for (const auto& p : result.probes)
    for (double b : p.breakpoints())
      if (b > 0.0 && b < scenario.T) events.push_back(b);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  result.snapshots.push_back(field);
  std::size_t next_snap = 1;
  std::size_t next_event = 0;
  const double t_tol = 1e-12 * std::max(1.0, scenario.T);
  long step = 0;

  while (next_event < events.size()) {
    try {
      const auto states = probe_states(result.probes, positions, field, model.law, side);
      const std::vector<ProbeState> active =
          scenario.passive_probes ? std::vector<ProbeState>{} : states;
      double dt = cfl_dt(field, model, active, scenario.cfl);
      const double target = events[next_event];
      const bool hit = field.t + dt >= target - t_tol;
      if (hit) dt = target - field.t;

      StepFluxes fluxes;
      DensityField next = lxf_step(field, model, active, dt, &fluxes);
      advance_probes(result.probes, positions, field, model.law, dt, side);
      if (hit) {
        next.t = target;
        ++next_event;
      }
      field = std::move(next);
      ++step;
      result.diagnostics.push_back({step, field.t, dt, field.mass(), field.rho.minCoeff(),
                                    field.rho.maxCoeff(), fluxes.left, fluxes.right, fluxes.raw_min,
                                    fluxes.raw_max});
      if (next_snap < snaps.size() && field.t == snaps[next_snap]) {
        result.snapshots.push_back(field);
        ++next_snap;
      }
    } catch (const StabilityError& e) {
      rethrow_tagged(e, step, field.t);
    } catch (const StateError& e) {
      rethrow_tagged(e, step, field.t);
    } catch (const DomainError& e) {
      rethrow_tagged(e, step, field.t);
    }
  }

  // Closing sample so realized paths cover [0, T].
  // The last program piece is half-open, so the speed at T is read from T-.
  const double t_before = std::nextafter(field.t, -1.0);
  for (std::size_t i = 0; i < result.probes.size(); ++i) {
    const auto& p = result.probes[i];
    const double trace = trace_value(field, positions[i], side);
    const double speed =
        p.coupled_at(t_before) ? model.law.speed(trace) : p.programmed_speed(t_before);
    result.probes[i].record({field.t, positions[i], speed, trace});
  }
  return result;
}

}  // namespace probeflow
