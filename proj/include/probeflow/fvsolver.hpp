#pragma once

#include <vector>

#include <Eigen/Core>

#include "probeflow/model.hpp"
#include "probeflow/scenarios.hpp"

namespace probeflow {

struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  double dx = 1.0;
  Eigen::Index cells = 0;

  /// Throws DomainError unless (x_max - x_min)/dx is a whole number >= 4.
  static Grid uniform(double x_min, double x_max, double dx);
  double center(Eigen::Index j) const { return x_min + (static_cast<double>(j) + 0.5) * dx; }
  Eigen::ArrayXd centers() const;
};

struct DensityField {
  Grid grid;
  double t = 0.0;
  Eigen::ArrayXd rho;

  double mass() const { return rho.sum() * grid.dx; }
};

DensityField init_field(const Grid& grid, const std::vector<DatumBlock>& datum, double background);

/// cfl dx / S with S the sampled sup of |d f / d rho| over cells and rho in
/// {0, 0.05, ..., 1}.
double cfl_dt(const DensityField& field, const FluxModel& model,
              const std::vector<ProbeState>& probes, double cfl);

/// Index of the cell read as the trace at p.
Eigen::Index trace_cell(const Grid& grid, double p, TraceSide side = TraceSide::Right);
double trace_value(const DensityField& field, double p, TraceSide side = TraceSide::Right);

struct StepFluxes {
  double left = 0.0;   // numerical flux through x_min
  double right = 0.0;  // numerical flux through x_max
  double raw_min = 0.0;  // extrema before clamping
  double raw_max = 0.0;
};

/// One Lax-Friedrichs step with outflow ghost cells. Values leaving [0,1] by
/// more than 1e-12 raise StabilityError; smaller excursions are clamped.
DensityField lxf_step(const DensityField& field, const FluxModel& model,
                      const std::vector<ProbeState>& probes, double dt,
                      StepFluxes* fluxes = nullptr);

/// Current speeds of the probes at field.t: programmed speed on exogenous
/// segments, v(trace) on coupled ones.
std::vector<ProbeState> probe_states(const std::vector<ProbeTrajectory>& probes,
                                     const std::vector<double>& positions,
                                     const DensityField& field, const SpeedLaw& law,
                                     TraceSide side = TraceSide::Right);

/// Move every probe over [field.t, field.t + dt] and append a realized sample.
void advance_probes(std::vector<ProbeTrajectory>& probes, std::vector<double>& positions,
                    const DensityField& field, const SpeedLaw& law, double dt,
                    TraceSide side = TraceSide::Right);

struct StepDiagnostics {
  long step = 0;
  double t = 0.0;  // time after the step
  double dt = 0.0;
  double mass = 0.0;
  double min = 0.0;
  double max = 0.0;
  double flux_left = 0.0;
  double flux_right = 0.0;
  double raw_min = 0.0;
  double raw_max = 0.0;
};

struct RunResult {
  std::vector<DensityField> snapshots;
  std::vector<ProbeTrajectory> probes;  // with realized paths
  std::vector<StepDiagnostics> diagnostics;
  double initial_mass = 0.0;
};

/// Snapshot times: snapshots evenly spaced points covering [0, T].
std::vector<double> snapshot_times(const Scenario& s);

RunResult run(const Scenario& scenario);

}  // namespace probeflow
