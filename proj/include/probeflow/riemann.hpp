#pragma once

#include "probeflow/model.hpp"

namespace probeflow {

enum class WaveKind { Constant, Shock, Rarefaction };

/// Which one-sided limit to return exactly on a discontinuity.
enum class TraceSide { Right, Left };

/// Self-similar solution rho(x/t) of a Riemann problem for the flux rho v(rho).
struct RiemannSolution {
  double rho_left = 0.0;
  double rho_right = 0.0;
  WaveKind kind = WaveKind::Constant;
  double shock_speed = 0.0;  // Shock only
  double xi_min = 0.0;       // Rarefaction fan edges, f'(rho_left) <= f'(rho_right)
  double xi_max = 0.0;
  SpeedLaw law;
};

/// Exact solution for a strictly concave flux. Throws DomainError when the
/// law fails the admissibility check.
RiemannSolution solve_riemann(const SpeedLaw& law, double rho_left, double rho_right);

/// Density at xi = x/t. Shocks are right-continuous by default.
double sample_solution(const RiemannSolution& sol, double xi, TraceSide side = TraceSide::Right);

}  // namespace probeflow
