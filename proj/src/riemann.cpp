#include "probeflow/riemann.hpp"

namespace probeflow {

RiemannSolution solve_riemann(const SpeedLaw& law, double rho_left, double rho_right) {
  if (!check_admissible(law).all_pass())
    throw DomainError("Riemann solver needs a strictly concave flux; " + law.describe() +
                      " is not admissible");
  // Evaluating the law validates both states.
  const double f_left = law.flux(rho_left);
  const double f_right = law.flux(rho_right);

  RiemannSolution sol;
  sol.rho_left = rho_left;
  sol.rho_right = rho_right;
  sol.law = law;
  if (rho_left == rho_right) {
    sol.kind = WaveKind::Constant;
  } else if (rho_left < rho_right) {
    sol.kind = WaveKind::Shock;
    sol.shock_speed = (f_right - f_left) / (rho_right - rho_left);
  } else {
    sol.kind = WaveKind::Rarefaction;
    sol.xi_min = law.flux_derivative(rho_left);
    sol.xi_max = law.flux_derivative(rho_right);
  }
  return sol;
}

double sample_solution(const RiemannSolution& sol, double xi, TraceSide side) {
  switch (sol.kind) {
    case WaveKind::Constant:
      return sol.rho_left;
    case WaveKind::Shock:
      if (xi == sol.shock_speed) return side == TraceSide::Right ? sol.rho_right : sol.rho_left;
      return xi < sol.shock_speed ? sol.rho_left : sol.rho_right;
    case WaveKind::Rarefaction:
      break;
  }
  if (xi <= sol.xi_min) return sol.rho_left;
  if (xi >= sol.xi_max) return sol.rho_right;
  // f' is decreasing: bracket [rho_right, rho_left] with f'(lo) > xi > f'(hi).
  double lo = sol.rho_right;
  double hi = sol.rho_left;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (sol.law.flux_derivative(mid) > xi)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace probeflow
