#include <doctest.h>

#include "probeflow/fvsolver.hpp"
#include "probeflow/scenarios.hpp"

using namespace probeflow;

namespace {
FluxModel plain() { return FluxModel{SpeedLaw::greenshields(1.0), CutoffProfile(), {}}; }
}  // namespace

TEST_CASE("initial data are cell averages") {
  const auto g = Grid::uniform(-0.5, 4.0, 2.5e-3);
  CHECK(g.cells == 1800);
  const auto flat = init_field(g, {}, 0.5);
  CHECK((flat.rho == 0.5).all());
  const auto blocks = init_field(g, {{0.001, 0.1, 1.0}, {0.2, 0.4, 1.0}, {0.5, 0.8, 1.0}}, 0.0);
  // Cell [0, 0.0025) holds 0.0015 of the first block.
  CHECK(blocks.rho[200] == doctest::Approx(0.6).epsilon(1e-12));
  for (Eigen::Index j = 0; j < g.cells; ++j)
    if (g.center(j) - 0.5 * g.dx >= 0.2 && g.center(j) + 0.5 * g.dx <= 0.4) CHECK(blocks.rho[j] == 1.0);
  CHECK_THROWS_AS(Grid::uniform(0.0, 1.0, 0.3), DomainError);
}

TEST_CASE("CFL time step") {
  const auto g = Grid::uniform(0.0, 1.0, 2.5e-3);
  CHECK(cfl_dt(init_field(g, {}, 0.3), plain(), {}, 0.9) == doctest::Approx(2.25e-3).epsilon(1e-14));
  CHECK(cfl_dt(init_field(g, {}, 1.0), plain(), {}, 0.9) == doctest::Approx(2.25e-3).epsilon(1e-14));
  CHECK_THROWS_AS(cfl_dt(init_field(g, {}, 0.3), plain(), {}, 1.5), DomainError);
}

TEST_CASE("Lax-Friedrichs step") {
  const auto g = Grid::uniform(0.0, 1.0, 0.01);
  const auto flat = init_field(g, {}, 0.4);
  CHECK((lxf_step(flat, plain(), {}, 0.005).rho == 0.4).all());

  FluxModel probed{SpeedLaw::greenshields(1.0), CutoffProfile(),
                   {ProbeTrajectory(0.5, {{0, 1, SegmentMode::Speed, 0.5}})}};
  const std::vector<ProbeState> at = {{0.5, 0.5}, {0.53, 0.5}};
  const auto half = init_field(g, {}, 0.5);
  CHECK((lxf_step(half, probed, at, 0.009).rho - 0.5).abs().maxCoeff() <= 1e-12);

  auto bump = flat;
  bump.rho[50] = 0.6;
  const auto next = lxf_step(bump, plain(), {}, 0.005);
  for (Eigen::Index j = 0; j < g.cells; ++j) {
    if (j == 49 || j == 51)
      CHECK(next.rho[j] != 0.4);
    else
      CHECK(next.rho[j] == doctest::Approx(0.4).epsilon(1e-15));
  }
}

TEST_CASE("probe motion") {
  const auto law = SpeedLaw::greenshields(1.0);
  const auto g = Grid::uniform(0.0, 2.0, 0.01);
  std::vector<ProbeTrajectory> probes = {ProbeTrajectory(0.5, {{0, 1, SegmentMode::Speed, 0.5}})};
  std::vector<double> pos = {0.5};
  advance_probes(probes, pos, init_field(g, {}, 0.3), law, 0.01);
  CHECK(pos[0] == doctest::Approx(0.505));

  std::vector<ProbeTrajectory> coupled = {ProbeTrajectory(0.5, {{0, 1, SegmentMode::Coupled, 0.0}})};
  pos = {0.5};
  advance_probes(coupled, pos, init_field(g, {}, 0.0), law, 0.01);
  CHECK(pos[0] == doctest::Approx(0.51));
  CHECK(coupled[0].realized().back().speed == 1.0);

  pos = {0.5};
  advance_probes(coupled, pos, init_field(g, {}, 1.0), law, 0.01);
  CHECK(pos[0] == 0.5);
}

TEST_CASE("trace conventions") {
  const auto g = Grid::uniform(0.0, 1.0, 0.1);
  CHECK(trace_cell(g, 0.3) == 3);
  CHECK(trace_cell(g, 0.3, TraceSide::Left) == 2);
  CHECK(trace_cell(g, 0.25) == 2);
  CHECK(trace_cell(g, 0.25, TraceSide::Left) == 2);
  CHECK(trace_cell(g, 0.5) == 5);
  CHECK(trace_cell(g, -1.0) == 0);
  CHECK(trace_cell(g, 7.0) == 9);
}

TEST_CASE("probes consistent with the background leave it untouched") {
  auto s = builtin("fig_questa");
  s.T = 5.0;
  const auto res = run(s);
  double dev = 0.0;
  for (const auto& f : res.snapshots) dev = std::max(dev, (f.rho - 0.5).abs().maxCoeff());
  CHECK(dev <= 1e-12);
}

TEST_CASE("driver bookkeeping") {
  auto s = builtin("fig_int32");
  s.dx = 0.01;
  const auto res = run(s);
  CHECK(res.snapshots.size() == 50);
  CHECK(res.snapshots.back().t == s.T);
  for (const auto& sample : res.probes[0].realized())
    if (sample.t >= 2.0) CHECK(sample.speed == 0.0);
  const auto& path = res.probes[0].realized();
  for (std::size_t k = 1; k < path.size(); ++k) CHECK(path[k].x >= path[k - 1].x);
  for (const auto& d : res.diagnostics) {
    CHECK(d.min >= 0.0);
    CHECK(d.max <= 1.0);
  }
}

TEST_CASE("shock convergence") {
  auto s = builtin("riemann_phi");
  s.probes.clear();
  auto error = [&](double dx) {
    s.dx = dx;
    const auto f = run(s).snapshots.back();
    double e = 0.0;
    for (Eigen::Index j = 0; j < f.grid.cells; ++j) {
      const double lo = f.grid.x_min + static_cast<double>(j) * dx;
      const double left = std::clamp(0.5 - lo, 0.0, dx);
      e += std::abs(f.rho[j] - (0.125 * left + 0.375 * (dx - left)) / dx) * dx;
    }
    return e;
  };
  const double e1 = error(5e-3);
  const double e2 = error(2.5e-3);
  CHECK(std::log2(e1 / e2) >= 0.4);
}
