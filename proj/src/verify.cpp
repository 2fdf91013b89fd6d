#include "probeflow/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "probeflow/inverse.hpp"

namespace probeflow {

double SuiteReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw std::out_of_range("suite '" + name + "' has no metric '" + key + "'");
}

std::string SuiteReport::to_json() const {
  nlohmann::json doc;
  doc["suite"] = name;
  doc["pass"] = pass;
  doc["seconds"] = seconds;
  doc["detail"] = detail;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v));
  doc["metrics"] = std::move(m);
  return doc.dump(2);
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Linear interpolation through a probe's realized samples.
double realized_position(const ProbeTrajectory& p, double t) {
  const auto& r = p.realized();
  if (r.empty()) return p.x0();
  if (t <= r.front().t) return r.front().x;
  for (std::size_t k = 1; k < r.size(); ++k)
    if (t <= r[k].t) {
      const double h = r[k].t - r[k - 1].t;
      return h > 0.0 ? r[k - 1].x + (t - r[k - 1].t) / h * (r[k].x - r[k - 1].x) : r[k].x;
    }
  return r.back().x;
}

// ---------------------------------------------------------------------------

SuiteReport phi_positive(std::uint64_t) {
  SuiteReport r;
  double worst = 0.0;
  const double T = 2.5;
  for (double eps : {1.0 / 48.0, 0.1, 0.2, 1.0 / 3.0}) {
    const auto rep = phi_epsilon(eps, T);
    worst = std::max(worst, std::abs(rep.computed / T - (0.375 + 7.0 * eps / 64.0)));
  }
  r.metrics = {{"max_abs_diff", worst}};
  r.pass = worst <= 1e-14;
  return r;
}

SuiteReport phi_jump(std::uint64_t) {
  SuiteReport r;
  const auto lim = phi_one_sided_limits();
  const double jump = lim.plus - lim.minus;
  const double reference_minus = 9.0 / 8.0;
  r.metrics = {{"phi_minus", lim.minus},
               {"phi_plus", lim.plus},
               {"jump", jump},
               {"reference_minus_gap", std::abs(lim.minus - reference_minus)}};
  r.pass = std::abs(jump) >= 0.25;
  std::ostringstream os;
  os << "limit from below " << lim.minus << " differs from the reference value 9/8";
  r.detail = os.str();
  return r;
}

SuiteReport shock_oracle(std::uint64_t seed) {
  SuiteReport r;
  Rng rng(seed);
  const int n = 12;
  double worst = 0.0;
  int bad_structure = 0;
  for (int k = 0; k < 20; ++k) {
    const double eps = uniform(rng, -1.0 / 3.0, 1.0 / 3.0);
    const auto law = SpeedLaw::epsilon(eps);
    const auto exact = solve_riemann(law, 0.125, 0.375);
    const auto flux = piecewise_linearize(law, n);
    const auto fronts = ft_riemann(flux, 1 << (n - 3), 3 << (n - 3));
    if (fronts.size() != 1) ++bad_structure;
    for (const auto& f : fronts) worst = std::max(worst, std::abs(f.speed - exact.shock_speed));
  }
  r.metrics = {{"max_speed_diff", worst}, {"tolerance", 2.0 * std::ldexp(1.0, -n)},
               {"non_single_front", bad_structure}};
  r.pass = worst <= 2.0 * std::ldexp(1.0, -n) && bad_structure == 0;
  return r;
}

SuiteReport no_effect(std::uint64_t) {
  SuiteReport r;
  auto s = builtin("fig_questa");
  s.T = 5.0;
  s.snapshots = 51;
  const auto res = run(s);
  double dev = 0.0;
  for (const auto& d : res.diagnostics)
    dev = std::max({dev, std::abs(d.raw_min - 0.5), std::abs(d.raw_max - 0.5)});
  for (const auto& f : res.snapshots) dev = std::max(dev, (f.rho - 0.5).abs().maxCoeff());
  r.metrics = {{"max_deviation", dev}, {"steps", static_cast<double>(res.diagnostics.size())}};
  r.pass = dev <= 1e-12;
  return r;
}

SuiteReport queue(std::uint64_t) {
  SuiteReport r;
  auto s = builtin("fig_int32");
  s.snapshots = 81;
  const auto res = run(s);
  const double stop = 2.0;
  double behind_max = 0.0;
  double front_min = 1.0;
  double at_behind = 0.0;
  for (const auto& f : res.snapshots) {
    if (f.t < stop || f.t > stop + 1.0 + 1e-12) continue;
    const double p = realized_position(res.probes[0], f.t);
    const Eigen::ArrayXd xc = f.grid.centers();
    double bmax = 0.0;
    double fmin = 1.0;
    for (Eigen::Index j = 0; j < f.grid.cells; ++j) {
      if (xc[j] > p - 10.0 * f.grid.dx && xc[j] < p) bmax = std::max(bmax, f.rho[j]);
      if (xc[j] > p && xc[j] < p + 0.2) fmin = std::min(fmin, f.rho[j]);
    }
    if (bmax > behind_max) {
      behind_max = bmax;
      at_behind = f.t;
    }
    front_min = std::min(front_min, fmin);
  }
  r.metrics = {{"behind_max", behind_max}, {"behind_max_time", at_behind}, {"front_min", front_min},
               {"stop_position", realized_position(res.probes[0], stop)}};
  r.pass = behind_max >= 0.95 && front_min <= 0.05;
  return r;
}

// L1 error against the exact Riemann solution at t = T.
double riemann_error(double dx) {
  auto s = builtin("riemann_phi");
  s.probes.clear();
  s.dx = dx;
  s.snapshots = 2;
  const auto res = run(s);
  const auto exact = solve_riemann(s.law, 0.125, 0.375);
  const auto& f = res.snapshots.back();
  const double xs = exact.shock_speed * f.t;
  double err = 0.0;
  for (Eigen::Index j = 0; j < f.grid.cells; ++j) {
    const double lo = f.grid.x_min + static_cast<double>(j) * dx;
    const double left_part = std::clamp(xs - lo, 0.0, dx);
    const double avg = (0.125 * left_part + 0.375 * (dx - left_part)) / dx;
    err += std::abs(f.rho[j] - avg) * dx;
  }
  return err;
}

SuiteReport convergence(std::uint64_t) {
  SuiteReport r;
  const double dx = 2.5e-3;
  const double e1 = riemann_error(dx);
  const double e2 = riemann_error(dx / 2.0);
  const double order = std::log2(e1 / e2);
  r.metrics = {{"error_dx", e1}, {"error_dx_half", e2}, {"order", order}};
  r.pass = order >= 0.4 && e1 <= 0.01;
  return r;
}

// Random piecewise-linear curve starting near x0 whose slopes stay in [lo, hi].
PolyCurve random_curve(Rng& rng, double x0, double T, double lo, double hi) {
  PolyCurve g;
  const int pieces = uniform_int(rng, 1, 4);
  std::vector<double> cuts;
  for (int k = 1; k < pieces; ++k) cuts.push_back(uniform(rng, 0.0, T));
  std::sort(cuts.begin(), cuts.end());
  g.times.push_back(0.0);
  for (double c : cuts)
    if (c > g.times.back() + 1e-6 && c < T - 1e-6) g.times.push_back(c);
  g.times.push_back(T);
  g.positions.push_back(x0);
  for (std::size_t k = 1; k < g.times.size(); ++k)
    g.positions.push_back(g.positions.back() + uniform(rng, lo, hi) * (g.times[k] - g.times[k - 1]));
  return g;
}

SuiteReport lemma1(std::uint64_t seed) {
  SuiteReport r;
  Rng rng(seed);
  const int n = 5;
  const int levels = 1 << n;
  const int instances = 200;
  int passed = 0;
  int nontrivial = 0;
  double worst_ratio = 0.0;
  std::string first_failure;
  for (int k = 0; k < instances; ++k) {
    const auto law = SpeedLaw::epsilon(uniform(rng, -1.0 / 3.0, 1.0 / 3.0));
    // Dyadic datum: knots on a 1/16 lattice, values on 2^-n.
    const int pieces = uniform_int(rng, 2, 5);
    std::vector<double> knots;
    for (int i = 0; i < pieces - 1; ++i) knots.push_back(uniform_int(rng, -16, 16) / 16.0);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    StepFunction rho0;
    rho0.knots = knots;
    int lowest = levels;
    for (std::size_t i = 0; i <= knots.size(); ++i) {
      const int level = uniform_int(rng, 0, levels);
      lowest = std::min(lowest, level);
      rho0.values.push_back(static_cast<double>(level) / levels);
    }
    // f' is decreasing, so the lowest value carries the fastest characteristic.
    const double fastest = law.flux_derivative(static_cast<double>(lowest) / levels);
    const double c = uniform(rng, 0.05, 0.4);
    const double T = uniform(rng, 0.5, 2.0);
    const double x0 = uniform(rng, -2.0, 0.0);
    const auto g1 = random_curve(rng, x0, T, fastest + c, fastest + c + 0.6);
    const auto g2 = random_curve(rng, x0 + uniform(rng, -0.3, 0.3), T, fastest + c, fastest + c + 0.6);
    const auto res = lemma1_check(law, rho0, g1, g2, c, n);
    if (res.pass) {
      ++passed;
    } else if (first_failure.empty()) {
      std::ostringstream os;
      os.precision(17);
      os << "instance " << k << ": lhs " << res.lhs << " > rhs " << res.rhs;
      first_failure = os.str();
    }
    if (res.lhs > 0.0) ++nontrivial;
    if (res.rhs > 0.0) worst_ratio = std::max(worst_ratio, res.lhs / res.rhs);
  }
  r.metrics = {{"instances", instances}, {"passed", passed}, {"nontrivial", nontrivial},
               {"max_ratio", worst_ratio}};
  r.pass = passed == instances;
  r.detail = first_failure;
  return r;
}

double l1_difference(const DensityField& a, const DensityField& b) {
  return (a.rho - b.rho).abs().sum() * a.grid.dx;
}

Scenario stability_base() {
  Scenario s = builtin("fig_questa");
  s.name = "stability";
  s.x_min = -2.0;
  s.x_max = 10.0;
  s.T = 8.0;
  s.dx = 5e-3;
  s.snapshots = 17;
  const std::vector<ProbeSegment> program = {{0.0, 2.5, SegmentMode::Speed, 0.5},
                                             {2.5, 3.0, SegmentMode::Speed, 0.6},
                                             {4.0, 5.5, SegmentMode::Speed, 0.2},
                                             {6.5, 8.0, SegmentMode::Speed, 0.4}};
  s.probes = {ProbeTrajectory(0.0, program, 0.25), ProbeTrajectory(2.0, program, 0.25)};
  return s;
}

SuiteReport lipschitz_stability(std::uint64_t seed) {
  SuiteReport r;
  Rng rng(seed);
  const auto base = stability_base();
  const auto C = stability_constant_C(base.flux_model(), base.T);
  if (!C.bounded) {
    r.detail = "stability constant unbounded";
    return r;
  }
  const int pairs = 10;
  std::vector<std::pair<Scenario, Scenario>> work;
  for (int k = 0; k < pairs; ++k) {
    Scenario a = base;
    a.datum.clear();
    double cursor = -1.0;
    for (int b = 0; b < 3; ++b) {
      const double from = cursor + uniform(rng, 0.1, 1.0);
      const double to = from + uniform(rng, 0.2, 2.0);
      a.datum.push_back({from, to, uniform(rng, 0.2, 0.8)});
      cursor = to;
    }
    Scenario b = a;
    const double from = uniform(rng, -1.0, 6.0);
    const double to = from + uniform(rng, 0.05, 0.5);
    // Second datum: drop the blocks the new one would overlap.
    b.datum.clear();
    for (const auto& blk : a.datum)
      if (blk.to <= from || blk.from >= to) b.datum.push_back(blk);
    b.datum.push_back({from, to, uniform(rng, 0.1, 0.9)});
    work.emplace_back(std::move(a), std::move(b));
  }

  std::vector<double> ratio(pairs, 0.0);
  std::vector<double> growth(pairs, 0.0);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (int k = next++; k < pairs; k = next++) {
      try {
        const auto r1 = run(work[static_cast<std::size_t>(k)].first);
        const auto r2 = run(work[static_cast<std::size_t>(k)].second);
        const double d0 = l1_difference(r1.snapshots.front(), r2.snapshots.front());
        for (std::size_t i = 0; i < r1.snapshots.size(); ++i) {
          const double d = l1_difference(r1.snapshots[i], r2.snapshots[i]);
          const double t = r1.snapshots[i].t;
          growth[static_cast<std::size_t>(k)] = std::max(growth[static_cast<std::size_t>(k)], d / d0);
          ratio[static_cast<std::size_t>(k)] =
              std::max(ratio[static_cast<std::size_t>(k)], d / (std::exp(C.value * t) * d0));
        }
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned threads = std::min<unsigned>(worker_count(), pairs);
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const double worst = *std::max_element(ratio.begin(), ratio.end());
  r.metrics = {{"C", C.value},
               {"max_ratio", worst},
               {"max_observed_growth", *std::max_element(growth.begin(), growth.end())},
               {"pairs", pairs}};
  r.pass = worst <= 1.05;
  return r;
}

Scenario fuzz_scenario(Rng& rng, int k) {
  Scenario s;
  s.name = "fuzz_" + std::to_string(k);
  s.x_min = 0.0;
  s.x_max = 2.0;
  s.dx = 0.01;
  s.T = uniform(rng, 0.5, 1.5);
  s.cfl = uniform(rng, 0.5, 1.0);
  s.snapshots = 5;
  s.background = uniform(rng, 0.0, 1.0);
  double cursor = 0.0;
  const int blocks = uniform_int(rng, 0, 3);
  for (int b = 0; b < blocks; ++b) {
    const double from = cursor + uniform(rng, 0.0, 0.4);
    const double to = std::min(2.0, from + uniform(rng, 0.05, 0.5));
    if (to <= from) break;
    s.datum.push_back({from, to, uniform(rng, 0.0, 1.0)});
    cursor = to;
  }
  s.law = uniform_int(rng, 0, 1) ? SpeedLaw::greenshields(uniform(rng, 0.5, 2.0))
                                 : SpeedLaw::epsilon(uniform(rng, -1.0 / 3.0, 1.0 / 3.0));
  const double inner = uniform(rng, 0.02, 0.1);
  s.cutoff = CutoffProfile(inner, inner + uniform(rng, 0.02, 0.2));
  const int probes = uniform_int(rng, 0, 2);
  for (int p = 0; p < probes; ++p) {
    const int segs = uniform_int(rng, 1, 3);
    std::vector<ProbeSegment> program;
    double t = 0.0;
    for (int q = 0; q < segs; ++q) {
      const double end = q + 1 == segs ? s.T : t + (s.T - t) * uniform(rng, 0.2, 0.8);
      if (uniform_int(rng, 0, 2) == 0)
        program.push_back({t, end, SegmentMode::Coupled, 0.0});
      else
        program.push_back({t, end, SegmentMode::Speed, uniform(rng, 0.0, 1.5)});
      t = end;
    }
    s.probes.emplace_back(uniform(rng, 0.2, 1.8), std::move(program));
  }
  return s;
}

struct BalanceStats {
  double mass = 0.0;  // worst relative residual
  double low = 1.0;
  double high = 0.0;
};

BalanceStats balance(const RunResult& res) {
  BalanceStats b;
  double prev = res.initial_mass;
  for (const auto& d : res.diagnostics) {
    const double residual = d.mass - prev + d.dt * (d.flux_right - d.flux_left);
    b.mass = std::max(b.mass, std::abs(residual) / std::max(prev, 1e-3));
    b.low = std::min(b.low, d.raw_min);
    b.high = std::max(b.high, d.raw_max);
    prev = d.mass;
  }
  return b;
}

SuiteReport conservation(std::uint64_t seed) {
  SuiteReport r;
  Rng rng(seed);
  std::vector<Scenario> cases;
  for (const auto& name : builtin_names()) cases.push_back(builtin(name));
  const int fuzz = 100;
  for (int k = 0; k < fuzz; ++k) cases.push_back(fuzz_scenario(rng, k));

  std::vector<BalanceStats> stats(cases.size());
  std::vector<std::string> errors(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cases.size(); k = next++) {
      try {
        stats[k] = balance(run(cases[k]));
      } catch (const std::exception& e) {
        errors[k] = cases[k].name + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned threads = std::min<unsigned>(worker_count(), static_cast<unsigned>(cases.size()));
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BalanceStats all;
  int failed_runs = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    if (!errors[k].empty()) {
      if (r.detail.empty()) r.detail = errors[k];
      ++failed_runs;
      continue;
    }
    all.mass = std::max(all.mass, stats[k].mass);
    all.low = std::min(all.low, stats[k].low);
    all.high = std::max(all.high, stats[k].high);
  }
  r.metrics = {{"scenarios", static_cast<double>(cases.size())}, {"failed_runs", failed_runs},
               {"max_rel_mass_residual", all.mass}, {"min_density", all.low},
               {"max_density", all.high}};
  r.pass = failed_runs == 0 && all.mass <= 1e-10 && all.low >= -1e-12 && all.high <= 1.0 + 1e-12;
  return r;
}

SuiteReport rescaling(std::uint64_t) {
  SuiteReport r;
  const std::vector<DatumBlock> datum = {{0.0, 2.0, 0.375}};
  const double dx = 2.5e-3;
  const auto a = rescaling_check(1.0, 2.0, datum, 0.125, -1.0, 2.0, 1.0, dx);
  const auto b = rescaling_check(1.0, 2.0, datum, 0.125, -1.0, 2.0, 1.0, dx / 2.0);
  const double bound = 3.0 * dx * a.tv0;
  const double factor = a.discrepancy / b.discrepancy;
  r.metrics = {{"discrepancy_dx", a.discrepancy}, {"discrepancy_dx_half", b.discrepancy},
               {"bound", bound}, {"factor", factor}, {"tv0", a.tv0}};
  r.pass = a.discrepancy <= bound && factor >= 1.25;
  return r;
}

SuiteReport inverse(std::uint64_t) {
  SuiteReport r;
  const double v_true = 1.2;
  const double v_min = 0.6;
  const double v_max = 2.0;
  const int N = 15;
  const auto planted = plant_truth(planted_base(), v_true);
  const auto samples = scan_E(planted, v_min, v_max, N);
  const auto best = minimize_E(samples, [&](double V) { return evaluate_E(planted, V); }, 20);
  const auto mb = modulus_bound(planted, v_min, v_max, 0.44);
  const double quotient = max_difference_quotient(samples);
  const double err = std::abs(best.V - v_true);
  const double tol = (v_max - v_min) / N + 1e-3;
  r.metrics = {{"V_recovered", best.V}, {"E_min", best.E},      {"recovery_error", err},
               {"tolerance", tol},      {"max_quotient", quotient}, {"modulus_bound", mb.bound},
               {"compliant", mb.compliant ? 1.0 : 0.0}, {"boundary", best.boundary ? 1.0 : 0.0}};
  r.pass = mb.compliant && !best.boundary && err <= tol && quotient <= mb.bound;
  return r;
}

using SuiteFn = SuiteReport (*)(std::uint64_t);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"phi-positive", phi_positive},
      {"phi-jump", phi_jump},
      {"shock-oracle", shock_oracle},
      {"no-effect", no_effect},
      {"queue", queue},
      {"convergence", convergence},
      {"lemma1", lemma1},
      {"lipschitz-stability", lipschitz_stability},
      {"conservation", conservation},
      {"rescaling", rescaling},
      {"inverse", inverse},
  };
  return suites;
}

}  // namespace

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  for (const auto& [key, fn] : registry()) {
    if (key != name) continue;
    const auto start = std::chrono::steady_clock::now();
    SuiteReport r;
    try {
      r = fn(seed);
    } catch (const std::exception& e) {
      r = SuiteReport{};
      r.detail = std::string("aborted: ") + e.what();
    }
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
  throw DomainError("unknown suite '" + name + "'");
}

}  // namespace probeflow
