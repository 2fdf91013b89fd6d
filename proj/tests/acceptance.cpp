// Acceptance gate: one PASS/FAIL line per criterion. Thresholds and runtime
// limits live here, independent of the suites' own verdicts.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "probeflow/verify.hpp"

namespace {

struct Criterion {
  int id;
  const char* suite;
  const char* title;
  double max_seconds;
  std::function<bool(const probeflow::SuiteReport&, std::string&)> check;
};

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const std::vector<Criterion>& criteria() {
  using R = probeflow::SuiteReport;
  static const std::vector<Criterion> list = {
      {1, "phi-positive", "phi positive branch", 1.0,
       [](const R& r, std::string& m) {
         const double d = r.metric("max_abs_diff");
         m = fmt("max |phi/T - (3/8 + 7eps/64)| = %.3g (tol %.0e)", d, 1e-14);
         return d <= 1e-14;
       }},
      {2, "phi-jump", "phi discontinuity at eps = 0", 1.0,
       [](const R& r, std::string& m) {
         const double j = r.metric("jump");
         m = fmt("phi(0+) - phi(0-) = %.15g per unit T (need >= %.2f)", j, 0.25);
         m += fmt(", phi(0-) = %.15g vs reference %.4g", r.metric("phi_minus"), 9.0 / 8.0);
         return std::abs(j) >= 0.25;
       }},
      {3, "shock-oracle", "shock speed, exact vs front tracking", 10.0,
       [](const R& r, std::string& m) {
         const double d = r.metric("max_speed_diff");
         m = fmt("max |s_exact - s_ft| = %.3g (tol %.3g) over 20 eps", d, 2.0 / 4096.0);
         return d <= 2.0 / 4096.0 && r.metric("non_single_front") == 0.0;
       }},
      {4, "no-effect", "consistent probes leave rho = 0.5", 30.0,
       [](const R& r, std::string& m) {
         const double d = r.metric("max_deviation");
         m = fmt("max |rho - 0.5| on [0,5] = %.3g (tol %.0e)", d, 1e-12);
         return d <= 1e-12;
       }},
      {5, "queue", "queue forms behind the stopped probe", 60.0,
       [](const R& r, std::string& m) {
         const double b = r.metric("behind_max");
         const double f = r.metric("front_min");
         m = fmt("max rho behind = %.4f (need >= 0.95), min rho ahead = %.4f (need <= 0.05)", b, f);
         return b >= 0.95 && f <= 0.05;
       }},
      {6, "convergence", "LxF convergence to the exact shock", 30.0,
       [](const R& r, std::string& m) {
         const double o = r.metric("order");
         const double e = r.metric("error_dx");
         m = fmt("observed order %.3f (need >= 0.4), L1 error %.3g at dx = 2.5e-3 (need <= 0.01)", o, e);
         return o >= 0.4 && e <= 0.01;
       }},
      {7, "lemma1", "curve estimate on fuzzed instances", 60.0,
       [](const R& r, std::string& m) {
         const double p = r.metric("passed");
         const double n = r.metric("instances");
         m = fmt("%.0f of %.0f instances satisfy lhs <= TV |g1-g2| / c", p, n);
         m += fmt(", worst lhs/rhs %.4f, nontrivial %.0f", r.metric("max_ratio"), r.metric("nontrivial"));
         return n == 200.0 && p == n;
       }},
      {8, "lipschitz-stability", "L1 stability with the computed rate", 300.0,
       [](const R& r, std::string& m) {
         const double q = r.metric("max_ratio");
         m = fmt("max |drho(t)| / (e^{Ct} |drho0|) = %.4f (need <= 1.05), C = %.6g", q, r.metric("C"));
         return q <= 1.05 && r.metric("pairs") == 10.0;
       }},
      {9, "conservation", "mass balance and maximum principle", 300.0,
       [](const R& r, std::string& m) {
         const double res = r.metric("max_rel_mass_residual");
         m = fmt("max relative mass residual %.3g (tol %.0e)", res, 1e-10);
         m += fmt(", density range [%.3g, %.17g]", r.metric("min_density"), r.metric("max_density"));
         return r.metric("failed_runs") == 0.0 && r.metric("scenarios") >= 105.0 && res <= 1e-10 &&
                r.metric("min_density") >= -1e-12 && r.metric("max_density") <= 1.0 + 1e-12;
       }},
      {10, "rescaling", "rescaling identity", 60.0,
       [](const R& r, std::string& m) {
         const double d = r.metric("discrepancy_dx");
         const double f = r.metric("factor");
         m = fmt("discrepancy %.4g (bound %.4g)", d, r.metric("bound"));
         m += fmt(", refinement factor %.3f (need >= %.2f)", f, 1.25);
         return d <= r.metric("bound") && f >= 1.25;
       }},
      {11, "inverse", "planted-truth calibration", 300.0,
       [](const R& r, std::string& m) {
         const double e = r.metric("recovery_error");
         const double tol = (2.0 - 0.6) / 15.0 + 1e-3;
         m = fmt("|V - V*| = %.3g (tol %.4g)", e, tol);
         m += fmt(", max dE/dV %.4g (bound %.4g)", r.metric("max_quotient"), r.metric("modulus_bound"));
         return e <= tol && r.metric("compliant") == 1.0 && r.metric("boundary") == 0.0 &&
                r.metric("max_quotient") <= r.metric("modulus_bound");
       }},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& c : criteria()) ids.push_back(c.id);

  int failures = 0;
  for (int id : ids) {
    const Criterion* c = nullptr;
    for (const auto& k : criteria())
      if (k.id == id) c = &k;
    if (!c) {
      std::printf("FAIL [%d] unknown criterion\n", id);
      ++failures;
      continue;
    }
    const auto report = probeflow::run_suite(c->suite);
    std::string msg;
    bool ok = false;
    try {
      ok = c->check(report, msg);
    } catch (const std::exception& e) {
      msg = std::string("missing metric: ") + e.what();
    }
    if (!report.detail.empty() && !ok) msg += " | " + report.detail;
    const bool in_time = report.seconds < c->max_seconds;
    if (!in_time) msg += fmt(" | runtime %.1f s over the %.0f s limit", report.seconds, c->max_seconds);
    ok = ok && in_time;
    std::printf("%s [%d] %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", c->id, c->title, msg.c_str(),
                report.seconds);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
