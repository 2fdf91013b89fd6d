// probeflow command-line driver.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "probeflow/error.hpp"
#include "probeflow/inverse.hpp"
#include "probeflow/io.hpp"
#include "probeflow/scenarios.hpp"
#include "probeflow/verify.hpp"

namespace pf = probeflow;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;
constexpr int kIo = 4;

// Accepts decimals and simple fractions such as "1/48" or "-1/3".
double parse_number(const std::string& text) {
  const auto slash = text.find('/');
  std::size_t used = 0;
  if (slash == std::string::npos) {
    const double v = std::stod(text, &used);
    if (used != text.size()) throw pf::DomainError("not a number: '" + text + "'");
    return v;
  }
  const std::string num = text.substr(0, slash);
  const std::string den = text.substr(slash + 1);
  const double p = std::stod(num, &used);
  if (used != num.size()) throw pf::DomainError("not a number: '" + text + "'");
  const double q = std::stod(den, &used);
  if (used != den.size() || q == 0.0) throw pf::DomainError("not a number: '" + text + "'");
  return p / q;
}

struct Overrides {
  std::optional<double> dx, cfl, T;
  std::optional<int> snapshots;
  std::optional<std::string> trace_side;

  std::map<std::string, std::string> apply(pf::Scenario& s) const {
    std::map<std::string, std::string> out;
    if (dx) { s.dx = *dx; out["dx"] = pf::format_double(*dx); }
    if (cfl) { s.cfl = *cfl; out["cfl"] = pf::format_double(*cfl); }
    if (T) { s.T = *T; out["T"] = pf::format_double(*T); }
    if (snapshots) { s.snapshots = *snapshots; out["snapshots"] = std::to_string(*snapshots); }
    if (trace_side) {
      s.trace_side = *trace_side == "left" ? pf::TraceSide::Left : pf::TraceSide::Right;
      out["trace_side"] = *trace_side;
    }
    return out;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--dx", o.dx, "cell width");
  cmd->add_option("--cfl", o.cfl, "CFL number in (0, 1]");
  cmd->add_option("--T", o.T, "final time");
  cmd->add_option("--snapshots", o.snapshots, "number of stored snapshots (>= 2)");
  cmd->add_option("--trace-side", o.trace_side, "trace convention")
      ->check(CLI::IsMember({"right", "left"}));
}

// Prints findings; returns true when the scenario may run.
bool report_findings(const pf::Scenario& s) {
  const auto findings = pf::validate(s);
  for (const auto& f : findings)
    std::cerr << (f.level == pf::FindingLevel::Error ? "error: " : "warning: ") << f.message << '\n';
  return !pf::has_errors(findings);
}

int cmd_run(const std::string& scenario, const std::string& out, const Overrides& o) {
  auto s = pf::load_scenario(scenario);
  const auto applied = o.apply(s);
  if (!report_findings(s)) return kUsage;
  const auto result = pf::run(s);
  pf::write_bundle(out, s, result, applied);
  std::cout << "wrote " << out << " (" << result.snapshots.size() << " snapshots, "
            << result.diagnostics.size() << " steps)\n";
  return kOk;
}

int cmd_phi(const std::vector<std::string>& eps_text, const std::vector<std::string>& range,
            double T, const std::optional<std::string>& side, const std::string& out) {
  std::vector<double> eps;
  for (const auto& e : eps_text) eps.push_back(parse_number(e));
  if (!range.empty()) {
    const double lo = parse_number(range[0]);
    const double hi = parse_number(range[1]);
    const double step = parse_number(range[2]);
    if (!(step > 0.0) || hi < lo) throw pf::DomainError("--range needs lo <= hi and step > 0");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-6)) + 1;
    for (long k = 0; k < count; ++k) eps.push_back(k + 1 == count && std::abs(lo + k * step - hi) < 1e-6 * step
                                                       ? hi
                                                       : lo + static_cast<double>(k) * step);
  }
  if (eps.empty()) {
    std::cerr << "error: give at least one --eps or a --range\n";
    return kUsage;
  }
  const auto trace = side && *side == "left" ? pf::TraceSide::Left : pf::TraceSide::Right;
  std::vector<pf::PhiReport> reports;
  for (double e : eps) reports.push_back(pf::phi_epsilon(e, T, trace));
  const auto table = pf::phi_table(reports);
  if (out.empty() || out == "-") {
    for (std::size_t i = 0; i < table.header.size(); ++i) std::cout << (i ? "," : "") << table.header[i];
    std::cout << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << row[i];
      std::cout << '\n';
    }
  } else {
    pf::write_csv(out, table);
    std::cout << "wrote " << out << " (" << reports.size() << " rows)\n";
  }
  return kOk;
}

struct InverseArgs {
  std::string scenario = "planted";
  double v_min = 0.6;
  double v_max = 2.0;
  int N = 15;
  int refine = 20;
  std::optional<double> plant;
  double rho_check = 0.44;
  std::string out = "inverse_out";
};

int cmd_inverse(const InverseArgs& a, const Overrides& o) {
  if (!(a.v_min < a.v_max)) {
    std::cerr << "error: --vmin must be smaller than --vmax\n";
    return kUsage;
  }
  if (a.N < 2) {
    std::cerr << "error: --N must be at least 2\n";
    return kUsage;
  }
  auto s = a.scenario == "planted" ? pf::planted_base() : pf::load_scenario(a.scenario);
  auto applied = o.apply(s);
  if (a.plant) {
    s = pf::plant_truth(s, *a.plant);
    applied["plant"] = pf::format_double(*a.plant);
  }
  if (!report_findings(s)) return kUsage;
  if (s.probes.empty()) {
    std::cerr << "error: the scenario has no probe to calibrate against\n";
    return kUsage;
  }
  const auto samples = pf::scan_E(s, a.v_min, a.v_max, a.N);
  const auto best = pf::minimize_E(samples, [&](double V) { return pf::evaluate_E(s, V); }, a.refine);
  const auto mb = pf::modulus_bound(s, a.v_min, a.v_max, a.rho_check);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw pf::IoError("cannot create '" + a.out + "': " + ec.message());
  const std::filesystem::path root(a.out);
  pf::write_csv((root / "scan.csv").string(), pf::scan_table(samples));
  std::ostringstream rec;
  rec << "{\n"
      << "  \"V\": " << pf::format_double(best.V) << ",\n"
      << "  \"E\": " << pf::format_double(best.E) << ",\n"
      << "  \"boundary\": " << (best.boundary ? "true" : "false") << ",\n"
      << "  \"bracket\": [" << pf::format_double(best.bracket_lo) << ", "
      << pf::format_double(best.bracket_hi) << "],\n"
      << "  \"refine_evaluations\": " << best.evaluations << ",\n"
      << "  \"max_difference_quotient\": " << pf::format_double(pf::max_difference_quotient(samples)) << ",\n"
      << "  \"modulus_bound\": " << pf::format_double(mb.bound) << ",\n"
      << "  \"compliant\": " << (mb.compliant ? "true" : "false") << "\n"
      << "}\n";
  pf::write_text((root / "minimizer.json").string(), rec.str());
  pf::write_text((root / "metadata.json").string(), pf::metadata_json(s, applied));
  std::cout << "V = " << pf::format_double(best.V) << ", E = " << pf::format_double(best.E)
            << (best.boundary ? " (boundary minimum)" : "") << '\n';
  return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& json_out) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = pf::suite_names();
  } else {
    names = {suite};
    const auto known = pf::suite_names();
    if (std::find(known.begin(), known.end(), suite) == known.end()) {
      std::cerr << "error: unknown suite '" << suite << "'\n";
      return kUsage;
    }
  }
  bool all = true;
  std::string doc = "[\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto r = pf::run_suite(names[i], seed);
    all = all && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  (" << r.seconds << " s)\n";
    for (const auto& [k, v] : r.metrics) std::cout << "    " << k << " = " << pf::format_double(v) << '\n';
    if (!r.detail.empty()) std::cout << "    " << r.detail << '\n';
    doc += r.to_json() + (i + 1 < names.size() ? ",\n" : "\n");
  }
  doc += "]\n";
  if (json_out.empty())
    std::cout << doc;
  else
    pf::write_text(json_out, doc);
  return all ? kOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LWR traffic simulation with probe-vehicle flux encoding"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string out;

  std::string run_scenario;
  auto* run = app.add_subcommand("run", "simulate a scenario and write the output bundle");
  run->add_option("scenario", run_scenario, "builtin name or JSON file")->required();
  run->add_option("--out", out, "output directory")->default_val("out");
  add_overrides(run, overrides);

  std::vector<std::string> eps;
  std::vector<std::string> range;
  double phi_T = 1.0;
  std::optional<std::string> phi_side;
  auto* phi = app.add_subcommand("phi", "tabulate the probe error functional on the Riemann datum");
  phi->add_option("--eps", eps, "epsilon value (repeatable; fractions allowed)");
  phi->add_option("--range", range, "lo hi step")->expected(3);
  phi->add_option("--T", phi_T, "horizon")->default_val(1.0);
  phi->add_option("--trace-side", phi_side, "trace convention")->check(CLI::IsMember({"right", "left"}));
  std::string phi_out;
  phi->add_option("--out", phi_out, "CSV path, '-' for stdout");

  InverseArgs inv;
  auto* inverse = app.add_subcommand("inverse", "calibrate V from probe data");
  inverse->add_option("scenario", inv.scenario, "builtin name, JSON file or 'planted'");
  inverse->add_option("--vmin", inv.v_min, "lower end of the V range");
  inverse->add_option("--vmax", inv.v_max, "upper end of the V range");
  inverse->add_option("--N", inv.N, "number of scan samples");
  inverse->add_option("--refine", inv.refine, "golden-section iterations");
  inverse->add_option("--plant", inv.plant, "replace probe 0 by the coupled path under this V");
  inverse->add_option("--rho-check", inv.rho_check, "density floor used by the modulus bound");
  inverse->add_option("--out", inv.out, "output directory");
  add_overrides(inverse, overrides);

  std::string suite = "all";
  std::uint64_t seed = 20240601;
  std::string json_out;
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("suite", suite, "suite name or 'all'");
  verify->add_option("--seed", seed, "seed for fuzzed instances");
  verify->add_option("--json", json_out, "write the JSON report here instead of stdout");

  auto* list = app.add_subcommand("list-scenarios", "print builtin scenario names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_scenario, out, overrides);
    if (*phi) return cmd_phi(eps, range, phi_T, phi_side, phi_out);
    if (*inverse) return cmd_inverse(inv, overrides);
    if (*verify) return cmd_verify(suite, seed, json_out);
    if (*list) {
      for (const auto& n : pf::builtin_names()) std::cout << n << '\n';
      for (const auto& n : pf::suite_names()) std::cout << "suite: " << n << '\n';
      return kOk;
    }
  } catch (const pf::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const pf::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const pf::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number (" << e.what() << ")\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
