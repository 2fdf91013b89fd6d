#include "probeflow/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace probeflow {

using nlohmann::json;

FluxModel Scenario::flux_model() const { return FluxModel{law, cutoff, probes}; }

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.level == FindingLevel::Error; });
}

std::vector<Finding> validate(const Scenario& s) {
  std::vector<Finding> out;
  auto error = [&](std::string m) { out.push_back({FindingLevel::Error, std::move(m)}); };
  auto warn = [&](std::string m) { out.push_back({FindingLevel::Warning, std::move(m)}); };

  if (!(s.T > 0.0) || !std::isfinite(s.T)) error("final time T must be positive");
  if (!(s.x_max > s.x_min)) error("domain must satisfy x_min < x_max");
  if (!(s.dx > 0.0)) {
    error("dx must be positive");
  } else if (s.x_max > s.x_min) {
    const double ratio = (s.x_max - s.x_min) / s.dx;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || ratio < 4.0 - 1e-9)
      error("domain length is not a whole number (>= 4) of cells");
  }
  if (!(s.cfl > 0.0 && s.cfl <= 1.0)) error("cfl must lie in (0, 1]");
  if (s.snapshots < 2) error("at least 2 snapshots are required");
  if (!(s.background >= 0.0 && s.background <= 1.0)) error("background density outside [0,1]");

  for (std::size_t i = 0; i < s.datum.size(); ++i) {
    const auto& b = s.datum[i];
    if (!(b.value >= 0.0 && b.value <= 1.0))
      error("datum block " + std::to_string(i) + " has value outside [0,1]");
    if (!(b.to > b.from)) error("datum block " + std::to_string(i) + " is empty");
    if (b.from < s.x_min || b.to > s.x_max)
      warn("datum block " + std::to_string(i) + " extends beyond the domain");
    for (std::size_t j = 0; j < i; ++j)
      if (std::min(b.to, s.datum[j].to) > std::max(b.from, s.datum[j].from))
        error("datum blocks " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
  }

  if (!check_admissible(s.law).all_pass()) warn("speed law " + s.law.describe() + " is not admissible");

  const double vmax = s.law.v_max();
  const double reach = s.cutoff.outer();
  for (std::size_t i = 0; i < s.probes.size(); ++i) {
    const auto& p = s.probes[i];
    const std::string tag = "probe " + std::to_string(i);
    if (!(p.x0() >= s.x_min && p.x0() <= s.x_max)) {
      error(tag + " starts outside the domain");
      continue;
    }
    const double travel = p.has_coupled() ? p.max_speed(vmax) * s.T : p.displacement(0.0, s.T);
    if (p.x0() - reach <= s.x_min || p.x0() + travel + reach >= s.x_max)
      warn(tag + " cutoff support may reach the domain boundary before T");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in experiments
// ---------------------------------------------------------------------------

namespace {

ProbeSegment speed_seg(double from, double to, double speed) {
  return {from, to, SegmentMode::Speed, speed};
}

ProbeSegment coupled_seg(double from, double to) { return {from, to, SegmentMode::Coupled, 0.0}; }

Scenario data_driven(std::string name, std::vector<ProbeSegment> program) {
  Scenario s;
  s.name = std::move(name);
  s.x_min = -0.5;
  s.x_max = 4.0;
  s.T = 4.0;
  s.law = SpeedLaw::greenshields(1.0);
  s.background = 0.0;
  s.datum = {{0.001, 0.1, 1.0}, {0.2, 0.4, 1.0}, {0.5, 0.8, 1.0}};
  s.probes = {ProbeTrajectory(0.0, std::move(program))};
  s.reconstructed = {"domain", "T", "cutoff", "probe.x0"};
  return s;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"fig_questa", "fig_int3", "fig_int32", "fig_int33", "riemann_phi"};
}

Scenario builtin(const std::string& name) {
  if (name == "fig_questa") {
    Scenario s;
    s.name = name;
    s.x_min = -2.0;
    s.x_max = 14.0;
    s.T = 20.0;
    s.law = SpeedLaw::greenshields(1.0);
    s.background = 0.5;
    const std::vector<ProbeSegment> program = {speed_seg(0, 5, 0.5), speed_seg(5, 6, 0.6),
                                               speed_seg(8, 11, 0.2), speed_seg(13, 18, 0.4)};
    s.probes = {ProbeTrajectory(0.0, program), ProbeTrajectory(2.0, program)};
    s.reconstructed = {"domain", "T", "cutoff"};
    return s;
  }
  if (name == "fig_int3") return data_driven(name, {coupled_seg(0.0, 4.0)});
  if (name == "fig_int32")
    return data_driven(name, {coupled_seg(0.0, 2.0), speed_seg(2.0, 4.0, 0.0)});
  if (name == "fig_int33")
    return data_driven(name, {coupled_seg(0.0, 0.75), speed_seg(0.75, 1.5, 0.0),
                              coupled_seg(1.5, 4.0)});
  if (name == "riemann_phi") {
    Scenario s;
    s.name = name;
    s.x_min = -1.0;
    s.x_max = 2.0;
    s.T = 1.0;
    s.law = SpeedLaw::epsilon(0.0);
    s.background = 0.125;
    s.datum = {{0.0, 2.0, 0.375}};
    s.probes = {ProbeTrajectory(0.0, {speed_seg(0.0, 1.0, 0.5)})};
    s.passive_probes = true;
    s.reconstructed = {"domain", "T"};
    return s;
  }
  throw DomainError("unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json law_to_json(const SpeedLaw& law) {
  switch (law.family()) {
    case SpeedFamily::Greenshields:
      return {{"family", "greenshields"}, {"v_max", law.v_max()}};
    case SpeedFamily::Epsilon:
      return {{"family", "epsilon"}, {"epsilon", law.eps()}};
    case SpeedFamily::Tabulated:
      break;
  }
  return {{"family", "tabulated"}, {"values", law.table()}};
}

SpeedLaw law_from_json(const json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "greenshields") return SpeedLaw::greenshields(j.value("v_max", 1.0));
  if (family == "epsilon") return SpeedLaw::epsilon(j.at("epsilon").get<double>());
  if (family == "tabulated") return SpeedLaw::tabulated(j.at("values").get<std::vector<double>>());
  throw DomainError("unknown speed-law family '" + family + "'");
}

}  // namespace

std::string to_json(const Scenario& s) {
  json probes = json::array();
  for (const auto& p : s.probes) {
    json program = json::array();
    for (const auto& seg : p.program()) {
      json e = {{"from", seg.from}, {"to", seg.to},
                {"mode", seg.mode == SegmentMode::Speed ? "speed" : "coupled"}};
      if (seg.mode == SegmentMode::Speed) e["speed"] = seg.speed;
      program.push_back(std::move(e));
    }
    probes.push_back({{"x0", p.x0()}, {"mollify", p.mollify()}, {"program", std::move(program)}});
  }
  json blocks = json::array();
  for (const auto& b : s.datum) blocks.push_back({{"from", b.from}, {"to", b.to}, {"value", b.value}});
  const json doc = {
      {"name", s.name},
      {"domain", {s.x_min, s.x_max}},
      {"T", s.T},
      {"dx", s.dx},
      {"cfl", s.cfl},
      {"datum", {{"background", s.background}, {"blocks", std::move(blocks)}}},
      {"speed_law", law_to_json(s.law)},
      {"cutoff", {{"inner", s.cutoff.inner()}, {"outer", s.cutoff.outer()}}},
      {"probes", std::move(probes)},
      {"snapshots", s.snapshots},
      {"trace_side", s.trace_side == TraceSide::Right ? "right" : "left"},
      {"passive_probes", s.passive_probes},
      {"reconstructed", s.reconstructed},
  };
  return doc.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    Scenario s;
    s.name = doc.value("name", std::string("unnamed"));
    const auto domain = doc.at("domain").get<std::vector<double>>();
    if (domain.size() != 2) throw DomainError("domain must be [x_min, x_max]");
    s.x_min = domain[0];
    s.x_max = domain[1];
    s.T = doc.at("T").get<double>();
    s.dx = doc.value("dx", s.dx);
    s.cfl = doc.value("cfl", s.cfl);
    if (doc.contains("datum")) {
      const auto& d = doc.at("datum");
      s.background = d.value("background", 0.0);
      for (const auto& b : d.value("blocks", json::array()))
        s.datum.push_back({b.at("from").get<double>(), b.at("to").get<double>(),
                           b.at("value").get<double>()});
    }
    s.law = doc.contains("speed_law") ? law_from_json(doc.at("speed_law"))
                                      : SpeedLaw::greenshields(1.0);
    if (doc.contains("cutoff"))
      s.cutoff = CutoffProfile(doc["cutoff"].value("inner", 0.05), doc["cutoff"].value("outer", 0.15));
    for (const auto& p : doc.value("probes", json::array())) {
      std::vector<ProbeSegment> program;
      for (const auto& seg : p.at("program")) {
        const auto mode = seg.value("mode", std::string("speed"));
        if (mode != "speed" && mode != "coupled")
          throw DomainError("probe segment mode must be 'speed' or 'coupled'");
        program.push_back({seg.at("from").get<double>(), seg.at("to").get<double>(),
                           mode == "speed" ? SegmentMode::Speed : SegmentMode::Coupled,
                           mode == "speed" ? seg.at("speed").get<double>() : 0.0});
      }
      s.probes.emplace_back(p.at("x0").get<double>(), std::move(program), p.value("mollify", 0.0));
    }
    s.snapshots = doc.value("snapshots", s.snapshots);
    const auto side = doc.value("trace_side", std::string("right"));
    if (side != "right" && side != "left") throw DomainError("trace_side must be 'right' or 'left'");
    s.trace_side = side == "right" ? TraceSide::Right : TraceSide::Left;
    s.passive_probes = doc.value("passive_probes", false);
    s.reconstructed = doc.value("reconstructed", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path_or_builtin) {
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), path_or_builtin) != names.end())
    return builtin(path_or_builtin);
  std::ifstream in(path_or_builtin);
  if (!in) throw IoError("cannot open scenario '" + path_or_builtin + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

}  // namespace probeflow
