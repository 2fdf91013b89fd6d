#pragma once

#include <string>
#include <vector>

#include "probeflow/model.hpp"
#include "probeflow/riemann.hpp"

namespace probeflow {

/// Constant value on [from, to).
struct DatumBlock {
  double from = 0.0;
  double to = 0.0;
  double value = 0.0;

  bool operator==(const DatumBlock&) const = default;
};

struct Scenario {
  std::string name;
  double x_min = 0.0;
  double x_max = 1.0;
  double T = 1.0;
  double dx = 2.5e-3;
  double cfl = 0.9;
  double background = 0.0;
  std::vector<DatumBlock> datum;
  SpeedLaw law;
  CutoffProfile cutoff;
  std::vector<ProbeTrajectory> probes;
  int snapshots = 50;
  TraceSide trace_side = TraceSide::Right;
  /// Probes are recorded but do not enter the flux (plain LWR run).
  bool passive_probes = false;
  /// Parameters inferred rather than read off the source experiment.
  std::vector<std::string> reconstructed;

  FluxModel flux_model() const;
  bool operator==(const Scenario&) const = default;
};

enum class FindingLevel { Warning, Error };

struct Finding {
  FindingLevel level = FindingLevel::Error;
  std::string message;
};

std::vector<Finding> validate(const Scenario& s);
bool has_errors(const std::vector<Finding>& findings);

std::vector<std::string> builtin_names();
/// Throws DomainError for unknown names.
Scenario builtin(const std::string& name);

std::string to_json(const Scenario& s);
/// Throws IoError on malformed documents and DomainError on invalid values.
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path_or_builtin);

}  // namespace probeflow
