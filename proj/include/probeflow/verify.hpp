#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace probeflow {

/// Outcome of a verification suite. Metrics are the raw measured values so
/// callers can apply their own tolerances.
struct SuiteReport {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> metrics;
  std::string detail;
  double seconds = 0.0;

  /// Throws std::out_of_range for unknown metric names.
  double metric(const std::string& key) const;
  std::string to_json() const;
};

std::vector<std::string> suite_names();

/// Runs one suite; the seed drives every fuzzed instance.
SuiteReport run_suite(const std::string& name, std::uint64_t seed = 20240601);

}  // namespace probeflow
