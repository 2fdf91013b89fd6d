#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "probeflow/fvsolver.hpp"
#include "probeflow/inverse.hpp"
#include "probeflow/scenarios.hpp"

namespace probeflow {

/// %.17g: round-trips every double and keeps output byte-stable.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

CsvTable density_table(const RunResult& run);      // t,x,rho
CsvTable probe_table(const RunResult& run);        // t,probe_id,x,speed,trace_rho
CsvTable diagnostics_table(const RunResult& run);  // step,t,dt,mass,min,max
CsvTable phi_table(const std::vector<PhiReport>& reports);
CsvTable scan_table(const std::vector<ESample>& samples);

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, first row = first snapshot
};

/// One row per snapshot, rho = 0 white and rho = 1 black.
Pgm heatmap(const RunResult& run);
void write_pgm(const std::string& path, const Pgm& image);
Pgm read_pgm(const std::string& path);

/// Scenario, overrides and reconstructed parameters as JSON.
std::string metadata_json(const Scenario& s, const std::map<std::string, std::string>& overrides);

/// Write density.csv, probe.csv, diagnostics.csv, heatmap.pgm and
/// metadata.json into dir (created if missing). Throws IoError.
void write_bundle(const std::string& dir, const Scenario& s, const RunResult& run,
                  const std::map<std::string, std::string>& overrides);

void write_text(const std::string& path, const std::string& text);

}  // namespace probeflow
