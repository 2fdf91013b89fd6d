#include "probeflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace probeflow {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const auto& cell = rows.at(row).at(column(name));
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IoError("CSV cell '" + cell + "' is not a number");
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size())
      throw IoError("'" + path + "': row width differs from the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  auto out = open_out(path);
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw IoError("write to '" + path + "' failed");
}

CsvTable density_table(const RunResult& run) {
  CsvTable t{{"t", "x", "rho"}, {}};
  for (const auto& f : run.snapshots)
    for (Eigen::Index j = 0; j < f.grid.cells; ++j)
      t.rows.push_back({format_double(f.t), format_double(f.grid.center(j)), format_double(f.rho[j])});
  return t;
}

CsvTable probe_table(const RunResult& run) {
  CsvTable t{{"t", "probe_id", "x", "speed", "trace_rho"}, {}};
  for (std::size_t i = 0; i < run.probes.size(); ++i)
    for (const auto& s : run.probes[i].realized())
      t.rows.push_back({format_double(s.t), std::to_string(i), format_double(s.x),
                        format_double(s.speed), format_double(s.trace)});
  return t;
}

CsvTable diagnostics_table(const RunResult& run) {
  CsvTable t{{"step", "t", "dt", "mass", "min", "max"}, {}};
  for (const auto& d : run.diagnostics)
    t.rows.push_back({std::to_string(d.step), format_double(d.t), format_double(d.dt),
                      format_double(d.mass), format_double(d.min), format_double(d.max)});
  return t;
}

CsvTable phi_table(const std::vector<PhiReport>& reports) {
  CsvTable t{{"eps", "computed", "paper_formula", "branch", "agree"}, {}};
  for (const auto& r : reports)
    t.rows.push_back({format_double(r.eps), format_double(r.computed),
                      format_double(r.paper_formula), r.branch, r.agree ? "1" : "0"});
  return t;
}

CsvTable scan_table(const std::vector<ESample>& samples) {
  CsvTable t{{"V", "E"}, {}};
  for (const auto& s : samples) t.rows.push_back({format_double(s.V), format_double(s.E)});
  return t;
}

Pgm heatmap(const RunResult& run) {
  Pgm img;
  if (run.snapshots.empty()) return img;
  img.width = static_cast<int>(run.snapshots.front().grid.cells);
  img.height = static_cast<int>(run.snapshots.size());
  img.pixels.reserve(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (const auto& f : run.snapshots) {
    const Eigen::ArrayXd shade = (255.0 * (1.0 - f.rho)).round();
    for (Eigen::Index j = 0; j < f.grid.cells; ++j)
      img.pixels.push_back(static_cast<std::uint8_t>(std::clamp(shade[j], 0.0, 255.0)));
  }
  return img;
}

void write_pgm(const std::string& path, const Pgm& image) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

Pgm read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string magic;
  int maxval = 0;
  Pgm img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || img.width < 0 || img.height < 0)
    throw IoError("'" + path + "' is not an 8-bit binary PGM");
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw IoError("'" + path + "' is truncated");
  return img;
}

std::string metadata_json(const Scenario& s, const std::map<std::string, std::string>& overrides) {
  nlohmann::json doc;
  doc["scenario"] = nlohmann::json::parse(to_json(s));
  doc["overrides"] = overrides;
  doc["reconstructed"] = s.reconstructed;
  doc["version"] = "0.1.0";
  doc["float_format"] = "%.17g";
  return doc.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_bundle(const std::string& dir, const Scenario& s, const RunResult& run,
                  const std::map<std::string, std::string>& overrides) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path root(dir);
  write_csv((root / "density.csv").string(), density_table(run));
  write_csv((root / "probe.csv").string(), probe_table(run));
  write_csv((root / "diagnostics.csv").string(), diagnostics_table(run));
  write_pgm((root / "heatmap.pgm").string(), heatmap(run));
  write_text((root / "metadata.json").string(), metadata_json(s, overrides));
}

}  // namespace probeflow
