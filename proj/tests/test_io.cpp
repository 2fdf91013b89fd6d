#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "probeflow/io.hpp"

using namespace probeflow;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("probeflow_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

Scenario small() {
  auto s = builtin("fig_int32");
  s.dx = 0.05;
  s.snapshots = 6;
  return s;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  for (double v : {0.1, 1.0 / 3.0, 2.5e-3, -7.25, 1e-300}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("CSV round trip") {
  const auto path = scratch("t.csv");
  CsvTable t{{"a", "b"}, {{"1", "x"}, {"2.5", ""}}};
  write_csv(path.string(), t);
  const auto back = read_csv(path.string());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.number(1, "a") == 2.5);
  CHECK_THROWS_AS(back.number(0, "b"), IoError);
  CHECK_THROWS_AS(back.column("c"), IoError);
  CHECK_THROWS_AS(read_csv("/nonexistent/x.csv"), IoError);
}

TEST_CASE("output bundle") {
  const auto s = small();
  const auto res = run(s);
  const auto dir = scratch("bundle");
  write_bundle(dir.string(), s, res, {{"dx", "0.05"}});

  const auto density = read_csv((dir / "density.csv").string());
  CHECK(density.header == std::vector<std::string>{"t", "x", "rho"});
  CHECK(density.rows.size() == res.snapshots.size() * static_cast<std::size_t>(res.snapshots[0].grid.cells));
  const auto diag = read_csv((dir / "diagnostics.csv").string());
  CHECK(diag.rows.size() == res.diagnostics.size());
  const auto probe = read_csv((dir / "probe.csv").string());
  CHECK(probe.header == std::vector<std::string>{"t", "probe_id", "x", "speed", "trace_rho"});
  for (std::size_t r = 0; r < probe.rows.size(); ++r)
    if (probe.number(r, "t") >= 2.0) CHECK(probe.number(r, "speed") == 0.0);

  const auto img = read_pgm((dir / "heatmap.pgm").string());
  CHECK(img.width == res.snapshots[0].grid.cells);
  CHECK(img.height == static_cast<int>(res.snapshots.size()));
  CHECK(img.pixels == heatmap(res).pixels);

  // Identical inputs give byte-identical files.
  const auto again = scratch("bundle2");
  write_bundle(again.string(), s, run(s), {{"dx", "0.05"}});
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const char* f : {"density.csv", "probe.csv", "diagnostics.csv", "heatmap.pgm", "metadata.json"})
    CHECK(bytes(dir / f) == bytes(again / f));
}

TEST_CASE("heatmap shading") {
  RunResult r;
  DensityField f;
  f.grid = Grid::uniform(0.0, 1.0, 0.25);
  f.rho = Eigen::ArrayXd::LinSpaced(4, 0.0, 1.0);
  r.snapshots = {f};
  const auto img = heatmap(r);
  CHECK(img.pixels.front() == 255);
  CHECK(img.pixels.back() == 0);
}
