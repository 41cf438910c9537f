#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gyrobloch/error.hpp"
#include "gyrobloch/output.hpp"
#include "json.hpp"

using namespace gyrobloch;
namespace fs = std::filesystem;

namespace {

EigenEntry entry(Complex lambda, double residual, bool mirrored) {
  EigenEntry e;
  e.lambda = lambda;
  e.mu = Complex(0, 1) * lambda;
  e.residual = residual;
  e.mirrored = mirrored;
  return e;
}

GapReport sample_report() {
  GapReport r;
  for (double omega : {0.2, 0.1}) {
    for (double theta : {0.5, 0.0}) {
      PointResult p;
      p.omega = omega;
      p.theta = theta;
      p.filtered = {entry({0.5, 0.25}, 1e-12, false), entry({-0.5, 0.0}, 2e-12, true),
                    entry({-0.5, -1e-9}, 3e-12, false)};
      p.min_abs_im = omega == 0.1 ? 0.0 : 0.25;
      r.points.push_back(p);
    }
  }
  r.frequencies = {{0.1, 0.0, FrequencyClass::NonGap}, {0.2, 0.25, FrequencyClass::Gap}};
  GapInterval g;
  g.lo = 0.15;
  g.hi = 0.2;
  g.lo_outside = 0.1499;
  g.hi_outside = 0.2;
  g.open_hi = true;
  r.gaps.push_back(g);
  r.provenance = {2 * kPi / 20, 20, 1600, "test", ""};
  r.solves = 4;
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig small_config() {
  return parse_config("[material]\nid = test\nbackground = constant 1\ninclusion = constant 2\n");
}

}  // namespace

TEST_CASE("numbers carry nine significant digits") {
  CHECK(format_number(0.123456789012) == "0.123456789");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-2.5e-13) == "-2.5e-13");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_number(0.4214)) == 0.4214);
}

TEST_CASE("eigs.csv is stable-ordered and re-parseable") {
  const auto rows = parse_csv(eigs_csv(sample_report()));
  REQUIRE(rows.size() == 1 + 4 * 3);
  CHECK(rows[0] == std::vector<std::string>{"omega", "theta", "re_lambda", "im_lambda", "residual",
                                            "mirrored_flag"});
  // (omega, theta) ascending, then (Re, Im) ascending.
  CHECK(rows[1][0] == "0.1");
  CHECK(rows[1][1] == "0");
  CHECK(rows[1][2] == "-0.5");
  CHECK(rows[1][3] == "-1e-09");
  CHECK(rows[2][3] == "0");
  CHECK(rows[2][5] == "1");
  CHECK(rows[3][2] == "0.5");
  CHECK(rows[4][1] == "0.5");
  CHECK(rows[12][0] == "0.2");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    for (int c = 0; c < 5; ++c) CHECK_NOTHROW((void)std::stod(rows[i][c]));
  }
}

TEST_CASE("tube.csv and surfaces.csv") {
  const auto tube = parse_csv(tube_csv(sample_report()));
  REQUIRE(tube.size() == 5);
  CHECK(tube[0] == std::vector<std::string>{"omega", "theta", "gap_margin"});
  CHECK(tube[1] == std::vector<std::string>{"0.1", "0", "0"});
  CHECK(tube[4] == std::vector<std::string>{"0.2", "0.5", "0.25"});

  const auto surf = parse_csv(surfaces_csv(sample_report(), 1e-6));
  REQUIRE(surf.size() == 1 + 4 * 2);
  CHECK(surf[0] == std::vector<std::string>{"theta", "lambda", "omega"});
  CHECK(surf[1] == std::vector<std::string>{"0", "-0.5", "0.1"});
  CHECK(surf[8] == std::vector<std::string>{"0.5", "-0.5", "0.2"});
}

TEST_CASE("gaps.json follows the documented layout") {
  const RunConfig cfg = small_config();
  const auto doc = nlohmann::json::parse(gaps_json(sample_report(), cfg));
  CHECK(doc["schema"] == "gyrobloch.gaps/1");
  CHECK(doc["config_hash"] == config_hash(cfg));
  CHECK(doc["provenance"]["config_hash"] == config_hash(cfg));
  CHECK(doc["provenance"]["model_id"] == "test");
  CHECK(doc["provenance"]["n_dofs"] == 1600);
  CHECK(doc["provenance"]["h_over_2pi"].get<double>() == doctest::Approx(0.05));
  REQUIRE(doc["gaps"].size() == 1);
  const auto& g = doc["gaps"][0];
  CHECK(g["omega_lo"].get<double>() == 0.15);
  CHECK(g["omega_hi"].get<double>() == 0.2);
  CHECK(g["min_margin"].get<double>() == 0.25);
  CHECK(g["open_hi"] == true);
  CHECK(g["open_lo"] == false);
  CHECK(g["flagged"] == false);
  REQUIRE(doc["frequencies"].size() == 2);
  CHECK(doc["frequencies"][1]["classification"] == "gap");
  CHECK(doc["summary"]["gap_count"] == 1);
  CHECK(doc["summary"]["solves"] == 4);

  GapReport empty;
  const auto e = nlohmann::json::parse(gaps_json(empty, cfg));
  CHECK(e["gaps"].is_array());
  CHECK(e["gaps"].empty());
}

TEST_CASE("artifacts are written atomically into the output directory") {
  const fs::path dir = fs::temp_directory_path() / "gyrobloch_test_output";
  fs::remove_all(dir);
  RunConfig cfg = small_config();
  cfg.output.formats = {"eigs", "gaps", "tube", "surfaces", "diagnostics"};
  const auto written = write_artifacts(sample_report(), cfg, dir / "nested");
  CHECK(written.size() == 5);
  for (const auto& p : written) CHECK(fs::is_regular_file(p));
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "nested")) {
    ++files;
    CHECK(e.path().string().find(".tmp.") == std::string::npos);
  }
  CHECK(files == 5);
  CHECK(slurp(dir / "nested" / "eigs.csv") == eigs_csv(sample_report()));

  // Overwrite in place.
  write_atomic(dir / "nested" / "tube.csv", "x\n");
  CHECK(slurp(dir / "nested" / "tube.csv") == "x\n");
  CHECK_THROWS_AS(write_atomic(dir / "missing" / "a.csv", "x"), IoError);
  fs::remove_all(dir);
}
