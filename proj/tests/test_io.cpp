#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "renal/io.hpp"

using namespace renal;
namespace fs = std::filesystem;

namespace {

const RateConstantsd kCoupled{1.0, 0.02, 0.02, 0.08, 0.3, 0.3};

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("renal_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

Errc parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_measurements(in, "fixture.csv");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return Errc::IoError;
}

AcoConfig quick_config() {
  AcoConfig c;
  c.max_iter = 20;
  return c;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    REQUIRE(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("well-formed file parses to the expected length") {
  std::ostringstream text;
  text << "t_min,blood,kidney,bladder\n";
  for (int i = 1; i <= 27; ++i) text << i * 0.5 << ",1.5,2.5," << i * 0.01 << "\n";
  std::istringstream in(text.str());
  const MeasurementSet data = parse_measurements(in);
  CHECK(data.size() == 27);
  CHECK(data.schedule.times()[26] == 13.5);
  CHECK(data.bladder[26] == 0.27);
  CHECK(!data.kidney_err);
}

TEST_CASE("parse errors") {
  CHECK(parse_code("t_min,blood,kidney,bladder\n1,1,1,1\n0.5,1,1,1\n") == Errc::NonMonotoneTime);
  CHECK(parse_code("t_min,blood,kidney,bladder\n1,1,1,1\n1,1,1,1\n") == Errc::NonMonotoneTime);
  CHECK(parse_code("time,blood,kidney,bladder\n1,1,1,1\n") == Errc::ParseError);
  CHECK(parse_code("t_min,kidney,blood,bladder\n1,1,1,1\n") == Errc::ParseError);
  CHECK(parse_code("t_min,blood,kidney,bladder\n1,1,1\n") == Errc::ParseError);
  CHECK(parse_code("t_min,blood,kidney,bladder\n") == Errc::ParseError);
  CHECK(parse_code("") == Errc::ParseError);
  CHECK(parse_code("t_min,blood,kidney,bladder\n1,1,-0.5,1\n") == Errc::NegativeValue);
  CHECK(parse_code("t_min,blood,kidney,bladder\n1,1,nan,1\n") == Errc::ParseError);

  std::istringstream in("t_min,blood,kidney,bladder\n1,1,1,1\n2,1,x1,1\n");
  try {
    parse_measurements(in, "fixture.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fixture.csv") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
  }
}

TEST_CASE("simulated data round-trips through a file bit for bit") {
  const fs::path dir = scratch_dir("roundtrip");
  const MeasurementSet noisy =
      simulate_measurements(kCoupled, {}, AcquisitionSchedule::standard(), 1000.0, 8);
  save_measurements(noisy, dir / "m.csv");
  CHECK(load_measurements(dir / "m.csv") == noisy);

  const MeasurementSet bars = with_error_bars(noisy, 0.3, 2.0, 1000.0);
  save_measurements(bars, dir / "e.csv");
  const MeasurementSet back = load_measurements(dir / "e.csv");
  CHECK(back == bars);
  REQUIRE(back.kidney_err);
  CHECK(*back.kidney_err == *bars.kidney_err);

  const AcoConfig c = quick_config();
  CHECK(cost(kCoupled, back, c) == cost(kCoupled, bars, c));
  CHECK_THROWS_AS(load_measurements(dir / "missing.csv"), Error);
}

TEST_CASE("emitted files follow the documented schema") {
  const fs::path dir = scratch_dir("emit");
  const MeasurementSet data =
      simulate_measurements(kCoupled, {}, AcquisitionSchedule::standard(), 1000.0, 2);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 30; ++s) seeds.push_back(s);
  const EnsembleResult result = ensemble(data, quick_config(), seeds);
  const EmittedFiles files = emit_results(result, data, dir);

  std::ifstream strips(files.strips);
  std::string header;
  std::getline(strips, header);
  const auto columns = split_line(header);
  REQUIRE(columns.size() == 1 + 2 + 2 * 30);
  CHECK(columns[0] == "t_min");
  CHECK(columns[1] == "kidney_data");
  CHECK(columns[2] == "bladder_data");
  CHECK(columns[3] == "kidney_run0");
  CHECK(columns[33] == "bladder_run0");
  int rows = 0;
  for (std::string line; std::getline(strips, line);) {
    CHECK(split_line(line).size() == columns.size());
    ++rows;
  }
  CHECK(rows == 27);

  std::ifstream coeffs(files.coefficients);
  std::string line;
  std::getline(coeffs, line);
  CHECK(line == "stat,k_bt,k_tp,k_pt,k_up,k_tb,k_pb");
  std::getline(coeffs, line);
  auto mean = split_line(line);
  REQUIRE(mean.size() == 7);
  CHECK(mean[0] == "mean");
  for (int i = 0; i < 6; ++i) CHECK(std::stod(mean[i + 1]) == result.mean[i]);

  const auto json = nlohmann::json::parse(slurp(files.runs));
  CHECK(json["coefficient_order"].size() == 6);
  REQUIRE(json["runs"].size() == 30);
  const auto& run0 = json["runs"][0];
  CHECK(run0["seed"] == 1);
  CHECK(run0["coefficients"]["k_bt"].get<double>() == result.runs[0].best.k_bt());
  CHECK(run0["cost"].get<double>() == result.runs[0].best_cost);
  CHECK(run0.contains("iterations"));
  CHECK(run0.contains("converged"));
  CHECK(run0.contains("case"));
}

TEST_CASE("a single run emits an all-zero std row") {
  const fs::path dir = scratch_dir("single");
  const MeasurementSet data =
      simulate_measurements(kCoupled, {}, AcquisitionSchedule::standard(), 1000.0, 2);
  const EmittedFiles files = emit_results(ensemble(data, quick_config(), {9}), data, dir);
  std::ifstream in(files.coefficients);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "std,0,0,0,0,0,0");
}

TEST_CASE("same configuration and seeds give identical output files") {
  const MeasurementSet data =
      simulate_measurements(kCoupled, {}, AcquisitionSchedule::standard(), 1000.0, 2);
  const std::vector<std::uint64_t> seeds = {3, 1, 4, 15};
  const EmittedFiles a = emit_results(ensemble(data, quick_config(), seeds, 1), data,
                                      scratch_dir("det_a"));
  const EmittedFiles b = emit_results(ensemble(data, quick_config(), seeds, 3), data,
                                      scratch_dir("det_b"));
  CHECK(slurp(a.coefficients) == slurp(b.coefficients));
  CHECK(slurp(a.strips) == slurp(b.strips));
  CHECK(slurp(a.runs) == slurp(b.runs));
}

TEST_CASE("run configuration from JSON") {
  RunConfig c;
  apply_json(c, nlohmann::json::parse(R"({
    "mode": "fit",
    "aco": {"population": 25, "q": 0.0001, "xi": 0.65, "upper": 5, "init_seed": 3},
    "gamma": {"amplitude": 12},
    "schedule": {"durations": [1, 1, 2]},
    "rate_constants": {"k_bt": 0.8, "k_tp": 0, "k_pt": 0.02, "k_up": 0.08, "k_tb": 0.4, "k_pb": 0.2},
    "noise_scale": 500,
    "runs": 4,
    "seed": 10,
    "data": "m.csv",
    "out": "results"
  })"));
  CHECK(c.mode == Mode::Fit);
  CHECK(c.aco.population == 25);
  CHECK(c.aco.new_states == 13);
  CHECK(c.aco.q == 0.0001);
  CHECK(c.aco.upper == State::Constant(5));
  CHECK(c.aco.init_seed == 3u);
  CHECK(c.gamma.amplitude == 12);
  CHECK(c.schedule.size() == 3);
  CHECK(c.schedule.back() == 3.0);
  CHECK(c.truth.k_bt() == 0.8);
  CHECK(c.noise_scale == 500);
  CHECK(c.run_seeds() == std::vector<std::uint64_t>{10, 11, 12, 13});
  CHECK(c.data == "m.csv");
  CHECK_NOTHROW(c.validate());

  c.seeds = {5, 5};
  CHECK_THROWS_AS(c.validate(), Error);

  RunConfig missing;
  missing.mode = Mode::Ensemble;
  CHECK_THROWS_AS(missing.validate(), Error);

  RunConfig bad;
  CHECK_THROWS_AS(apply_json(bad, nlohmann::json::parse(R"({"mode": "dance"})")), Error);
  CHECK_THROWS_AS(apply_json(bad, nlohmann::json::parse(R"({"runs": "many"})")), Error);
}
