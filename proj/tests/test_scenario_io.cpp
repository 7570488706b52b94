#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evade/scenario_io.hpp"

using namespace evade;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = EVADE_SCENARIO_DIR;

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, kScenarios);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("bundled front car fixture") {
  const auto s = load_scenario(kScenarios / "front_car_high.json");
  CHECK(s.name == "front_car_high");
  CHECK(s.ego.v0 == 25.0);
  REQUIRE(s.obstacles.size() == 1);
  CHECK(s.obstacles[0].v == 16.7);
  CHECK(s.obstacles[0].a == -7.0);
  CHECK(s.obstacles[0].x0 == 120.0);
  CHECK(s.obstacles[0].length == 4.5);
  CHECK(s.obstacles[0].width == 1.9);
  CHECK(s.ego.braking.tau1 == 0.3);
  CHECK(s.planner.ts == 0.05);
}

TEST_CASE("every bundled fixture parses") {
  int n = 0;
  for (const auto& dir : {kScenarios, kScenarios / "stress"}) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".json" || e.path().stem() == "defaults") continue;
      CAPTURE(e.path().string());
      CHECK_NOTHROW(load_scenario(e.path()));
      ++n;
    }
  }
  CHECK(n == 6);
}

TEST_CASE("parse errors name the offending field") {
  CHECK(error_of("{}") == "ego: missing");
  CHECK(error_of("not json").rfind("document: ", 0) == 0);
  CHECK(error_of(R"({"include": "defaults.json", "ego": {"v0": 20},
      "obstacles": [{"footprint": {"length": 4, "width": -1}, "x0": 50, "v": 0}]})") ==
        "obstacles[0].footprint.width: must be > 0");
  CHECK(error_of(R"({"include": "defaults.json", "ego": {"v0": "90 km/h"},
      "obstacles": [{"x0": 50, "v": 0}]})") == "ego.v0: non-SI unit 'km/h' (expected m/s)");
  CHECK(error_of(R"({"include": "defaults.json", "ego": {"v0": 20}, "obstacles": []})") ==
        "obstacles: at least one obstacle is required");
  CHECK(error_of(R"({"include": "defaults.json", "ego": {"v0": 20, "colour": 1},
      "obstacles": [{"x0": 50, "v": 0}]})") == "ego.colour: unknown key");
  CHECK(error_of(R"({"include": "missing.json"})").find("missing.json: cannot open") != std::string::npos);
}

TEST_CASE("serialized scenarios parse back identically") {
  for (const char* name : {"front_car_high", "front_car_low", "pedestrian_high", "pedestrian_low",
                           "oncoming"}) {
    CAPTURE(name);
    const auto spec = load_scenario(kScenarios / (std::string(name) + ".json"));
    const auto text = serialize_scenario(spec);
    CHECK(text.find("include") == std::string::npos);
    const auto back = parse_scenario(text);
    CHECK(back == spec);
    CHECK(serialize_scenario(back) == text);
  }
}

TEST_CASE("number formatting") {
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(4.16666666) == "4.16667");
  CHECK(format_number(-1e-7) == "-1e-07");
  CHECK(format_number(25.0) == "25");
}

TEST_CASE("run configuration checks the step ratio") {
  const auto spec = load_scenario(kScenarios / "front_car_low.json");
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate(spec));
  cfg.dt = 0.02;
  CHECK_THROWS_AS(cfg.validate(spec), ScenarioError);
  cfg.dt = 0.005;
  CHECK_NOTHROW(cfg.validate(spec));
  cfg.ts = 0.1;
  CHECK_NOTHROW(cfg.validate(spec));
}

TEST_CASE("emitted files") {
  const auto spec = load_scenario(kScenarios / "front_car_high.json");
  const auto log = run(spec);
  REQUIRE(log.plan.has_value());
  const fs::path dir = fs::temp_directory_path() / "evade_io_test";
  fs::remove_all(dir);
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.emit = {true, true, true, true};
  emit(log, cfg);
  const auto env = read(dir / "envelope.csv");
  CHECK(count_lines(env) == 1 + log.plan->timing.n_end);
  CHECK(env.rfind("step,t,y_min,y_max\n", 0) == 0);
  const auto ts = read(dir / "timeseries.csv");
  CHECK(count_lines(ts) == 1 + static_cast<int>(log.rows.size()));
  const auto summary = nlohmann::json::parse(read(dir / "summary.json"));
  CHECK(summary["collision"] == false);
  CHECK(summary["scenario"] == "front_car_high");
  const auto qp = nlohmann::json::parse(read(dir / "qp.json"));
  CHECK(qp.contains("H"));
  fs::remove_all(dir);
}

TEST_CASE("low risk summary reports the final gap") {
  const auto log = run(load_scenario(kScenarios / "front_car_low.json"));
  const auto j = nlohmann::json::parse(summary_json(log));
  CHECK(j["collision"] == false);
  CHECK(j["final_gap"].get<double>() == doctest::Approx(4.1).epsilon(1.0 / 4.1));
}

TEST_CASE("unwritable output directory is reported") {
  const auto log = run(load_scenario(kScenarios / "front_car_low.json"));
  RunConfig cfg;
  cfg.out_dir = "/proc/evade_cannot_write_here";
  CHECK_THROWS_AS(emit(log, cfg), std::runtime_error);
}

TEST_CASE("batch row layout") {
  const auto log = run(load_scenario(kScenarios / "pedestrian_low.json"));
  const auto header = batch_header();
  const auto row = batch_row("pedestrian_low", log);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.rfind("pedestrian_low,false,", 0) == 0);
}
