#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using stocycle::app::run_cli;

namespace {

struct Sandbox {
  fs::path dir;
  explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("stocycle_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file, std::ios::binary) << text;
    return dir / file;
  }
};

int run(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

const char* kSimulate = R"({
  "model": {"k": 1, "p": 1, "r": 0},
  "simulate": {"n": 80, "parameters": {"a": 2, "lambda1": 0.5, "p1": 4, "beta0": 0.5,
                                        "phi1": 0.5, "alphaA": 0.1, "alphaP": 0.05, "omega": 4}},
  "sampler": {"seed": 7},
  "output": "sim"
})";

const char* kFit = R"({
  "data": {"path": "sim/simulated.csv", "column": "y", "periods_per_year": 4},
  "model": {"k": 1, "p": 1, "r": 0},
  "sampler": {"n_iterations": 1500, "n_burnin": 500, "thin": 5, "n_chains": 2, "seed": 11},
  "analysis": {"forecast_horizon": 8, "paths_per_draw": 2, "max_draws": 100, "clock_window_years": [4]},
  "output": "fit"
})";

}  // namespace

TEST_CASE("every command runs end to end and writes its artifacts") {
  Sandbox box("pipeline");
  const auto sim = box.write("simulate.json", kSimulate);
  const auto fit = box.write("fit.json", kFit);

  REQUIRE(run({"--config", sim.string(), "simulate"}) == 0);
  CHECK(fs::exists(box.dir / "sim" / "simulated.csv"));
  CHECK(fs::exists(box.dir / "sim" / "simulated.svg"));

  REQUIRE(run({"--config", fit.string(), "periodogram"}) == 0);
  const auto peaks = read_json(box.dir / "fit" / "peaks.json");
  CHECK(peaks.at("command") == "periodogram");

  REQUIRE(run({"--config", fit.string(), "fit"}) == 0);
  const auto fit_json = read_json(box.dir / "fit" / "fit.json");
  CHECK(fit_json.at("schema_version") == 1);
  CHECK(fs::exists(box.dir / "fit" / "chains.csv"));

  std::string table;
  REQUIRE(run({"--config", fit.string(), "summarize"}, &table) == 0);
  CHECK(table.find("lambda1") != std::string::npos);
  CHECK(table.find("T(lambda1)") != std::string::npos);

  for (const char* cmd : {"decompose", "clock", "forecast"}) {
    CAPTURE(cmd);
    CHECK(run({"--config", fit.string(), cmd}) == 0);
  }
  for (const char* file : {"summary.csv", "decomposition.csv", "decomposition.svg", "clock.csv", "ellipses.json",
                           "quadrants.svg", "forecast.csv", "forecast.svg"}) {
    CAPTURE(file);
    CHECK(fs::exists(box.dir / "fit" / file));
  }
  const auto fc = read_json(box.dir / "fit" / "forecast.json");
  CHECK(fc.at("fit_hash") == fit_json.at("fit_hash"));
}

TEST_CASE("command-line overrides redirect output and change the seed") {
  Sandbox box("overrides");
  const auto sim = box.write("simulate.json", kSimulate);
  REQUIRE(run({"--config", sim.string(), "--out", (box.dir / "a").string(), "simulate"}) == 0);
  REQUIRE(run({"--config", sim.string(), "--out", (box.dir / "b").string(), "--seed", "8", "simulate"}) == 0);
  REQUIRE(run({"simulate", "--config", sim.string(), "--out", (box.dir / "c").string()}) == 0);
  std::ifstream a(box.dir / "a" / "simulated.csv"), b(box.dir / "b" / "simulated.csv"),
      c(box.dir / "c" / "simulated.csv");
  std::stringstream sa, sb, sc;
  sa << a.rdbuf();
  sb << b.rdbuf();
  sc << c.rdbuf();
  CHECK(sa.str() != sb.str());
  CHECK(sa.str() == sc.str());
}

TEST_CASE("failures map to distinct exit codes") {
  Sandbox box("errors");
  std::string err;

  SUBCASE("missing configuration file") {
    CHECK(run({"--config", (box.dir / "nope.json").string(), "fit"}, nullptr, &err) == 2);
  }
  SUBCASE("unknown key is rejected") {
    const auto cfg = box.write("bad.json", R"({"model": {"k": 1, "p": 1, "r": 0, "kk": 2}})");
    CHECK(run({"--config", cfg.string(), "simulate"}, nullptr, &err) == 2);
    CHECK(err.find("kk") != std::string::npos);
  }
  SUBCASE("unknown subcommand") {
    const auto cfg = box.write("sim.json", kSimulate);
    CHECK(run({"--config", cfg.string(), "bogus"}, nullptr, &err) == 2);
  }
  SUBCASE("data path that does not exist") {
    const auto cfg = box.write("fit.json", kFit);
    CHECK(run({"--config", cfg.string(), "periodogram"}, nullptr, &err) == 2);
    CHECK(err.find("data.path") != std::string::npos);
  }
  SUBCASE("summarize without a fit") {
    box.write("sim.json", kSimulate);
    REQUIRE(run({"--config", (box.dir / "sim.json").string(), "simulate"}) == 0);
    const auto cfg = box.write("fit.json", kFit);
    CHECK(run({"--config", cfg.string(), "summarize"}, nullptr, &err) == 2);
  }
  SUBCASE("malformed data") {
    fs::create_directories(box.dir / "sim");
    box.write("sim/simulated.csv", "t,y\n1,2\n2,abc\n");
    const auto cfg = box.write("fit.json", kFit);
    CHECK(run({"--config", cfg.string(), "fit"}, nullptr, &err) == 3);
  }
}
