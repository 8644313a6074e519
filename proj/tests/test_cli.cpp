#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("geodefect_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GEODEFECT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("zoo succeeds") { CHECK(run("zoo --json") == 0); }

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("scan --model klein") == 2);
  CHECK(run("scan --model torus --n 4 --l 4") == 2);
  CHECK(run("scan --model torus --n 4 --grid 2,2") == 2);
  CHECK(run("deform --model torus --n 4 --s-schedule ''") == 2);
  CHECK(run("scan --model torus --bogus") == 2);
  CHECK(run("scan --model-file /nonexistent/file.json") == 2);
}

TEST_CASE("scan writes the csv and summary") {
  const fs::path out = scratch("scan");
  CHECK(run("scan --model random-trig --n 4 --param amplitude=0.2 --model-seed 7 --grid 2 --planes-per-point 2 --out-dir " +
            out.string()) == 0);
  CHECK(fs::exists(out / "scan.csv"));
  const json s = read_json(out / "summary.json");
  CHECK(s.contains("certificate"));
}

TEST_CASE("deform writes audit, metric and summary; reload rescans identically") {
  const fs::path out = scratch("deform");
  REQUIRE(run("deform --model torus --n 4 --out-dir " + out.string()) == 0);
  for (const char* f : {"audit.json", "final_metric.json", "summary.json"}) CHECK(fs::exists(out / f));
  const json summary = read_json(out / "summary.json");
  CHECK(summary["status"] == "clean");

  const fs::path re = scratch("rescan");
  REQUIRE(run("scan --model-file " + (out / "final_metric.json").string() +
              " --l 3 --grid 2 --planes-per-point 4 --out-dir " + re.string()) == 0);
  const json rs = read_json(re / "summary.json");
  CHECK(rs["min_defect"].get<double>() == summary["final_min_defect"]["3"].get<double>());
}

TEST_CASE("an exhausted budget exits with 4") {
  const fs::path out = scratch("budget");
  CHECK(run("deform --model torus --n 4 --xi 1e-12 --out-dir " + out.string()) == 4);
  CHECK(fs::exists(out / "audit.json"));
}

TEST_CASE("verify passes, and fails with 5 on the sign-flip fixture") {
  const fs::path out = scratch("verify");
  CHECK(run("verify --quick --out-dir " + out.string()) == 0);
  CHECK(read_json(out / "verify.json")["passed"] == true);
  CHECK(run("verify --quick --fixture flip-sign --out-dir " + out.string()) == 5);
  CHECK(read_json(out / "verify.json")["passed"] == false);
}
