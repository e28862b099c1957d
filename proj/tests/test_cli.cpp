#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = MHMP_CLI_PATH;
const fs::path kData = MHMP_TEST_DATA;
const fs::path kGolden = MHMP_GOLDEN_DIR;

struct Result {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mhmp_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

Result cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + " " + kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string data(const std::string& name) { return (kData / name).string(); }

}  // namespace

TEST_CASE("run writes summary, metrics and cdf") {
  const auto dir = scratch("run");
  const auto r = cli("run " + data("small.json") + " --scheme mhmp_ll --out " + (dir / "o").string(), dir);
  CHECK(r.code == 0);
  for (const char* f : {"summary.json", "metrics.csv", "cdf.csv"}) CHECK(fs::exists(dir / "o" / f));
}

TEST_CASE("same seed, identical files") {
  const auto dir = scratch("seed");
  const std::string base = "run " + data("small.json") + " --scheme allp --seed 42 --out ";
  REQUIRE(cli(base + (dir / "a").string(), dir).code == 0);
  REQUIRE(cli(base + (dir / "b").string(), dir).code == 0);
  for (const char* f : {"summary.json", "metrics.csv", "cdf.csv"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  REQUIRE(cli("run " + data("small.json") + " --scheme allp --seed 43 --out " + (dir / "c").string(), dir).code == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") != slurp(dir / "c" / "metrics.csv"));
}

TEST_CASE("missing power is a validation error naming the key") {
  const auto dir = scratch("missing");
  const auto r = cli("run " + data("missing_power.json") + " --scheme mhmp_ll --out " + dir.string(), dir);
  CHECK(r.code == 1);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"]["kind"] == "config");
  CHECK(j["error"]["keys"][0] == "power.p_tot_dbm");
}

TEST_CASE("unknown scheme lists the valid ones") {
  const auto dir = scratch("unknown");
  const auto r = cli("compare " + data("small.json") + " --schemes mhmp_ll,fastest --out " + dir.string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("two_path_ll") != std::string::npos);
}

TEST_CASE("unreadable scenario and bad flags") {
  const auto dir = scratch("bad");
  CHECK(cli("run /nonexistent.json --scheme sp_ll", dir).code == 1);
  CHECK(cli("run " + data("small.json"), dir).code == 1);
  CHECK(cli("launch", dir).code == 1);
}

TEST_CASE("sweep writes one row per hop count") {
  const auto dir = scratch("sweep");
  const auto r = cli("sweep " + data("small.json") + " --hops 1..5 --metric latency --out " + dir.string(), dir);
  REQUIRE(r.code == 0);
  const std::string text = slurp(dir / "sweep.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("oracle check on the symmetric single-layer network") {
  const auto dir = scratch("oracle");
  const std::string base = "oracle-check " + data("symmetric_h1.json") + " --resolution 0.01 --out " + dir.string();
  CHECK(cli(base + " --skip-convexity", dir).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "oracle_check.json"));
  CHECK(j["max_relative_gap"].get<double>() <= 0.01);
  // The latency terms are not jointly convex, so the enforced probe fails.
  const auto strict = cli(base, dir);
  CHECK(strict.code == 2);
  CHECK(strict.err.find("convexity") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
  const auto dir = scratch("env");
  const auto r = cli("run " + data("small.json") + " --scheme sp_ll", dir, "MHMP_OUT_DIR=" + (dir / "env_out").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "env_out" / "summary.json"));
}

TEST_CASE("output schemas match the golden files") {
  const auto dir = scratch("golden");
  REQUIRE(cli("compare " + data("small.json") + " --schemes sp_ll,allp --out " + dir.string(), dir).code == 0);
  REQUIRE(cli("sweep " + data("small.json") + " --hops 1..2 --out " + dir.string(), dir).code == 0);
  for (const char* f : {"metrics.csv", "cdf.csv", "trajectories.csv", "channel.csv", "sweep.csv"}) {
    CAPTURE(f);
    CHECK(first_line(dir / f) == first_line(kGolden / (std::string(f) + ".header")));
  }
  // Key layout of the summary, values blanked.
  auto blank = [](auto&& self, nlohmann::json& j) -> void {
    if (j.is_object() || j.is_array())
      for (auto& v : j) self(self, v);
    else
      j = nullptr;
  };
  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  blank(blank, summary);
  CHECK(summary == nlohmann::json::parse(slurp(kGolden / "summary.layout.json")));
}

TEST_CASE("default scenario command emits a loadable file") {
  const auto dir = scratch("default");
  REQUIRE(cli("default-scenario --out " + (dir / "d.json").string(), dir).code == 0);
  auto doc = nlohmann::json::parse(slurp(dir / "d.json"));
  CHECK(doc["power"]["p_tot_dbm"] == 23.0);
  CHECK(doc["simulation"]["horizon_s"] == 300.0);
}
