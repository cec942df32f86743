#include "helpers.hpp"

#include "mardid/cli.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mardid;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mardid_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("generate then estimate") {
  const auto dir = scratch_dir("estimate");
  const auto csv = dir / "data.csv";
  REQUIRE(run({"generate", "--n", "2000", "--seed", "1", "--out", csv.string()}).code == kExitOk);

  const auto ifs = dir / "if.csv";
  const auto r = run({"estimate", "--data", csv.string(), "--seed", "1", "--if-out", ifs.string()});
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  const auto j = json::parse(r.out);
  REQUIRE(std::abs(j["theta_hat"].get<double>() - 5.0) <= 0.5);
  REQUIRE(j["std_err"].get<double>() > 0.0);
  REQUIRE(j["n"].get<int>() == 2000);
  REQUIRE(j["J"].get<int>() == 5);
  REQUIRE(j["regime"] == "pre-simple");
  REQUIRE(j["diagnostics"]["efficiency_gap"]["terms"].size() == 2);

  const auto table = slurp(ifs);
  REQUIRE(table.rfind("row,fold,a,phi\n", 0) == 0);
  REQUIRE(std::count(table.begin(), table.end(), '\n') == 2001);

  // the generated file reads back under the pre-hard label as well
  REQUIRE(run({"estimate", "--data", csv.string(), "--regime", "pre-hard"}).code == kExitOk);
}

TEST_CASE("usage errors exit with 2") {
  REQUIRE(run({}).code == kExitUsage);
  REQUIRE(run({"frobnicate"}).code == kExitUsage);
  REQUIRE(run({"estimate"}).code == kExitUsage);
  REQUIRE(run({"estimate", "--data", "/nonexistent/file.csv"}).code == kExitUsage);
  REQUIRE(run({"simulate", "--reps", "0"}).code == kExitUsage);
  REQUIRE(run({"simulate", "--folds", "1", "--reps", "1"}).code == kExitUsage);
  REQUIRE(run({"simulate", "--scenario", "12"}).code == kExitUsage);
  REQUIRE(run({"generate", "--regime", "sideways"}).code == kExitUsage);
  REQUIRE(run({"estimate", "--folds", "abc"}).code == kExitUsage);
  REQUIRE(run({"--help"}).code == kExitOk);
}

TEST_CASE("estimation failures exit with 3") {
  const auto dir = scratch_dir("fail");
  const auto csv = dir / "tiny.csv";
  // one treated unit: some evaluation fold has no treated units
  spit(csv,
       "x1,a,r0,y0,r1,y1\n"
       "0.1,1,1,1,1,2\n0.2,0,1,1,1,1\n0.3,0,1,2,1,2\n0.4,0,1,0,1,1\n0.5,0,1,1,1,3\n0.6,0,1,2,1,2\n");
  const auto r = run({"estimate", "--data", csv.string(), "--folds", "3"});
  REQUIRE(r.code == kExitEstimation);
  REQUIRE(r.err.find("no treated") != std::string::npos);
}

TEST_CASE("simulate writes reports and report re-renders them") {
  const auto dir = scratch_dir("simulate");
  const auto r = run({"simulate", "--n", "200", "--reps", "4", "--scenario", "1*1", "--seed", "3", "--out",
                      dir.string()});
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"report_pre-simple.csv", "reps_pre-simple.csv", "report_pre-simple.md", "meta_pre-simple.json"})
    REQUIRE(fs::exists(dir / f));
  REQUIRE(r.out == slurp(dir / "report_pre-simple.md"));
  const auto meta = json::parse(slurp(dir / "meta_pre-simple.json"));
  REQUIRE(meta["scenarios"].size() == 2);
  REQUIRE(meta["settings"]["reps"] == 4);

  const auto rendered = run({"report", "--data", (dir / "reps_pre-simple.csv").string()});
  REQUIRE(rendered.code == kExitOk);
  REQUIRE(rendered.out.find("| ✓ | ✗ | ✓ |") != std::string::npos);
  REQUIRE(rendered.out.find("Rendered from a replication table") != std::string::npos);

  const auto reps = slurp(dir / "reps_pre-simple.csv");
  spit(dir / "truncated.csv", reps.substr(0, reps.size() - 3));
  REQUIRE(run({"report", "--data", (dir / "truncated.csv").string()}).code == kExitUsage);
  spit(dir / "header.csv", "scenario,rep,theta_hat,std_err,covered\n");
  const auto header_only = run({"report", "--data", (dir / "header.csv").string()});
  REQUIRE(header_only.code == kExitUsage);
  REQUIRE(header_only.err.find("no replications") != std::string::npos);
}

TEST_CASE("config file, environment and flags layer in that order") {
  const auto dir = scratch_dir("config");
  const auto cfg = dir / "cfg.json";
  spit(cfg, R"({"n": 120, "seed": 4, "regime": "post-simple"})");

  const auto from_file = run({"generate", "--config", cfg.string()});
  REQUIRE(from_file.code == kExitOk);
  REQUIRE(std::count(from_file.out.begin(), from_file.out.end(), '\n') == 121);

  setenv("MARDID_N", "80", 1);
  const auto from_env = run({"generate", "--config", cfg.string()});
  REQUIRE(std::count(from_env.out.begin(), from_env.out.end(), '\n') == 81);
  const auto from_flag = run({"generate", "--config", cfg.string(), "--n", "60"});
  REQUIRE(std::count(from_flag.out.begin(), from_flag.out.end(), '\n') == 61);
  unsetenv("MARDID_N");

  // the seed from the file reaches the generator
  REQUIRE(from_file.out == run({"generate", "--n", "120", "--seed", "4", "--regime", "post-simple"}).out);

  spit(cfg, R"({"bogus": 1})");
  REQUIRE(run({"generate", "--config", cfg.string()}).code == kExitUsage);
  spit(cfg, R"({"n": "many"})");
  REQUIRE(run({"generate", "--config", cfg.string()}).code == kExitUsage);
  spit(cfg, "{not json");
  REQUIRE(run({"generate", "--config", cfg.string()}).code == kExitUsage);
}

TEST_CASE("the installed tool runs") {
  const char* tool = std::getenv("MARDID_TOOL");
  if (tool == nullptr) SKIP("MARDID_TOOL not set");
  const auto dir = scratch_dir("tool");
  const std::string cmd = std::string(tool) + " generate --n 60 --out " + (dir / "g.csv").string() + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  REQUIRE(fs::exists(dir / "g.csv"));
  const std::string bad = std::string(tool) + " simulate --reps 0 2>/dev/null";
  const int status = std::system(bad.c_str());
  REQUIRE(WEXITSTATUS(status) == kExitUsage);
}
