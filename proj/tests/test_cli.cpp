// End-to-end checks of the command-line tool via subprocesses. The binary
// path comes from the build system (OEUVRE_CLI_PATH).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CmdResult run_cmd(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const auto err_path =
      fs::temp_directory_path() / ("oeuvre_cli_err_" + std::to_string(counter++));
  const std::string cmd = env_prefix + std::string(OEUVRE_CLI_PATH) + " " + args +
                          " 2>" + err_path.string();
  CmdResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_path);
  std::ostringstream err_buf;
  err_buf << err.rdbuf();
  result.err = err_buf.str();
  fs::remove(err_path);
  return result;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "oeuvre_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << text;
  return path;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST_CASE("cli help and usage errors") {
  CHECK(run_cmd("--help").exit_code == 0);
  CHECK(run_cmd("").exit_code == 2);          // missing subcommand
  CHECK(run_cmd("run").exit_code == 2);       // missing config argument
  CHECK(run_cmd("nosuchcmd").exit_code == 2);
}

TEST_CASE("cli run executes a static experiment end to end") {
  const auto out_dir = scratch_dir() / "run_static";
  fs::remove_all(out_dir);
  const auto cfg = write_file("static.json", R"({
    "task": {"kind": "static", "dist": "uniform", "lo": 0.4, "hi": 0.6},
    "horizon": 60,
    "seeds": [1],
    "baselines": [{"kind": "prequential"}],
    "output_dir": ")" + out_dir.string() + R"("
  })");

  const auto res = run_cmd("run " + cfg.string());
  REQUIRE(res.exit_code == 0);
  const Json summary = Json::parse(res.out);
  CHECK(summary.at("task") == "static");
  CHECK(summary.at("horizon") == 60);
  REQUIRE(summary.at("estimators").size() == 2);
  CHECK(summary.at("estimators")[0].at("name") == "oeuvre");
  // Constant truth: the estimate hugs 0.5 after a short warm-up.
  CHECK(summary.at("estimators")[0].at("rmse_mean").get<double>() < 0.05);

  REQUIRE(fs::exists(out_dir / "trace_seed1.csv"));
  REQUIRE(fs::exists(out_dir / "summary.json"));
  std::ifstream trace(out_dir / "trace_seed1.csv");
  std::ostringstream buf;
  buf << trace.rdbuf();
  const auto lines = data_lines(buf.str());
  REQUIRE(lines.size() == 61);  // header + one row per step, burn-in included
  CHECK(lines[0] == "t,truth,oeuvre,prequential");
  fs::remove_all(out_dir);
}

TEST_CASE("cli run reports config errors as exit 2") {
  CHECK(run_cmd("run /nonexistent/config.json").exit_code == 2);
  const auto bad = write_file("bad.json", R"({"horizon": -3})");
  const auto res = run_cmd("run " + bad.string());
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("error") != std::string::npos);
}

TEST_CASE("cli run honors the output directory environment variable") {
  const auto env_dir = scratch_dir() / "env_out";
  fs::remove_all(env_dir);
  const auto cfg = write_file("static_envdir.json", R"({
    "task": {"kind": "static"},
    "horizon": 40,
    "seeds": [2]
  })");
  const auto res = run_cmd("run " + cfg.string(),
                           "OEUVRE_OUTPUT_DIR=" + env_dir.string() + " ");
  REQUIRE(res.exit_code == 0);
  CHECK(fs::exists(env_dir / "trace_seed2.csv"));

  // An explicit flag wins over the environment.
  const auto flag_dir = scratch_dir() / "flag_out";
  fs::remove_all(flag_dir);
  const auto res2 = run_cmd("run " + cfg.string() + " --output-dir " +
                                flag_dir.string(),
                            "OEUVRE_OUTPUT_DIR=" + env_dir.string() + " ");
  REQUIRE(res2.exit_code == 0);
  CHECK(fs::exists(flag_dir / "trace_seed2.csv"));
  fs::remove_all(env_dir);
  fs::remove_all(flag_dir);
}

TEST_CASE("cli run row count matches the horizon for a regression config") {
  const auto out_dir = scratch_dir() / "run_linreg";
  fs::remove_all(out_dir);
  const auto cfg = write_file("linreg.json", R"({
    "task": {"kind": "linreg", "dim": 25, "noise_std": 0.05},
    "horizon": 80,
    "seeds": [1],
    "output_dir": ")" + out_dir.string() + R"("
  })");
  const auto res = run_cmd("run " + cfg.string());
  REQUIRE(res.exit_code == 0);
  std::ifstream trace(out_dir / "trace_seed1.csv");
  std::ostringstream buf;
  buf << trace.rdbuf();
  CHECK(data_lines(buf.str()).size() == 81);
  fs::remove_all(out_dir);
}

TEST_CASE("cli sweep emits a per-setting table and the best point") {
  const auto cfg = write_file("sweep.json", R"({
    "task": {"kind": "static"},
    "horizon": 300,
    "seeds": [1, 2],
    "grids": {"ema": [0.3]},
    "write_traces": false
  })");
  const auto res = run_cmd("sweep " + cfg.string() + " ema");
  REQUIRE(res.exit_code == 0);
  const Json report = Json::parse(res.out);
  CHECK(report.at("kind") == "ema");
  CHECK(report.at("oracle_truth_access") == true);
  REQUIRE(report.at("points").size() == 1);
  CHECK(report.at("points")[0].at("param") == 0.3);
  CHECK(report.at("best").at("index") == 0);

  CHECK(run_cmd("sweep " + cfg.string() + " nosuch").exit_code == 2);
  CHECK(run_cmd("sweep " + cfg.string() + " prequential").exit_code == 2);
}

TEST_CASE("cli coverage runs a small study") {
  const auto cfg = write_file("coverage.json", R"({
    "task": {"kind": "static"},
    "horizon": 80,
    "seeds": [1],
    "estimator": {"burn_in": 20},
    "coverage": {"replications": 100, "delta": 0.05, "checkpoints": [80]},
    "write_traces": false
  })");
  const auto res = run_cmd("coverage " + cfg.string());
  REQUIRE(res.exit_code == 0);
  const Json report = Json::parse(res.out);
  CHECK(report.at("replications") == 100);
  CHECK(report.at("checkpoints")[0].at("t") == 80);
  CHECK(report.at("time_uniform_coverage").get<double>() >= 0.8);
}

TEST_CASE("cli stream reproduces running means when drift is zero") {
  const auto input = write_file("stream_static.csv",
                                "t,loss_curr,loss_prev\n1,1,1\n2,2,2\n3,3,3\n");
  const auto res = run_cmd("stream --input " + input.string() +
                           " --sigma-kind constant_zero --b-hat 1 --c-hat 0");
  REQUIRE(res.exit_code == 0);
  const auto lines = data_lines(res.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "t,estimate");
  CHECK(lines[1] == "1,1");
  CHECK(lines[2] == "2,1.5");
  CHECK(lines[3] == "3,2");
}

TEST_CASE("cli stream prints the pinned interval half-width") {
  const auto input = write_file("stream_ci.csv",
                                "t,loss_curr,loss_prev\n1,1,1\n2,2,2\n");
  const auto res = run_cmd("stream --input " + input.string() +
                           " --b-hat 1 --c-hat 0 --delta 0.7357588823");
  REQUIRE(res.exit_code == 0);
  const auto lines = data_lines(res.out);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "t,estimate,half_width");
  // Third field of the t=2 row: sqrt(2 * 0.5 * ln(2/delta)) = 1 at delta = 2/e.
  const auto row = lines[2];
  const auto last_comma = row.rfind(',');
  const double half_width = std::stod(row.substr(last_comma + 1));
  CHECK(half_width == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cli stream skips malformed rows with a warning and exit 1") {
  const auto input = write_file(
      "stream_bad.csv",
      "t,loss_curr,loss_prev\n1,0.5,0.5\n2,oops,0.5\n3,0.25,0.25\n4,0.5\n");
  const auto res = run_cmd("stream --input " + input.string() +
                           " --b-hat 1 --c-hat 1");
  CHECK(res.exit_code == 1);
  const auto lines = data_lines(res.out);
  REQUIRE(lines.size() == 3);  // header + rows 1 and 3
  CHECK(lines[1].substr(0, 2) == "1,");
  CHECK(lines[2].substr(0, 2) == "3,");
  CHECK(res.err.find("skipping line 3") != std::string::npos);
  CHECK(res.err.find("skipped 2") != std::string::npos);
}

TEST_CASE("cli stream rejects non-increasing step indices") {
  const auto input = write_file(
      "stream_order.csv", "t,loss_curr,loss_prev\n5,0.5,0.5\n4,0.25,0.25\n");
  const auto res = run_cmd("stream --input " + input.string() +
                           " --b-hat 1 --c-hat 1");
  CHECK(res.exit_code == 2);

  const auto dup = write_file(
      "stream_dup.csv", "t,loss_curr,loss_prev\n5,0.5,0.5\n5,0.25,0.25\n");
  CHECK(run_cmd("stream --input " + dup.string() + " --b-hat 1 --c-hat 1")
            .exit_code == 2);
}

TEST_CASE("cli stream validates header and flags") {
  const auto input = write_file("stream_hdr.csv", "t,loss\n1,0.5\n");
  CHECK(run_cmd("stream --input " + input.string()).exit_code == 2);
  const auto ok = write_file("stream_ok.csv", "t,loss_curr,loss_prev\n1,1,1\n");
  CHECK(run_cmd("stream --input " + ok.string() + " --sigma-kind bogus")
            .exit_code == 2);
  CHECK(run_cmd("stream --input " + ok.string() + " --delta 1.5 --b-hat 1 --c-hat 1")
            .exit_code == 2);
  CHECK(run_cmd("stream --input /nonexistent/in.csv").exit_code == 3);
}

TEST_CASE("cli stream supports a per-row sigma override column") {
  const auto input = write_file(
      "stream_sigma.csv",
      "t,loss_curr,loss_prev,sigma\n1,1,1,0\n2,2,2,0\n3,3,3,0\n");
  const auto res = run_cmd("stream --input " + input.string() +
                           " --b-hat 1 --c-hat 1");
  REQUIRE(res.exit_code == 0);
  const auto lines = data_lines(res.out);
  REQUIRE(lines.size() == 4);
  // sigma = 0 overrides c_hat = 1: running-mean behavior again.
  CHECK(lines[2] == "2,1.5");
  CHECK(lines[3] == "3,2");
}
