#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"

#include "heatopt/field_io.hpp"
#include "heatopt/runconfig.hpp"

using namespace heatopt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path sandbox(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("heatopt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      std::string(HEATOPT_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// history.csv minus its wall-clock column; the reproducible part of the file
std::string strip_seconds(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    const size_t third_comma = line.find(',', line.find(',', line.find(',') + 1) + 1);
    out << line.substr(0, third_comma) << '\n';
  }
  return out.str();
}

json load_json_without_meta(const fs::path& p) {
  json j = json::parse(slurp(p));
  j.erase("meta");
  return j;
}

}  // namespace

TEST_CASE("config text parses sections, comments and values") {
  const std::string text =
      "# heat run\n"
      "seed = 12\n"
      "[grid]\n"
      "nx = 64   # inline comment\n"
      "ny = 48\n"
      "\n"
      "[solver]\n"
      "method = jacobi\n"
      "tolerance = 1e-9\n"
      "[train]\n"
      "fixed_layout = true\n";
  const RawConfig cfg = parse_config_text(text);
  CHECK(cfg.get_long("seed", 0) == 12);
  CHECK(cfg.get_long("grid.nx", 0) == 64);
  CHECK(cfg.get_long("grid.ny", 0) == 48);
  CHECK(cfg.get_string("solver.method", "") == "jacobi");
  CHECK(cfg.get_double("solver.tolerance", 0.0) == doctest::Approx(1e-9));
  CHECK(cfg.get_bool("train.fixed_layout", false));
  CHECK(cfg.get_long("train.epochs", 3000) == 3000);  // default passes through
  CHECK_FALSE(cfg.has("train.epochs"));
}

TEST_CASE("config errors carry the offending key") {
  const RawConfig cfg = parse_config_text("[train]\nepochs = banana\nlr = fast\n");
  try {
    cfg.get_long("train.epochs", 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "train.epochs");
    CHECK(std::string(e.what()).find("banana") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.get_double("train.lr", 0.0), ConfigError);

  CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[unclosed\n"), ConfigError);

  try {
    reject_unknown_keys(cfg, {"train.lr"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "train.epochs");
  }

  CHECK_THROWS_AS(parse_config_file("/nonexistent/heatopt.cfg"), MissingArtifactError);
}

TEST_CASE("cli solve writes the field artifacts") {
  const fs::path dir = sandbox("solve");
  const RunResult r = run_cli("solve --case 1 --width 20 --out-dir " + (dir / "out").string(), dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "field.csv"));
  CHECK(fs::exists(dir / "out" / "field.pgm"));
  CHECK(fs::exists(dir / "out" / "residual.csv"));
  CHECK(fs::exists(dir / "out" / "result.json"));

  const FieldArray field = read_csv((dir / "out" / "field.csv").string());
  CHECK(field.rows() == 128);
  CHECK(field.cols() == 128);
  CHECK((field.col(0) == 1.0).all());
  CHECK(field.minCoeff() >= 0.0);
  CHECK(field.maxCoeff() <= 1.0);

  const json j = json::parse(slurp(dir / "out" / "result.json"));
  CHECK(j["command"] == "solve");
  CHECK(j["stats"]["converged"] == true);
  CHECK(j["mean_temperature"].get<double>() > 0.0);
  CHECK(j["layout"][0]["w"] == 20);
  CHECK(j["layout"][0]["h"] == 20);
}

TEST_CASE("cli solve with hot equal to cold yields the zero field") {
  const fs::path dir = sandbox("solve_zero");
  const RunResult r =
      run_cli("solve --case 1 --width 20 --hot 0 --cold 0 --out-dir " + (dir / "out").string(),
              dir);
  CHECK(r.exit_code == 0);
  const FieldArray field = read_csv((dir / "out" / "field.csv").string());
  CHECK(field.abs().maxCoeff() == 0.0);
}

TEST_CASE("malformed config values exit with code 2 and name the key") {
  const fs::path dir = sandbox("badcfg");
  {
    std::ofstream f(dir / "bad.cfg");
    f << "[solver]\nomega = spicy\n";
  }
  const RunResult r =
      run_cli("solve --config " + (dir / "bad.cfg").string() + " --out-dir " +
                  (dir / "out").string(),
              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("solver.omega") != std::string::npos);

  {
    std::ofstream f(dir / "unknown.cfg");
    f << "wibble = 3\n";
  }
  const RunResult u = run_cli("solve --config " + (dir / "unknown.cfg").string(), dir);
  CHECK(u.exit_code == 2);
  CHECK(u.err.find("wibble") != std::string::npos);

  // unknown flags are configuration errors too
  const RunResult f = run_cli("solve --wibble 3", dir);
  CHECK(f.exit_code == 2);

  const RunResult h = run_cli("--help", dir);
  CHECK(h.exit_code == 0);
  CHECK(h.out.find("solve") != std::string::npos);
}

TEST_CASE("cli train produces a checkpoint even at zero epochs") {
  const fs::path dir = sandbox("train0");
  const RunResult r = run_cli(
      "train --case 2 --nx 32 --ny 32 --depth 3 --base-channels 2 --batch 1 --epochs 0 "
      "--out-dir " +
          (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "checkpoint.bin"));
  CHECK(fs::exists(dir / "out" / "history.csv"));
  CHECK(fs::exists(dir / "out" / "result.json"));
  // no epochs: the history is just its header
  CHECK(strip_seconds(slurp(dir / "out" / "history.csv")) == "epoch,loss,rms_residual\n");
  const json j = json::parse(slurp(dir / "out" / "result.json"));
  CHECK(j["epochs"] == 0);
  CHECK(j["parameter_count"].get<long>() > 0);
}

TEST_CASE("training runs are byte-reproducible given a seed") {
  const fs::path dir = sandbox("train_repro");
  const std::string base =
      "train --case 2 --nx 32 --ny 32 --depth 3 --base-channels 2 --batch 2 --epochs 3 "
      "--seed 7 --out-dir ";
  const RunResult a = run_cli(base + (dir / "a").string(), dir);
  const RunResult b = run_cli(base + (dir / "b").string(), dir);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);

  // identical modulo wall time: history rows, result fields, checkpoint bytes
  CHECK(strip_seconds(slurp(dir / "a" / "history.csv")) ==
        strip_seconds(slurp(dir / "b" / "history.csv")));
  CHECK(load_json_without_meta(dir / "a" / "result.json") ==
        load_json_without_meta(dir / "b" / "result.json"));
  CHECK(slurp(dir / "a" / "checkpoint.bin") == slurp(dir / "b" / "checkpoint.bin"));

  // a different seed diverges
  const RunResult c = run_cli(
      "train --case 2 --nx 32 --ny 32 --depth 3 --base-channels 2 --batch 2 --epochs 3 "
      "--seed 8 --out-dir " +
          (dir / "c").string(),
      dir);
  REQUIRE(c.exit_code == 0);
  CHECK(strip_seconds(slurp(dir / "a" / "history.csv")) !=
        strip_seconds(slurp(dir / "c" / "history.csv")));
}

TEST_CASE("cli predict requires a checkpoint and matching grid") {
  const fs::path dir = sandbox("predict");
  const RunResult missing = run_cli(
      "predict --case 2 --checkpoint " + (dir / "nope.bin").string() + " --out-dir " +
          (dir / "out").string(),
      dir);
  CHECK(missing.exit_code == 5);

  const RunResult none = run_cli("predict --case 2 --out-dir " + (dir / "out").string(), dir);
  CHECK(none.exit_code == 5);

  // train a tiny checkpoint, then predict with it
  const RunResult t = run_cli(
      "train --case 2 --nx 32 --ny 32 --depth 3 --base-channels 2 --batch 1 --epochs 1 "
      "--out-dir " +
          (dir / "ck").string(),
      dir);
  REQUIRE(t.exit_code == 0);

  const RunResult p = run_cli(
      "predict --case 2 --checkpoint " + (dir / "ck" / "checkpoint.bin").string() +
          " --out-dir " + (dir / "out").string(),
      dir);
  CHECK(p.exit_code == 0);
  const FieldArray field = read_csv((dir / "out" / "field.csv").string());
  CHECK(field.rows() == 32);
  CHECK((field.col(0) == 1.0).all());

  // asking for a different grid than the checkpoint's is a shape mismatch
  const RunResult mismatch = run_cli(
      "predict --case 2 --nx 64 --ny 64 --checkpoint " +
          (dir / "ck" / "checkpoint.bin").string() + " --out-dir " + (dir / "out2").string(),
      dir);
  CHECK(mismatch.exit_code == 6);
}

TEST_CASE("cli optimize on the width case finds the thinnest hole") {
  const fs::path dir = sandbox("optimize");
  // The width landscape is bimodal (a shallow local basin sits at large
  // widths), and the global basin is narrow, so the swarm needs enough
  // particles to cover it from the start.
  const RunResult r = run_cli(
      "optimize --case 1 --backend oracle --particles 20 --iterations 50 --seed 3 --out-dir " +
          (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  const json j = json::parse(slurp(dir / "out" / "result.json"));
  CHECK(j["backend"] == "oracle");
  CHECK(j["best_layout"][0]["w"] == 5);
  CHECK(j["best_layout"][0]["h"] == 80);
  const std::vector<double> trace = j["trace"].get<std::vector<double>>();
  REQUIRE_FALSE(trace.empty());
  for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  CHECK(fs::exists(dir / "out" / "field.csv"));

  const RunResult s = run_cli("optimize --case 1 --backend surrogate --out-dir " +
                                  (dir / "out2").string(),
                              dir);
  CHECK(s.exit_code == 5);  // surrogate backend without a checkpoint
}

TEST_CASE("cli compare reports zero difference for identical inputs") {
  const fs::path dir = sandbox("compare");
  const RunResult solve =
      run_cli("solve --case 1 --width 20 --out-dir " + (dir / "a").string(), dir);
  REQUIRE(solve.exit_code == 0);
  const std::string field = (dir / "a" / "field.csv").string();
  const RunResult cmp = run_cli(
      "compare --a " + field + " --b " + field + " --out-dir " + (dir / "out").string(), dir);
  CHECK(cmp.exit_code == 0);
  CHECK(cmp.out.find("MAE") != std::string::npos);
  const json j = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["global_mae"].get<double>() == 0.0);
  CHECK(j["global_max_abs"].get<double>() == 0.0);
  const FieldArray diff = read_csv((dir / "out" / "field.csv").string());
  CHECK(diff.abs().maxCoeff() == 0.0);

  const RunResult noargs = run_cli("compare --out-dir " + (dir / "out3").string(), dir);
  CHECK(noargs.exit_code == 2);
}
