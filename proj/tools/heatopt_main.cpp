// Command-line front end: solve / train / predict / optimize / compare.
//
// Option precedence: built-in defaults, then the --config file, then flags.
// Every artifact lands under --out-dir with a fixed name so runs are easy to
// diff; all JSON output is deterministic for a given (config, seed) except
// the "meta" object, which carries wall time and a timestamp.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#ifdef HEATOPT_HAVE_OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "heatopt/fdm.hpp"
#include "heatopt/field.hpp"
#include "heatopt/field_io.hpp"
#include "heatopt/network.hpp"
#include "heatopt/pso.hpp"
#include "heatopt/report.hpp"
#include "heatopt/runconfig.hpp"
#include "heatopt/stencil.hpp"
#include "heatopt/train.hpp"
#include "heatopt/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace heatopt;

namespace {

struct Settings {
  GridSpec grid;
  bool grid_given = false;
  BoundaryCondition bc;
  SolverConfig solver;
  int case_id = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string backend = "oracle";
  std::string checkpoint;
  std::optional<int> width;
  std::string path_a, path_b, path_mask;
  int threads = 0;

  TIndex batch = 10;
  long epochs = 3000;
  double lr = 0.001;
  long history_every = 1;
  long checkpoint_every = 0;
  bool fixed_layout = false;
  UNetConfig net;
  bool depth_given = false;

  SwarmConfig swarm;
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "case", "seed", "backend", "width", "hot", "cold", "out_dir", "threads", "checkpoint",
      "a", "b", "mask",
      "grid.nx", "grid.ny",
      "solver.method", "solver.omega", "solver.tolerance", "solver.max_iterations",
      "train.batch", "train.epochs", "train.lr", "train.history_every",
      "train.checkpoint_every", "train.fixed_layout", "train.depth", "train.base_channels",
      "train.channel_cap", "train.dropout", "train.batchnorm",
      "swarm.particles", "swarm.iterations", "swarm.inertia", "swarm.cognitive", "swarm.social",
      "swarm.quantize_moves"};
  return keys;
}

// deepest stride-2 pyramid the grid supports, capped at the 128x128 default
int default_depth(const GridSpec& g) {
  int d = 0;
  while (d < 7 && g.nx % (1 << (d + 1)) == 0 && g.ny % (1 << (d + 1)) == 0 &&
         (1 << (d + 1)) <= std::min(g.nx, g.ny))
    ++d;
  return std::max(d, 1);
}

Settings resolve(const RawConfig& cfg) {
  reject_unknown_keys(cfg, known_keys());
  Settings s;
  s.grid.nx = static_cast<int>(cfg.get_long("grid.nx", 128));
  s.grid.ny = static_cast<int>(cfg.get_long("grid.ny", 128));
  s.grid_given = cfg.has("grid.nx") || cfg.has("grid.ny");
  s.grid.validate();
  s.bc.hot_value = cfg.get_double("hot", 1.0);
  s.bc.cold_value = cfg.get_double("cold", 0.0);
  s.bc.validate();

  s.solver.method = parse_method(cfg.get_string("solver.method", "sor"));
  s.solver.omega = cfg.get_double("solver.omega", 1.9);
  s.solver.tolerance = cfg.get_double("solver.tolerance", 1e-8);
  s.solver.max_iterations = cfg.get_long("solver.max_iterations", 200000);
  s.solver.validate();

  s.case_id = static_cast<int>(cfg.get_long("case", 1));
  s.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 0));
  s.out_dir = cfg.get_string("out_dir", "out");
  s.backend = cfg.get_string("backend", "oracle");
  if (s.backend != "oracle" && s.backend != "surrogate")
    throw ConfigError("backend", "backend must be 'oracle' or 'surrogate', got '" + s.backend +
                                     "'");
  s.checkpoint = cfg.get_string("checkpoint", "");
  if (cfg.has("width")) s.width = static_cast<int>(cfg.get_long("width", 0));
  s.path_a = cfg.get_string("a", "");
  s.path_b = cfg.get_string("b", "");
  s.path_mask = cfg.get_string("mask", "");
  s.threads = static_cast<int>(cfg.get_long("threads", 0));

  s.batch = cfg.get_long("train.batch", 10);
  s.epochs = cfg.get_long("train.epochs", 3000);
  s.lr = cfg.get_double("train.lr", 0.001);
  s.history_every = cfg.get_long("train.history_every", 1);
  s.checkpoint_every = cfg.get_long("train.checkpoint_every", 0);
  s.fixed_layout = cfg.get_bool("train.fixed_layout", false);
  s.depth_given = cfg.has("train.depth");
  s.net.depth = static_cast<int>(cfg.get_long("train.depth", default_depth(s.grid)));
  s.net.base_channels = cfg.get_long("train.base_channels", 8);
  s.net.channel_cap = cfg.get_long("train.channel_cap", 256);
  s.net.dropout = cfg.get_double("train.dropout", 0.0);
  s.net.batchnorm = cfg.get_bool("train.batchnorm", true);
  s.net.validate();

  s.swarm.particles = static_cast<int>(cfg.get_long("swarm.particles", 10));
  s.swarm.iterations = cfg.get_long("swarm.iterations", 100);
  s.swarm.inertia = cfg.get_double("swarm.inertia", 0.729);
  s.swarm.cognitive = cfg.get_double("swarm.cognitive", 1.49445);
  s.swarm.social = cfg.get_double("swarm.social", 1.49445);
  s.swarm.quantize_moves = cfg.get_bool("swarm.quantize_moves", false);
  s.swarm.seed = s.seed;
  s.swarm.validate();
  return s;
}

json grid_json(const GridSpec& g) { return json{{"nx", g.nx}, {"ny", g.ny}}; }

json bc_json(const BoundaryCondition& bc) {
  return json{{"hot", bc.hot_value}, {"cold", bc.cold_value}};
}

json layout_json(const LayoutSpec& layout) {
  json holes = json::array();
  for (const HoleSpec& h : layout.holes)
    holes.push_back(json{{"cx", h.cx}, {"cy", h.cy}, {"w", h.w}, {"h", h.h}});
  return holes;
}

json solver_json(const SolverConfig& c) {
  return json{{"method", method_name(c.method)},
              {"omega", c.omega},
              {"tolerance", c.tolerance},
              {"max_iterations", c.max_iterations}};
}

// wall time and timestamps live here and only here; reproducibility
// comparisons drop this object
json meta_json(double wall_seconds) {
  char stamp[32] = {0};
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return json{{"wall_seconds", wall_seconds}, {"written_at", stamp}};
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed while writing " + path.string());
}

struct ResidualStats {
  double rms = 0.0;
  double max_abs = 0.0;
  double hole_adjacent_rms = 0.0;
  double hole_adjacent_max_abs = 0.0;
  long hole_adjacent_count = 0;
};

// Laplace-residual summary; hole-adjacent cells are tallied separately since
// they are where surrogate errors concentrate.
ResidualStats residual_stats(const ResidualField& res, const Mask& mask) {
  ResidualStats st;
  st.rms = rms_residual(res);
  st.max_abs = res.values.abs().maxCoeff();
  const BoolArray adjacent = hole_adjacent_cells(mask);
  double sq = 0.0;
  for (int y = 0; y < mask.grid.ny; ++y)
    for (int x = 0; x < mask.grid.nx; ++x) {
      if (!adjacent(y, x) || !res.valid(y, x)) continue;
      const double v = res.values(y, x);
      sq += v * v;
      st.hole_adjacent_max_abs = std::max(st.hole_adjacent_max_abs, std::abs(v));
      ++st.hole_adjacent_count;
    }
  if (st.hole_adjacent_count > 0)
    st.hole_adjacent_rms = std::sqrt(sq / static_cast<double>(st.hole_adjacent_count));
  return st;
}

json residual_json(const ResidualStats& st) {
  return json{{"rms", st.rms},
              {"max_abs", st.max_abs},
              {"hole_adjacent_rms", st.hole_adjacent_rms},
              {"hole_adjacent_max_abs", st.hole_adjacent_max_abs},
              {"hole_adjacent_count", st.hole_adjacent_count}};
}

LayoutSpec layout_for(const Settings& s, const CaseSpec& c) {
  if (s.width) {
    if (!c.variable_size)
      throw ConfigError("width", "only study case 1 has a free hole width");
    if (*s.width < 1) throw ConfigError("width", "width must be positive");
    LayoutSpec layout;
    layout.holes.push_back({c.center_x, c.center_y, *s.width, derived_height(c.area, *s.width)});
    return layout;
  }
  return c.initial_layout();
}

void write_field_files(const TemperatureField& field, const Mask& mask,
                       const BoundaryCondition& bc, const fs::path& dir) {
  write_csv(field.values, (dir / "field.csv").string());
  write_pgm(field, (dir / "field.pgm").string(), bc);
  const ResidualField res = physics_residual(field, mask);
  write_csv(res.values, (dir / "residual.csv").string());
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_solve(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const CaseSpec c = CaseSpec::builtin(s.case_id, s.grid);
  const LayoutSpec layout = layout_for(s, c);
  const Mask mask = build_mask(layout, s.grid);
  const SolveResult solved = solve_steady(mask, s.bc, s.solver);

  const fs::path dir(s.out_dir);
  write_field_files(solved.field, mask, s.bc, dir);
  const ResidualStats st = residual_stats(physics_residual(solved.field, mask), mask);

  json j;
  j["command"] = "solve";
  j["case"] = s.case_id;
  j["grid"] = grid_json(s.grid);
  j["bc"] = bc_json(s.bc);
  j["layout"] = layout_json(layout);
  j["solver"] = solver_json(s.solver);
  j["stats"] = json{{"converged", solved.stats.converged},
                    {"iterations", solved.stats.iterations},
                    {"final_residual", solved.stats.final_residual},
                    {"final_update", solved.stats.final_update}};
  j["mean_temperature"] = mean_temperature(solved.field, mask);
  j["residual"] = residual_json(st);
  j["meta"] = meta_json(seconds_since(t0));
  write_json_file(j, dir / "result.json");
  std::cout << "solved in " << solved.stats.iterations << " iterations, mean temperature "
            << j["mean_temperature"].get<double>() << '\n';
  return 0;
}

int cmd_train(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainingConfig tc;
  tc.training_case = CaseSpec::builtin(s.case_id, s.grid);
  tc.net = s.net;
  tc.batch = s.batch;
  tc.epochs = s.epochs;
  tc.lr = s.lr;
  tc.seed = s.seed;
  tc.history_every = s.history_every;
  tc.checkpoint_every = s.checkpoint_every;
  tc.fixed_layout = s.fixed_layout;
  tc.bc = s.bc;
  const fs::path dir(s.out_dir);
  tc.checkpoint_path = (dir / "checkpoint.bin").string();
  tc.log = &std::cout;

  const TrainingRun run = train(tc);
  run.history.write_csv((dir / "history.csv").string());

  json j;
  j["command"] = "train";
  j["case"] = s.case_id;
  j["grid"] = grid_json(s.grid);
  j["bc"] = bc_json(s.bc);
  j["net"] = json{{"depth", s.net.depth},
                  {"base_channels", s.net.base_channels},
                  {"channel_cap", s.net.channel_cap},
                  {"dropout", s.net.dropout},
                  {"batchnorm", s.net.batchnorm}};
  j["batch"] = s.batch;
  j["epochs"] = s.epochs;
  j["lr"] = s.lr;
  j["seed"] = s.seed;
  j["fixed_layout"] = s.fixed_layout;
  j["parameter_count"] = run.params.parameter_count();
  if (run.history.entries.empty()) {
    j["epoch1_loss"] = nullptr;
    j["final_loss"] = nullptr;
    j["loss_ratio"] = nullptr;
  } else {
    const double first = run.history.entries.front().loss;
    const double last = run.history.entries.back().loss;
    j["epoch1_loss"] = first;
    j["final_loss"] = last;
    j["loss_ratio"] = first > 0.0 ? last / first : 0.0;
  }
  j["files"] = json{{"checkpoint", "checkpoint.bin"}, {"history", "history.csv"}};
  j["meta"] = meta_json(seconds_since(t0));
  write_json_file(j, dir / "result.json");
  return 0;
}

int cmd_predict(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  if (s.checkpoint.empty())
    throw MissingArtifactError("predict needs --checkpoint (or `checkpoint =` in the config)");
  const LoadedCheckpoint ck = load_checkpoint(s.checkpoint);
  if (s.grid_given && !(s.grid == ck.grid))
    throw DimensionError("requested grid " + std::to_string(s.grid.nx) + "x" +
                         std::to_string(s.grid.ny) + " does not match checkpoint grid " +
                         std::to_string(ck.grid.nx) + "x" + std::to_string(ck.grid.ny));

  const CaseSpec c = CaseSpec::builtin(s.case_id, ck.grid);
  const LayoutSpec layout = layout_for(s, c);
  const Mask mask = build_mask(layout, ck.grid);
  const TemperatureField field = predict(ck.params, layout, ck.grid, s.bc);

  const fs::path dir(s.out_dir);
  write_field_files(field, mask, s.bc, dir);
  const ResidualStats st = residual_stats(physics_residual(field, mask), mask);

  json j;
  j["command"] = "predict";
  j["case"] = s.case_id;
  j["grid"] = grid_json(ck.grid);
  j["bc"] = bc_json(s.bc);
  j["layout"] = layout_json(layout);
  j["checkpoint"] = s.checkpoint;
  j["mean_temperature"] = mean_temperature(field, mask);
  j["residual"] = residual_json(st);
  j["meta"] = meta_json(seconds_since(t0));
  write_json_file(j, dir / "result.json");
  std::cout << "predicted mean temperature " << j["mean_temperature"].get<double>() << '\n';
  return 0;
}

int cmd_optimize(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const CaseSpec c = CaseSpec::builtin(s.case_id, s.grid);
  const fs::path dir(s.out_dir);

  std::optional<LoadedCheckpoint> ck;
  Objective objective = [&] {
    if (s.backend == "surrogate") {
      if (s.checkpoint.empty())
        throw MissingArtifactError(
            "surrogate backend needs --checkpoint (or `checkpoint =` in the config)");
      ck = load_checkpoint(s.checkpoint);
      if (!(ck->grid == c.grid))
        throw DimensionError("checkpoint grid " + std::to_string(ck->grid.nx) + "x" +
                             std::to_string(ck->grid.ny) + " does not match case grid " +
                             std::to_string(c.grid.nx) + "x" + std::to_string(c.grid.ny));
      return Objective::surrogate(c, &ck->params, s.bc);
    }
    return Objective::oracle(c, s.solver, s.bc);
  }();

  SwarmConfig sc = s.swarm;
  sc.seed = s.seed;

  std::vector<double> trace;
  OptimizationResult result;
  try {
    result = optimize(objective, sc, &trace);
  } catch (const Error&) {
    json j;  // keep what the aborted run learned
    j["command"] = "optimize";
    j["case"] = s.case_id;
    j["backend"] = s.backend;
    j["trace"] = trace;
    j["seed"] = s.seed;
    j["aborted"] = true;
    j["meta"] = meta_json(seconds_since(t0));
    write_json_file(j, dir / "result.json");
    throw;
  }

  const Mask best_mask = build_mask(result.best_layout, c.grid);
  const TemperatureField best_field =
      s.backend == "surrogate" ? predict(ck->params, result.best_layout, c.grid, s.bc)
                               : solve_steady(best_mask, s.bc, s.solver).field;
  write_field_files(best_field, best_mask, s.bc, dir);

  json j;
  j["command"] = "optimize";
  j["case"] = s.case_id;
  j["grid"] = grid_json(s.grid);
  j["bc"] = bc_json(s.bc);
  j["backend"] = s.backend;
  if (s.backend == "oracle") j["solver"] = solver_json(s.solver);
  j["swarm"] = json{{"particles", sc.particles},
                    {"iterations", sc.iterations},
                    {"inertia", sc.inertia},
                    {"cognitive", sc.cognitive},
                    {"social", sc.social},
                    {"quantize_moves", sc.quantize_moves}};
  j["best_layout"] = layout_json(result.best_layout);
  j["best_value"] = result.best_value;
  j["trace"] = result.trace;
  j["seed"] = result.seed;
  j["evaluations"] = result.evaluations;
  j["meta"] = meta_json(seconds_since(t0));
  write_json_file(j, dir / "result.json");
  std::cout << "best layout " << j["best_layout"].dump() << " mean temperature "
            << result.best_value << '\n';
  return 0;
}

int cmd_compare(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  if (s.path_a.empty() || s.path_b.empty())
    throw ConfigError("a", "compare needs --a and --b field CSV paths");
  const TemperatureField a = read_field_csv(s.path_a);
  const TemperatureField b = read_field_csv(s.path_b);
  Mask mask;
  if (s.path_mask.empty()) {
    mask = Mask{a.grid, FieldArray::Ones(a.grid.ny, a.grid.nx)};
  } else {
    mask = read_mask_csv(s.path_mask);
  }

  const ComparisonReport report = compare(a, b, mask);
  std::cout << summary_table(report, "a", "b");

  const fs::path dir(s.out_dir);
  const FieldArray diff = difference_field(a, b);
  write_csv(diff, (dir / "field.csv").string());
  write_pgm(diff, (dir / "field.pgm").string(), diff.minCoeff(), diff.maxCoeff());

  json squares = json::array();
  for (const SamplingSquare& sq : report.squares)
    squares.push_back(json{{"cx", sq.cx}, {"cy", sq.cy}, {"side", sq.side}});
  json j;
  j["command"] = "compare";
  j["inputs"] = json{{"a", s.path_a}, {"b", s.path_b}, {"mask", s.path_mask}};
  j["squares"] = squares;
  j["square_mean_a"] = report.square_mean_a;
  j["square_mean_b"] = report.square_mean_b;
  j["square_abs_diff"] = report.square_abs_diff;
  j["global_mae"] = report.global_mae;
  j["global_max_abs"] = report.global_max_abs;
  j["mean_temperature_a"] = report.mean_temperature_a;
  j["mean_temperature_b"] = report.mean_temperature_b;
  j["meta"] = meta_json(seconds_since(t0));
  write_json_file(j, dir / "report.json");
  return 0;
}

struct Binding {
  CLI::App* cmd = nullptr;
  std::vector<std::pair<CLI::Option*, std::string>> options;
  std::string config_path;

  void opt(const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(cmd->add_option(flag, help), key);
  }
  void flag(const std::string& flag_name, const std::string& key, const std::string& help) {
    options.emplace_back(cmd->add_flag(flag_name, help), key);
  }
};

void add_common(Binding& b) {
  b.cmd->add_option("--config", b.config_path, "key = value config file");
  b.opt("--seed", "seed", "master random seed");
  b.opt("--out-dir", "out_dir", "output directory (default: out)");
  b.opt("--threads", "threads", "worker thread cap");
}

void add_grid(Binding& b) {
  b.opt("--nx", "grid.nx", "grid cells in x");
  b.opt("--ny", "grid.ny", "grid cells in y");
  b.opt("--hot", "hot", "hot-edge temperature (default 1)");
  b.opt("--cold", "cold", "cold-edge temperature (default 0)");
}

void add_solver(Binding& b) {
  b.opt("--method", "solver.method", "iterative method: sor or jacobi");
  b.opt("--omega", "solver.omega", "SOR relaxation factor");
  b.opt("--tolerance", "solver.tolerance", "update tolerance per sweep");
  b.opt("--max-iterations", "solver.max_iterations", "iteration cap");
}

void add_case(Binding& b) {
  b.opt("--case", "case", "study case 1, 2 or 3");
  b.opt("--width", "width", "case-1 hole width (height follows from the fixed area)");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"data-free surrogate training and layout optimization for plate heat conduction"};
  app.require_subcommand(1);

  Binding solve_b, train_b, predict_b, optimize_b, compare_b;

  solve_b.cmd = app.add_subcommand("solve", "solve one layout with the finite-difference oracle");
  add_common(solve_b);
  add_grid(solve_b);
  add_solver(solve_b);
  add_case(solve_b);

  train_b.cmd = app.add_subcommand("train", "train the surrogate on random layouts");
  add_common(train_b);
  add_grid(train_b);
  add_case(train_b);
  train_b.opt("--epochs", "train.epochs", "training epochs");
  train_b.opt("--batch", "train.batch", "layouts per batch");
  train_b.opt("--lr", "train.lr", "Adam learning rate");
  train_b.opt("--depth", "train.depth", "encoder depth");
  train_b.opt("--base-channels", "train.base_channels", "channels of the first encoder block");
  train_b.opt("--channel-cap", "train.channel_cap", "channel ceiling");
  train_b.opt("--dropout", "train.dropout", "dropout probability");
  train_b.opt("--batchnorm", "train.batchnorm", "enable batch normalization (true/false)");
  train_b.opt("--history-every", "train.history_every", "history logging cadence");
  train_b.opt("--checkpoint-every", "train.checkpoint_every", "checkpoint cadence (0: final only)");
  train_b.flag("--fixed-layout", "train.fixed_layout", "train on the case's initial layout only");

  predict_b.cmd = app.add_subcommand("predict", "run a trained surrogate on one layout");
  add_common(predict_b);
  add_grid(predict_b);
  add_case(predict_b);
  predict_b.opt("--checkpoint", "checkpoint", "trained checkpoint path");

  optimize_b.cmd = app.add_subcommand("optimize", "particle-swarm search over hole layouts");
  add_common(optimize_b);
  add_grid(optimize_b);
  add_solver(optimize_b);
  add_case(optimize_b);
  optimize_b.opt("--backend", "backend", "objective backend: oracle or surrogate");
  optimize_b.opt("--checkpoint", "checkpoint", "checkpoint for the surrogate backend");
  optimize_b.opt("--iterations", "swarm.iterations", "swarm iterations");
  optimize_b.opt("--particles", "swarm.particles", "swarm size");
  optimize_b.flag("--quantize-moves", "swarm.quantize_moves",
                  "snap moves to the 1/5/10-pixel quanta");

  compare_b.cmd = app.add_subcommand("compare", "compare two field CSVs");
  add_common(compare_b);
  compare_b.opt("--a", "a", "first field CSV");
  compare_b.opt("--b", "b", "second field CSV");
  compare_b.opt("--mask", "mask", "mask CSV (optional; all material if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are configuration errors
  }

  for (Binding* b : {&solve_b, &train_b, &predict_b, &optimize_b, &compare_b}) {
    if (!b->cmd->parsed()) continue;
    RawConfig merged;
    if (!b->config_path.empty()) merged = parse_config_file(b->config_path);
    for (const auto& [option, key] : b->options) {
      if (option->count() == 0) continue;
      const auto& results = option->results();
      merged.values[key] = results.empty() ? "true" : results.back();
    }
    const Settings s = resolve(merged);
#ifdef HEATOPT_HAVE_OPENMP
    if (s.threads > 0) omp_set_num_threads(s.threads);
#endif
    fs::create_directories(s.out_dir);
    if (b == &solve_b) return cmd_solve(s);
    if (b == &train_b) return cmd_train(s);
    if (b == &predict_b) return cmd_predict(s);
    if (b == &optimize_b) return cmd_optimize(s);
    return cmd_compare(s);
  }
  return 2;
}

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.key << "]: " << e.what() << '\n';
    return 2;
  } catch (const InvalidLayoutError& e) {
    std::cerr << "layout error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver failed: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return 4;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return 5;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 5;
  } catch (const DimensionError& e) {
    std::cerr << "shape mismatch: " << e.what() << '\n';
    return 6;
  } catch (const SizeError& e) {
    std::cerr << "size limit: " << e.what() << '\n';
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
