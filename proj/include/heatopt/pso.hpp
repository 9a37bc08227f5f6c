#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heatopt/fdm.hpp"
#include "heatopt/field.hpp"
#include "heatopt/network.hpp"
#include "heatopt/rng.hpp"

namespace heatopt {

struct SwarmConfig {
  int particles = 10;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  long iterations = 100;
  std::uint64_t seed = 0;
  // Snap velocities to the move quanta {0, ±1, ±5, ±10} instead of taking
  // continuous steps.
  bool quantize_moves = false;

  void validate() const {
    if (particles < 1) throw ConfigError("swarm.particles", "need at least one particle");
    if (!(inertia > 0.0 && inertia < 1.0))
      throw ConfigError("swarm.inertia", "inertia must be in (0, 1)");
    if (!(cognitive > 0.0) || !(social > 0.0))
      throw ConfigError("swarm.cognitive", "acceleration coefficients must be positive");
    if (iterations < 0) throw ConfigError("swarm.iterations", "iterations must be non-negative");
  }
};

struct Bounds {
  Eigen::ArrayXd lo, hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  // per-dimension velocity cap: half the parameter range
  Eigen::ArrayXd velocity_cap() const { return 0.5 * (hi - lo); }
};

struct Particle {
  Eigen::ArrayXd position;
  Eigen::ArrayXd velocity;
  Eigen::ArrayXd best_position;
  double best_value = 0.0;
};

struct Swarm {
  std::vector<Particle> particles;
  Eigen::ArrayXd best_position;
  double best_value = 0.0;
  long iteration = 0;
};

using ObjectiveFn = std::function<double(const Eigen::ArrayXd&)>;

// Uniform population within bounds (particle 0 may be pinned to `seed_position`),
// zero initial velocities, bests from a first evaluation sweep.
Swarm init_swarm(const Bounds& bounds, const ObjectiveFn& f, const SwarmConfig& cfg, Rng& rng,
                 const std::optional<Eigen::ArrayXd>& seed_position = std::nullopt);

// One synchronous update of every particle; bests reduce in particle-index
// order so results do not depend on evaluation scheduling.
void step_swarm(Swarm& swarm, const Bounds& bounds, const ObjectiveFn& f, const SwarmConfig& cfg,
                Rng& rng);

// --- layout-parameter space ---------------------------------------------

// case 1: [width]; cases 2-3: per hole (cx offset, cy offset) from the case center
Eigen::ArrayXd encode(const LayoutSpec& layout, const CaseSpec& c);
// rounds to integer pixels, clamps to the case bounds, derives the case-1
// height from the fixed area
LayoutSpec decode(const Eigen::ArrayXd& position, const CaseSpec& c);
Bounds case_bounds(const CaseSpec& c);

// Mean plate temperature of a layout, computed by the FDM oracle or by a
// trained surrogate. Evaluations are memoized on the decoded integer layout.
class Objective {
 public:
  static Objective oracle(const CaseSpec& c, const SolverConfig& solver,
                          const BoundaryCondition& bc = {});
  static Objective surrogate(const CaseSpec& c, const NetworkParams* net,
                             const BoundaryCondition& bc = {});

  double evaluate(const LayoutSpec& layout) const;
  double operator()(const Eigen::ArrayXd& position) const;

  const CaseSpec& study_case() const { return case_; }
  std::string backend_name() const { return net_ ? "surrogate" : "oracle"; }
  long evaluation_count() const { return evaluations_; }

 private:
  CaseSpec case_;
  SolverConfig solver_;
  BoundaryCondition bc_;
  const NetworkParams* net_ = nullptr;
  mutable std::map<std::vector<int>, double> memo_;
  mutable long evaluations_ = 0;
};

struct OptimizationResult {
  LayoutSpec best_layout;
  double best_value = 0.0;
  std::vector<double> trace;  // global best value; first entry precedes the first step
  std::uint64_t seed = 0;
  long evaluations = 0;
};

// Full PSO run; particle 0 starts at the case's initial layout so the trace
// begins at or below the unoptimized baseline. `partial_trace` (optional) is
// filled as iterations complete and survives a backend failure.
OptimizationResult optimize(const Objective& objective, const SwarmConfig& cfg,
                            std::vector<double>* partial_trace = nullptr);

}  // namespace heatopt
