#pragma once

#include "heatopt/field.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

struct SolverConfig {
  enum class Method { jacobi, sor };

  Method method = Method::sor;
  double omega = 1.9;             // SOR relaxation factor
  long max_iterations = 200000;
  double tolerance = 1e-8;        // max absolute update per sweep

  void validate() const {
    if (method == Method::sor && !(omega > 0.0 && omega < 2.0))
      throw ConfigError("solver.omega", "SOR requires 0 < omega < 2");
    if (!(tolerance > 0.0)) throw ConfigError("solver.tolerance", "tolerance must be positive");
    if (max_iterations < 1)
      throw ConfigError("solver.max_iterations", "max_iterations must be at least 1");
  }
};

SolverConfig::Method parse_method(const std::string& name);
std::string method_name(SolverConfig::Method m);

struct SolveStats {
  bool converged = false;
  long iterations = 0;
  double final_residual = 0.0;  // max-abs 5-point residual over unknown cells
  double final_update = 0.0;    // max-abs update of the last sweep
};

struct SolveResult {
  TemperatureField field;
  SolveStats stats;
};

// Iterative solve of the 5-point discrete Laplace problem. Hole cells and
// the boundary ring are Dirichlet data, everything else is unknown.
// Throws ConvergenceError when max_iterations is exhausted.
SolveResult solve_steady(const Mask& mask, const BoundaryCondition& bc, const SolverConfig& cfg);

// Exact solve of the same system by dense LU with partial pivoting.
// Unknown count is capped at 4096 (dense assembly). Test oracle.
TemperatureField direct_solve_small(const Mask& mask, const BoundaryCondition& bc);

}  // namespace heatopt
