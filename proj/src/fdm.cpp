#include "heatopt/fdm.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace heatopt {

SolverConfig::Method parse_method(const std::string& name) {
  if (name == "sor") return SolverConfig::Method::sor;
  if (name == "jacobi") return SolverConfig::Method::jacobi;
  throw ConfigError("solver.method", "unknown method '" + name + "' (expected sor or jacobi)");
}

std::string method_name(SolverConfig::Method m) {
  return m == SolverConfig::Method::sor ? "sor" : "jacobi";
}

namespace {

// Maximum absolute 5-point residual u_N + u_S + u_E + u_W - 4 u_C over unknowns.
double max_residual(const FieldArray& u, const BoolArray& unknown) {
  const auto ny = u.rows();
  const auto nx = u.cols();
  double worst = 0.0;
  for (Eigen::Index y = 1; y + 1 < ny; ++y)
    for (Eigen::Index x = 1; x + 1 < nx; ++x) {
      if (!unknown(y, x)) continue;
      const double r = u(y - 1, x) + u(y + 1, x) + u(y, x - 1) + u(y, x + 1) - 4.0 * u(y, x);
      worst = std::max(worst, std::abs(r));
    }
  return worst;
}

BoolArray unknown_cells(const Mask& mask) {
  const auto ny = mask.grid.ny;
  const auto nx = mask.grid.nx;
  BoolArray unknown = BoolArray::Constant(ny, nx, false);
  for (Eigen::Index y = 1; y + 1 < ny; ++y)
    for (Eigen::Index x = 1; x + 1 < nx; ++x) unknown(y, x) = mask.values(y, x) != 0.0;
  return unknown;
}

}  // namespace

SolveResult solve_steady(const Mask& mask, const BoundaryCondition& bc, const SolverConfig& cfg) {
  cfg.validate();
  mask.grid.validate();
  bc.validate();

  TemperatureField field = TemperatureField::constant(mask.grid, bc.cold_value);
  apply_dirichlet_inplace(field.values, mask.values, bc);
  const BoolArray unknown = unknown_cells(mask);

  FieldArray& u = field.values;
  const auto ny = u.rows();
  const auto nx = u.cols();

  SolveStats stats;
  const bool jacobi = cfg.method == SolverConfig::Method::jacobi;
  FieldArray next;  // only used by Jacobi
  if (jacobi) next = u;

  for (long it = 1; it <= cfg.max_iterations; ++it) {
    double update = 0.0;
    if (jacobi) {
      for (Eigen::Index y = 1; y + 1 < ny; ++y)
        for (Eigen::Index x = 1; x + 1 < nx; ++x) {
          if (!unknown(y, x)) continue;
          const double v = 0.25 * (u(y - 1, x) + u(y + 1, x) + u(y, x - 1) + u(y, x + 1));
          update = std::max(update, std::abs(v - u(y, x)));
          next(y, x) = v;
        }
      for (Eigen::Index y = 1; y + 1 < ny; ++y)
        for (Eigen::Index x = 1; x + 1 < nx; ++x)
          if (unknown(y, x)) u(y, x) = next(y, x);
    } else {
      for (Eigen::Index y = 1; y + 1 < ny; ++y)
        for (Eigen::Index x = 1; x + 1 < nx; ++x) {
          if (!unknown(y, x)) continue;
          const double gs = 0.25 * (u(y - 1, x) + u(y + 1, x) + u(y, x - 1) + u(y, x + 1));
          const double v = u(y, x) + cfg.omega * (gs - u(y, x));
          update = std::max(update, std::abs(v - u(y, x)));
          u(y, x) = v;
        }
    }
    stats.iterations = it;
    stats.final_update = update;
    if (!std::isfinite(update)) throw NumericalError("iterative solve diverged (non-finite update)");
    if (update < cfg.tolerance) {
      stats.converged = true;
      break;
    }
  }

  stats.final_residual = max_residual(u, unknown);
  if (!stats.converged)
    throw ConvergenceError("solver did not converge within " +
                               std::to_string(cfg.max_iterations) + " iterations (residual " +
                               std::to_string(stats.final_residual) + ")",
                           stats.final_residual, stats.iterations);
  return {std::move(field), stats};
}

TemperatureField direct_solve_small(const Mask& mask, const BoundaryCondition& bc) {
  mask.grid.validate();
  bc.validate();

  TemperatureField field = TemperatureField::constant(mask.grid, bc.cold_value);
  apply_dirichlet_inplace(field.values, mask.values, bc);
  const BoolArray unknown = unknown_cells(mask);

  const auto ny = field.values.rows();
  const auto nx = field.values.cols();

  // Index the unknowns lexicographically.
  Eigen::Array<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> id(ny, nx);
  id.setConstant(-1);
  Eigen::Index n = 0;
  for (Eigen::Index y = 0; y < ny; ++y)
    for (Eigen::Index x = 0; x < nx; ++x)
      if (unknown(y, x)) id(y, x) = n++;
  if (n == 0) return field;
  if (n > 4096) throw SizeError("direct solve supports at most 4096 unknowns, got " + std::to_string(n));

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const Eigen::Index dy[4] = {-1, 1, 0, 0};
  const Eigen::Index dx[4] = {0, 0, -1, 1};
  for (Eigen::Index y = 0; y < ny; ++y)
    for (Eigen::Index x = 0; x < nx; ++x) {
      const Eigen::Index row = id(y, x);
      if (row < 0) continue;
      A(row, row) = 4.0;
      for (int k = 0; k < 4; ++k) {
        const Eigen::Index yn = y + dy[k];
        const Eigen::Index xn = x + dx[k];
        const Eigen::Index col = id(yn, xn);
        if (col >= 0)
          A(row, col) = -1.0;
        else
          b(row) += field.values(yn, xn);  // known Dirichlet neighbour
      }
    }

  const Eigen::VectorXd sol = A.partialPivLu().solve(b);
  const double check = (A * sol - b).cwiseAbs().maxCoeff();
  if (!(check < 1e-9)) throw NumericalError("dense solve residual too large: " + std::to_string(check));

  for (Eigen::Index y = 0; y < ny; ++y)
    for (Eigen::Index x = 0; x < nx; ++x)
      if (id(y, x) >= 0) field.values(y, x) = sol(id(y, x));
  return field;
}

}  // namespace heatopt
