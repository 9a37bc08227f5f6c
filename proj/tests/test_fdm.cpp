#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "heatopt/fdm.hpp"
#include "heatopt/field.hpp"
#include "heatopt/rng.hpp"
#include "heatopt/stencil.hpp"

using namespace heatopt;

namespace {

SolverConfig tight_sor() {
  SolverConfig c;
  c.tolerance = 1e-10;
  return c;
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.omega = 2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.omega = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_method("sor") == SolverConfig::Method::sor);
  CHECK(parse_method("jacobi") == SolverConfig::Method::jacobi);
  CHECK_THROWS_AS(parse_method("gauss"), ConfigError);
}

TEST_CASE("hot == cold gives the zero field immediately") {
  const GridSpec g{16, 16};
  const Mask m = build_mask(LayoutSpec{{{8, 8, 4, 4}}}, g);
  const SolveResult r = solve_steady(m, BoundaryCondition{0.0, 0.0}, SolverConfig{});
  CHECK(r.stats.converged);
  CHECK(r.field.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("iterative solution matches the direct solve without holes") {
  const GridSpec g{16, 16};
  const Mask none = build_mask(LayoutSpec{}, g);
  const BoundaryCondition bc;
  const TemperatureField direct = direct_solve_small(none, bc);
  const SolveResult sor = solve_steady(none, bc, tight_sor());
  CHECK(sor.stats.converged);
  CHECK((sor.field.values - direct.values).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("iterative solution matches the direct solve across random layouts") {
  const GridSpec g{32, 32};
  const BoundaryCondition bc;
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    LayoutSpec layout;
    const int holes = 1 + static_cast<int>(rng.uniform_int(0, 2));
    for (int i = 0; i < holes; ++i)
      layout.holes.push_back({static_cast<int>(rng.uniform_int(4, 28)),
                              static_cast<int>(rng.uniform_int(4, 28)),
                              static_cast<int>(rng.uniform_int(2, 8)),
                              static_cast<int>(rng.uniform_int(2, 8))});
    const Mask m = build_mask(layout, g);
    const TemperatureField direct = direct_solve_small(m, bc);
    const SolveResult sor = solve_steady(m, bc, tight_sor());
    CHECK(sor.stats.converged);
    CHECK((sor.field.values - direct.values).abs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("discrete maximum principle and monotone decay from the hot edge") {
  const GridSpec g{24, 24};
  const Mask m = build_mask(LayoutSpec{{{12, 12, 5, 5}}}, g);
  const BoundaryCondition bc;
  const SolveResult r = solve_steady(m, bc, SolverConfig{});

  CHECK(r.field.values.minCoeff() >= bc.cold_value);
  CHECK(r.field.values.maxCoeff() <= bc.hot_value);

  // along a hole-free row the temperature decays monotonically away from
  // the heat source
  const int row = 3;
  for (int x = 1; x < g.nx; ++x) CHECK(r.field.values(row, x) <= r.field.values(row, x - 1));
}

TEST_CASE("solution is mirror-symmetric for a vertically centered layout") {
  const GridSpec g{24, 24};
  const Mask m = build_mask(LayoutSpec{{{12, 12, 8, 6}}}, g);
  const SolveResult r = solve_steady(m, BoundaryCondition{}, tight_sor());
  double worst = 0.0;
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x)
      worst = std::max(worst, std::abs(r.field.values(y, x) - r.field.values(g.ny - 1 - y, x)));
  CHECK(worst <= 1e-6);
}

TEST_CASE("reported residual matches an independent stencil evaluation") {
  const GridSpec g{16, 16};
  const Mask m = build_mask(LayoutSpec{{{8, 8, 4, 4}}}, g);
  const SolveResult r = solve_steady(m, BoundaryCondition{}, SolverConfig{});
  const ResidualField res = physics_residual(r.field, m);
  CHECK(res.values.abs().maxCoeff() == doctest::Approx(r.stats.final_residual).epsilon(1e-12));
  CHECK(r.stats.final_update <= SolverConfig{}.tolerance);
}

TEST_CASE("jacobi agrees with sor") {
  const GridSpec g{16, 16};
  const Mask m = build_mask(LayoutSpec{{{8, 8, 4, 4}}}, g);
  SolverConfig jc;
  jc.method = SolverConfig::Method::jacobi;
  jc.tolerance = 1e-12;
  const SolveResult jac = solve_steady(m, BoundaryCondition{}, jc);
  const SolveResult sor = solve_steady(m, BoundaryCondition{}, tight_sor());
  CHECK(jac.stats.converged);
  CHECK((jac.field.values - sor.field.values).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("non-convergence raises with diagnostics attached") {
  const GridSpec g{32, 32};
  const Mask none = build_mask(LayoutSpec{}, g);
  SolverConfig c;
  c.max_iterations = 3;
  try {
    solve_steady(none, BoundaryCondition{}, c);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations == 3);
    CHECK(e.final_residual > 0.0);
  }
}

TEST_CASE("direct solve refuses oversized systems") {
  const GridSpec g{128, 128};  // 126^2 unknowns, far past the dense limit
  const Mask none = build_mask(LayoutSpec{}, g);
  CHECK_THROWS_AS(direct_solve_small(none, BoundaryCondition{}), SizeError);
}

TEST_CASE("direct solve handles an all-hole interior") {
  const GridSpec g{8, 8};
  const Mask m = build_mask(LayoutSpec{{{4, 4, 6, 6}}}, g);  // every interior cell is hole
  CHECK(m.zero_count() == 36);
  const TemperatureField f = direct_solve_small(m, BoundaryCondition{});
  CHECK((f.values.col(0) == 1.0).all());
  // no unknowns: the field is pure Dirichlet data
  CHECK(f.values(4, 4) == 0.0);
}

TEST_CASE("a thin channel toward the source cools more than a compact hole") {
  // thinnest admissible hole vs the square of equal area, both centered
  const GridSpec g{64, 64};
  const BoundaryCondition bc;
  SolverConfig c;
  const CaseSpec case1 = CaseSpec::builtin(1, g);

  LayoutSpec thin;
  thin.holes.push_back(
      {32, 32, case1.side_min, derived_height(case1.area, case1.side_min)});
  LayoutSpec square;
  square.holes.push_back({32, 32, 20, 20});

  const Mask mt = build_mask(thin, g);
  const Mask ms = build_mask(square, g);
  const double mean_thin = mean_temperature(solve_steady(mt, bc, c).field, mt);
  const double mean_square = mean_temperature(solve_steady(ms, bc, c).field, ms);
  // the long cold boundary running through the hottest band absorbs more heat
  CHECK(mean_thin < mean_square);
}
