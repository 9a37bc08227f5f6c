#include "heatopt/stencil.hpp"

namespace heatopt {

FieldArray apply_kernel3(const FieldArray& f, const Eigen::Matrix3d& k) {
  const Eigen::Index ny = f.rows();
  const Eigen::Index nx = f.cols();
  if (ny < 3 || nx < 3) throw DimensionError("apply_kernel3 needs a grid of at least 3x3");
  FieldArray out = FieldArray::Zero(ny, nx);
  for (Eigen::Index y = 1; y + 1 < ny; ++y)
    for (Eigen::Index x = 1; x + 1 < nx; ++x) {
      Scalar acc = 0.0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) acc += k(r, c) * f(y + r - 1, x + c - 1);
      out(y, x) = acc;
    }
  return out;
}

ResidualField laplacian(const TemperatureField& field) {
  const GridSpec g = field.grid;
  if (g.nx < 3 || g.ny < 3) throw DimensionError("laplacian needs a grid of at least 3x3");
  const FieldArray& f = field.values;
  ResidualField res{g, FieldArray::Zero(g.ny, g.nx), BoolArray::Constant(g.ny, g.nx, false)};
  for (int y = 1; y + 1 < g.ny; ++y)
    for (int x = 1; x + 1 < g.nx; ++x) {
      res.values(y, x) = f(y - 1, x) + f(y + 1, x) + f(y, x - 1) + f(y, x + 1) - 4.0 * f(y, x);
      res.valid(y, x) = true;
    }
  return res;
}

ResidualField physics_residual(const TemperatureField& field, const Mask& mask) {
  require_same_grid(field.grid, mask.grid, "physics_residual");
  ResidualField res = laplacian(field);
  for (int y = 0; y < res.grid.ny; ++y)
    for (int x = 0; x < res.grid.nx; ++x)
      if (res.valid(y, x) && mask.values(y, x) == 0.0) {
        res.valid(y, x) = false;
        res.values(y, x) = 0.0;
      }
  return res;
}

FieldArray laplacian_zero_padded(const FieldArray& f) {
  const Eigen::Index ny = f.rows();
  const Eigen::Index nx = f.cols();
  FieldArray out = -4.0 * f;
  out.topRows(ny - 1) += f.bottomRows(ny - 1);
  out.bottomRows(ny - 1) += f.topRows(ny - 1);
  out.leftCols(nx - 1) += f.rightCols(nx - 1);
  out.rightCols(nx - 1) += f.leftCols(nx - 1);
  return out;
}

Scalar physics_loss(const ResidualField& residual) {
  const long n = residual.valid_count();
  if (n == 0) throw EmptyDomainError("physics_loss: residual has no valid cells");
  return residual.values.square().sum() / static_cast<Scalar>(n);
}

Scalar data_loss(const TemperatureField& pred, const TemperatureField& truth) {
  require_same_grid(pred.grid, truth.grid, "data_loss");
  return (pred.values - truth.values).abs().mean();
}

BoolArray hole_adjacent_cells(const Mask& mask) {
  const GridSpec g = mask.grid;
  BoolArray adj = BoolArray::Constant(g.ny, g.nx, false);
  const FieldArray& m = mask.values;
  for (int y = 1; y + 1 < g.ny; ++y)
    for (int x = 1; x + 1 < g.nx; ++x) {
      if (m(y, x) != 1.0) continue;
      adj(y, x) = m(y - 1, x) == 0.0 || m(y + 1, x) == 0.0 || m(y, x - 1) == 0.0 ||
                  m(y, x + 1) == 0.0;
    }
  return adj;
}

}  // namespace heatopt
