#pragma once

#include <Eigen/Dense>

#include "heatopt/field.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

// Finite-difference convolution kernels. The matrices are written with the
// row index running along y (downward) and the column index along x, so the
// y-direction kernels carry the literal weight matrices and the x-direction
// kernels are their transposes.
namespace stencil {

inline Eigen::Matrix3d first_derivative_y() {
  Eigen::Matrix3d k;
  k << 0, -0.5, 0, 0, 0, 0, 0, 0.5, 0;
  return k;
}

inline Eigen::Matrix3d first_derivative_x() { return first_derivative_y().transpose(); }

inline Eigen::Matrix3d second_derivative_y() {
  Eigen::Matrix3d k;
  k << 0, 1, 0, 0, -2, 0, 0, 1, 0;
  return k;
}

inline Eigen::Matrix3d second_derivative_x() { return second_derivative_y().transpose(); }

}  // namespace stencil

// Laplace residual with a validity mask; values at invalid cells are 0.
struct ResidualField {
  GridSpec grid;
  FieldArray values;
  BoolArray valid;

  long valid_count() const { return static_cast<long>(valid.count()); }
};

// 3x3 cross-correlation over interior cells; the 1-pixel border of the
// result is zero. out(y, x) = sum_{r,c} k(r, c) * f(y + r - 1, x + c - 1).
FieldArray apply_kernel3(const FieldArray& f, const Eigen::Matrix3d& k);

// Five-point Laplacian (unit spacing) on interior cells, border invalid.
ResidualField laplacian(const TemperatureField& field);

// Laplacian restricted to interior material cells. Hole-adjacent cells stay
// valid; the hole cells themselves do not.
ResidualField physics_residual(const TemperatureField& field, const Mask& mask);

// Five-point stencil applied at every cell with zero extension outside the
// grid. The stencil is symmetric, so this is also its adjoint — the training
// backward pass pushes residual gradients through it.
FieldArray laplacian_zero_padded(const FieldArray& f);

// Mean squared residual over valid cells.
Scalar physics_loss(const ResidualField& residual);

inline Scalar rms_residual(const ResidualField& residual) {
  return std::sqrt(physics_loss(residual));
}

// Mean absolute difference over all cells; validation metric only.
Scalar data_loss(const TemperatureField& pred, const TemperatureField& truth);

// Material cells with at least one hole cell in their 4-neighborhood.
BoolArray hole_adjacent_cells(const Mask& mask);

}  // namespace heatopt
