#pragma once

#include <array>
#include <vector>

#include "heatopt/rng.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

struct TemperatureField {
  GridSpec grid;
  FieldArray values;  // ny x nx

  static TemperatureField zeros(const GridSpec& g) {
    g.validate();
    return {g, FieldArray::Zero(g.ny, g.nx)};
  }
  static TemperatureField constant(const GridSpec& g, Scalar c) {
    g.validate();
    return {g, FieldArray::Constant(g.ny, g.nx, c)};
  }
};

struct Mask {
  GridSpec grid;
  FieldArray values;  // exactly 0 (hole) or 1 (material)

  long zero_count() const { return static_cast<long>((values == 0.0).count()); }
};

// Rectangular insulation hole. Center in pixels; the w x h side notation is
// vertical x horizontal: w spans y (rows), h spans x (columns). The optimal
// single hole, reported as 5 x 80, is the thin channel running toward the
// heat-source edge.
struct HoleSpec {
  int cx = 0;
  int cy = 0;
  int w = 0;
  int h = 0;

  bool operator==(const HoleSpec&) const = default;
};

struct LayoutSpec {
  std::vector<HoleSpec> holes;

  bool operator==(const LayoutSpec&) const = default;
};

// Hole rectangle after clamping into the grid interior (1-pixel Dirichlet
// ring stays hole-free). Covers columns [x0, x0+h) and rows [y0, y0+w).
struct HoleRect {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
};

HoleRect clamp_hole(const HoleSpec& hole, const GridSpec& grid);

// Built-in study cases plus the layout-parameter bounds the optimizer uses.
struct CaseSpec {
  int case_id = 1;
  GridSpec grid;
  int hole_count = 1;

  // case 1: width (vertical side) free in [side_min, side_max],
  // height (horizontal side) = round(area / width)
  bool variable_size = true;
  int area = 400;
  int side_min = 5;
  int side_max = 80;

  // cases 2 and 3: fixed sides, centers free within +/- offset_range
  int hole_w = 20;
  int hole_h = 20;
  int center_x = 64;
  int center_y = 64;
  int offset_range = 0;

  std::array<int, 3> move_quanta{1, 5, 10};

  static CaseSpec builtin(int case_id);
  static CaseSpec builtin(int case_id, const GridSpec& grid);

  // coincident / centered configuration every search starts from
  LayoutSpec initial_layout() const;

  // dimension of the optimizer's parameter vector
  int dimension() const { return variable_size ? 1 : 2 * hole_count; }

  void validate() const;
};

Mask build_mask(const LayoutSpec& layout, const GridSpec& grid);

TemperatureField apply_dirichlet(TemperatureField field, const Mask& mask,
                                 const BoundaryCondition& bc);

// In-place worker shared with the training loop; `values` is any ny x nx array.
void apply_dirichlet_inplace(Eigen::Ref<FieldArray> values, const FieldArray& mask,
                             const BoundaryCondition& bc);

// Mean over material (mask-1) cells; holes are excluded.
Scalar mean_temperature(const TemperatureField& field, const Mask& mask);

LayoutSpec random_layout(const CaseSpec& c, Rng& rng);

// round(area / w) in exact integer arithmetic
inline int derived_height(int area, int w) { return (2 * area + w) / (2 * w); }

}  // namespace heatopt
