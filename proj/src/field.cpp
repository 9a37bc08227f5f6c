#include "heatopt/field.hpp"

#include <algorithm>
#include <string>

namespace heatopt {

HoleRect clamp_hole(const HoleSpec& hole, const GridSpec& grid) {
  grid.validate();
  if (hole.w < 1 || hole.h < 1)
    throw InvalidLayoutError("hole side lengths must be positive, got " + std::to_string(hole.w) +
                             "x" + std::to_string(hole.h));
  // Interior is [1, nx-2] x [1, ny-2]; the 1-pixel boundary ring is Dirichlet.
  // w spans y and h spans x (the w x h notation is vertical x horizontal).
  if (hole.h > grid.nx - 2 || hole.w > grid.ny - 2)
    throw InvalidLayoutError("hole " + std::to_string(hole.w) + "x" + std::to_string(hole.h) +
                             " cannot fit inside the interior of a " + std::to_string(grid.nx) +
                             "x" + std::to_string(grid.ny) + " grid");
  HoleRect r;
  r.w = hole.w;
  r.h = hole.h;
  r.x0 = std::clamp(hole.cx - hole.h / 2, 1, grid.nx - 1 - hole.h);
  r.y0 = std::clamp(hole.cy - hole.w / 2, 1, grid.ny - 1 - hole.w);
  return r;
}

Mask build_mask(const LayoutSpec& layout, const GridSpec& grid) {
  grid.validate();
  Mask m{grid, FieldArray::Ones(grid.ny, grid.nx)};
  for (const HoleSpec& hole : layout.holes) {
    const HoleRect r = clamp_hole(hole, grid);
    m.values.block(r.y0, r.x0, r.w, r.h).setZero();  // overlapping holes union
  }
  return m;
}

void apply_dirichlet_inplace(Eigen::Ref<FieldArray> values, const FieldArray& mask,
                             const BoundaryCondition& bc) {
  const Eigen::Index ny = values.rows();
  const Eigen::Index nx = values.cols();
  values = mask * values + (1.0 - mask) * bc.cold_value;  // hole cells pinned cold
  values.row(0).setConstant(bc.cold_value);
  values.row(ny - 1).setConstant(bc.cold_value);
  values.col(nx - 1).setConstant(bc.cold_value);
  values.col(0).setConstant(bc.hot_value);  // heat source edge
}

TemperatureField apply_dirichlet(TemperatureField field, const Mask& mask,
                                 const BoundaryCondition& bc) {
  require_same_grid(field.grid, mask.grid, "apply_dirichlet");
  bc.validate();
  apply_dirichlet_inplace(field.values, mask.values, bc);
  return field;
}

Scalar mean_temperature(const TemperatureField& field, const Mask& mask) {
  require_same_grid(field.grid, mask.grid, "mean_temperature");
  const Scalar material = mask.values.sum();
  if (material <= 0.0) throw EmptyDomainError("mean_temperature: mask has no material cells");
  return (field.values * mask.values).sum() / material;
}

CaseSpec CaseSpec::builtin(int case_id) { return builtin(case_id, GridSpec{128, 128}); }

CaseSpec CaseSpec::builtin(int case_id, const GridSpec& grid) {
  grid.validate();
  CaseSpec c;
  c.case_id = case_id;
  c.grid = grid;
  c.center_x = grid.nx / 2;
  c.center_y = grid.ny / 2;
  switch (case_id) {
    case 1:
      c.hole_count = 1;
      c.variable_size = true;
      c.area = 400;
      c.side_min = 5;
      c.side_max = 80;
      break;
    case 2:
      c.hole_count = 2;
      c.variable_size = false;
      c.hole_w = 20;
      c.hole_h = 10;
      c.offset_range = 10;
      break;
    case 3:
      c.hole_count = 4;
      c.variable_size = false;
      c.hole_w = 10;
      c.hole_h = 10;
      c.offset_range = 20;
      break;
    default:
      throw ConfigError("case", "unknown study case " + std::to_string(case_id));
  }
  // Off the 128x128 reference grid the side range shrinks so holes stay
  // interior: w (vertical) must fit in y, the derived h (horizontal) in x.
  if (c.variable_size) {
    c.side_max = std::min(c.side_max, grid.ny - 2);
    while (c.side_min <= c.side_max && derived_height(c.area, c.side_min) > grid.nx - 2)
      ++c.side_min;
  }
  c.validate();
  return c;
}

void CaseSpec::validate() const {
  grid.validate();
  if (hole_count < 1) throw ConfigError("case", "case needs at least one hole");
  if (variable_size) {
    if (side_min < 1 || side_max < side_min)
      throw ConfigError("case", "invalid side range [" + std::to_string(side_min) + ", " +
                                    std::to_string(side_max) + "]");
  } else if (hole_w < 1 || hole_h < 1 || offset_range < 0) {
    throw ConfigError("case", "invalid fixed-size hole parameters");
  }
}

LayoutSpec CaseSpec::initial_layout() const {
  LayoutSpec layout;
  if (variable_size) {
    const int w = 20;  // square start: 400 = 20 x 20
    layout.holes.push_back({center_x, center_y, w, derived_height(area, w)});
  } else {
    for (int i = 0; i < hole_count; ++i)
      layout.holes.push_back({center_x, center_y, hole_w, hole_h});
  }
  return layout;
}

LayoutSpec random_layout(const CaseSpec& c, Rng& rng) {
  c.validate();
  LayoutSpec layout;
  if (c.variable_size) {
    const int w = static_cast<int>(rng.uniform_int(c.side_min, c.side_max));
    layout.holes.push_back({c.center_x, c.center_y, w, derived_height(c.area, w)});
  } else {
    for (int i = 0; i < c.hole_count; ++i) {
      const int cx = c.center_x + static_cast<int>(rng.uniform_int(-c.offset_range, c.offset_range));
      const int cy = c.center_y + static_cast<int>(rng.uniform_int(-c.offset_range, c.offset_range));
      layout.holes.push_back({cx, cy, c.hole_w, c.hole_h});
    }
  }
  return layout;
}

}  // namespace heatopt
