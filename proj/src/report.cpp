#include "heatopt/report.hpp"

#include <cmath>
#include <cstdio>

namespace heatopt {

std::array<SamplingSquare, 4> default_squares(const GridSpec& grid) {
  grid.validate();
  if (grid.nx < 41 || grid.ny < 41)
    throw SizeError("default sampling squares need a grid of at least 41x41, got " +
                    std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
  const int off = 20;
  return {{{off, off},
           {grid.nx - 1 - off, off},
           {grid.nx - 1 - off, grid.ny - 1 - off},
           {off, grid.ny - 1 - off}}};
}

std::array<Scalar, 4> sampling_square_means(const TemperatureField& field,
                                            const std::array<SamplingSquare, 4>& squares) {
  std::array<Scalar, 4> means{};
  for (std::size_t i = 0; i < squares.size(); ++i) {
    const SamplingSquare& s = squares[i];
    if (s.side < 1) throw SizeError("sampling square side must be positive");
    const int half = s.side / 2;
    const int x0 = s.cx - half;
    const int y0 = s.cy - half;
    if (x0 < 0 || y0 < 0 || x0 + s.side > field.grid.nx || y0 + s.side > field.grid.ny)
      throw DimensionError("sampling square " + std::to_string(i + 1) + " leaves the grid");
    means[i] = field.values.block(y0, x0, s.side, s.side).mean();
  }
  return means;
}

ComparisonReport compare(const TemperatureField& a, const TemperatureField& b, const Mask& mask) {
  require_same_grid(a.grid, b.grid, "compare");
  require_same_grid(a.grid, mask.grid, "compare");

  ComparisonReport r;
  r.squares = default_squares(a.grid);
  r.square_mean_a = sampling_square_means(a, r.squares);
  r.square_mean_b = sampling_square_means(b, r.squares);
  for (std::size_t i = 0; i < 4; ++i)
    r.square_abs_diff[i] = std::abs(r.square_mean_a[i] - r.square_mean_b[i]);
  const FieldArray diff = (a.values - b.values).abs();
  r.global_mae = diff.mean();
  r.global_max_abs = diff.maxCoeff();
  r.mean_temperature_a = mean_temperature(a, mask);
  r.mean_temperature_b = mean_temperature(b, mask);
  return r;
}

FieldArray difference_field(const TemperatureField& a, const TemperatureField& b) {
  require_same_grid(a.grid, b.grid, "difference_field");
  return b.values - a.values;
}

std::string summary_table(const ComparisonReport& report, const std::string& label_a,
                          const std::string& label_b) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-12s %-12s %-12s %-12s\n", "square", "center",
                label_a.c_str(), label_b.c_str(), "|diff|");
  out += line;
  for (std::size_t i = 0; i < 4; ++i) {
    char center[32];
    std::snprintf(center, sizeof(center), "(%d,%d)", report.squares[i].cx, report.squares[i].cy);
    std::snprintf(line, sizeof(line), "%-8zu %-12s %-12.6f %-12.6f %-12.6f\n", i + 1, center,
                  report.square_mean_a[i], report.square_mean_b[i], report.square_abs_diff[i]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "global MAE %.8f   max abs %.8f\n", report.global_mae,
                report.global_max_abs);
  out += line;
  std::snprintf(line, sizeof(line), "mean temperature: %s %.8f   %s %.8f\n", label_a.c_str(),
                report.mean_temperature_a, label_b.c_str(), report.mean_temperature_b);
  out += line;
  return out;
}

}  // namespace heatopt
