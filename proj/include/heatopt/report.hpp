#pragma once

#include <array>
#include <string>

#include "heatopt/field.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

struct SamplingSquare {
  int cx = 0;
  int cy = 0;
  int side = 5;
};

// Four 5x5 probe squares with centers 20 pixels from the two nearest edges.
// Squares 1 and 4 sit on the hot side (x = 20), squares 2 and 3 on the cold
// side, numbered top-to-bottom on each side.
std::array<SamplingSquare, 4> default_squares(const GridSpec& grid);

std::array<Scalar, 4> sampling_square_means(const TemperatureField& field,
                                            const std::array<SamplingSquare, 4>& squares);

struct ComparisonReport {
  std::array<SamplingSquare, 4> squares{};
  std::array<Scalar, 4> square_mean_a{};
  std::array<Scalar, 4> square_mean_b{};
  std::array<Scalar, 4> square_abs_diff{};
  Scalar global_mae = 0.0;      // over all cells
  Scalar global_max_abs = 0.0;
  Scalar mean_temperature_a = 0.0;  // over material cells
  Scalar mean_temperature_b = 0.0;
};

ComparisonReport compare(const TemperatureField& a, const TemperatureField& b, const Mask& mask);

// b - a, for export alongside the report
FieldArray difference_field(const TemperatureField& a, const TemperatureField& b);

// Fixed-width text table of the per-square means and differences.
std::string summary_table(const ComparisonReport& report, const std::string& label_a,
                          const std::string& label_b);

}  // namespace heatopt
