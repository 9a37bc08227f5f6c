#pragma once

#include <string>

#include "heatopt/field.hpp"
#include "heatopt/types.hpp"

namespace heatopt {

// Shortest decimal text that round-trips a double exactly.
std::string format_double(Scalar v);

// Row-major CSV: ny lines of nx comma-separated decimals.
void write_csv(const FieldArray& values, const std::string& path);
FieldArray read_csv(const std::string& path);

TemperatureField read_field_csv(const std::string& path);
Mask read_mask_csv(const std::string& path);

// Binary 8-bit grayscale PGM; values mapped linearly from [lo, hi] to [0, 255].
void write_pgm(const FieldArray& values, const std::string& path, Scalar lo, Scalar hi);

inline void write_pgm(const TemperatureField& field, const std::string& path,
                      const BoundaryCondition& bc) {
  write_pgm(field.values, path, bc.cold_value, bc.hot_value);
}

}  // namespace heatopt
