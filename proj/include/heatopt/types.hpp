#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace heatopt {

using Scalar = double;

// Fields are ny x nx with row index y (downward) and column index x
// (rightward, heat source at x = 0). Row-major storage so a field plane,
// a CSV row and a network tensor plane share the same memory order.
using FieldArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  std::string key;
  ConfigError(const std::string& offending_key, const std::string& what)
      : Error(what), key(offending_key) {}
};

struct DimensionError : Error {
  using Error::Error;
};

struct InvalidLayoutError : Error {
  using Error::Error;
};

struct EmptyDomainError : Error {
  using Error::Error;
};

struct SizeError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  double final_residual;
  long iterations;
  ConvergenceError(const std::string& what, double residual, long iters)
      : Error(what), final_residual(residual), iterations(iters) {}
};

struct TrainingError : Error {
  int block_index;  // offending parameter tensor, -1 when not attributable
  TrainingError(const std::string& what, int block) : Error(what), block_index(block) {}
};

struct MissingArtifactError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct GridSpec {
  int nx = 128;
  int ny = 128;

  bool operator==(const GridSpec&) const = default;

  void validate() const {
    if (nx < 8 || ny < 8)
      throw DimensionError("grid must be at least 8x8, got " + std::to_string(nx) + "x" +
                           std::to_string(ny));
  }
};

struct BoundaryCondition {
  Scalar hot_value = 1.0;   // left edge
  Scalar cold_value = 0.0;  // other edges and hole cells

  void validate() const {
    // hot == cold is allowed: it degenerates to the constant field
    if (hot_value < cold_value) throw Error("boundary condition requires hot_value >= cold_value");
  }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b))
    throw DimensionError(std::string(where) + ": grid mismatch " + std::to_string(a.nx) + "x" +
                         std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" +
                         std::to_string(b.ny));
}

}  // namespace heatopt
