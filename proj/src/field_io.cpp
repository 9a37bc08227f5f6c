#include "heatopt/field_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace heatopt {

std::string format_double(Scalar v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const FieldArray& values, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (Eigen::Index y = 0; y < values.rows(); ++y) {
    for (Eigen::Index x = 0; x < values.cols(); ++x) {
      if (x) out << ',';
      out << format_double(values(y, x));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

FieldArray read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path);
  std::vector<std::vector<Scalar>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<Scalar> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty CSV " + path);
  FieldArray values(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index y = 0; y < values.rows(); ++y)
    for (Eigen::Index x = 0; x < values.cols(); ++x)
      values(y, x) = rows[static_cast<size_t>(y)][static_cast<size_t>(x)];
  return values;
}

TemperatureField read_field_csv(const std::string& path) {
  FieldArray v = read_csv(path);
  GridSpec g{static_cast<int>(v.cols()), static_cast<int>(v.rows())};
  g.validate();
  if (!v.isFinite().all()) throw IoError("non-finite values in " + path);
  return {g, std::move(v)};
}

Mask read_mask_csv(const std::string& path) {
  FieldArray v = read_csv(path);
  GridSpec g{static_cast<int>(v.cols()), static_cast<int>(v.rows())};
  g.validate();
  if (!((v == 0.0) || (v == 1.0)).all())
    throw IoError("mask " + path + " contains values other than 0 and 1");
  return {g, std::move(v)};
}

void write_pgm(const FieldArray& values, const std::string& path, Scalar lo, Scalar hi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
  const Scalar span = hi - lo;
  for (Eigen::Index y = 0; y < values.rows(); ++y) {
    for (Eigen::Index x = 0; x < values.cols(); ++x) {
      Scalar t = span > 0 ? (values(y, x) - lo) / span : 0.0;
      const int g = std::clamp(static_cast<int>(std::lround(t * 255.0)), 0, 255);
      out.put(static_cast<char>(g));
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace heatopt
