#pragma once

// Text formats: CSV matrices (rows = ambient dimension, columns = points),
// 0/1 mask files, one-label-per-line files and tab-separated tables.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/spectral.hpp"

namespace fsc::io {

/// Values and observation mask as read from disk, before any column checks.
struct RawMatrix {
  Matrix values;
  Mask mask;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  return out;
}

inline std::string where(const std::string& path, std::size_t line, std::size_t field) {
  return path + ":" + std::to_string(line) + ": field " + std::to_string(field);
}

/// Reads non-blank lines of comma separated fields into a rectangular grid.
inline std::vector<std::vector<std::string>> read_grid(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<std::string>> grid;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (!grid.empty() && fields.size() != grid.front().size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(grid.front().size()) +
                       " fields, found " + std::to_string(fields.size()));
    grid.push_back(std::move(fields));
  }
  if (grid.empty()) throw ParseError(path + ": no data rows");
  return grid;
}

}  // namespace detail

/// Parses a CSV matrix. Empty fields and NaN (any case) mark missing entries.
inline RawMatrix read_matrix_csv(const std::string& path) {
  const auto grid = detail::read_grid(path);
  const auto d = static_cast<Index>(grid.size());
  const auto n = static_cast<Index>(grid.front().size());
  RawMatrix out{Matrix::Zero(d, n), Mask::Constant(d, n, true)};
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < n; ++j) {
      const std::string& f = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (f.empty() || f == "NaN" || f == "nan" || f == "NAN") {
        out.mask(i, j) = false;
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
        throw ParseError(detail::where(path, static_cast<std::size_t>(i) + 1, static_cast<std::size_t>(j) + 1) +
                         ": not a finite number: '" + f + "'");
      out.values(i, j) = v;
    }
  }
  return out;
}

/// Parses a CSV of 0/1 entries (1 = observed).
inline Mask read_mask_csv(const std::string& path) {
  const auto grid = detail::read_grid(path);
  Mask mask(static_cast<Index>(grid.size()), static_cast<Index>(grid.front().size()));
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      const std::string& f = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (f != "0" && f != "1")
        throw ParseError(detail::where(path, static_cast<std::size_t>(i) + 1, static_cast<std::size_t>(j) + 1) +
                         ": mask entries must be 0 or 1, found '" + f + "'");
      mask(i, j) = f == "1";
    }
  }
  return mask;
}

/// Matrix file plus an optional sidecar mask. The sidecar, when present,
/// overrides the inline missing markers; an entry it marks observed must hold a number.
inline MaskedMatrix load_masked(const std::string& path, const std::string& mask_path = {}) {
  RawMatrix raw = read_matrix_csv(path);
  if (!mask_path.empty()) {
    const Mask mask = read_mask_csv(mask_path);
    if (mask.rows() != raw.values.rows() || mask.cols() != raw.values.cols())
      throw ShapeMismatch("mask " + mask_path + " is " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                          " but matrix is " + std::to_string(raw.values.rows()) + "x" + std::to_string(raw.values.cols()));
    for (Index j = 0; j < mask.cols(); ++j)
      for (Index i = 0; i < mask.rows(); ++i)
        if (mask(i, j) && !raw.mask(i, j))
          throw ParseError(path + ": entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                           ") is marked observed by the mask but is missing");
    raw.mask = mask;
  }
  return MaskedMatrix(std::move(raw.values), std::move(raw.mask));
}

/// Writes a CSV matrix; entries outside `mask` are left empty.
inline void write_matrix_csv(const std::string& path, const Matrix& values, const Mask* mask = nullptr) {
  if (mask && (mask->rows() != values.rows() || mask->cols() != values.cols()))
    throw ShapeMismatch("mask and values differ in shape");
  auto out = detail::open_out(path);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      if (!mask || (*mask)(i, j)) out << format_double(values(i, j));
    }
    out << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

inline void write_masked_csv(const std::string& path, const MaskedMatrix& x) {
  write_matrix_csv(path, x.values(), &x.mask());
}

inline void write_mask_csv(const std::string& path, const Mask& mask) {
  auto out = detail::open_out(path);
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) out << (j > 0 ? "," : "") << (mask(i, j) ? '1' : '0');
    out << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

/// One positive integer per line.
inline Labels read_labels(const std::string& path) {
  auto in = detail::open_in(path);
  Labels labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string f = detail::trim(line);
    if (f.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size() || v < 1)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected a 1-based cluster id, found '" + f + "'");
    labels.push_back(v);
  }
  if (labels.empty()) throw ParseError(path + ": no labels");
  return labels;
}

inline void write_labels(const std::string& path, const Labels& labels) {
  auto out = detail::open_out(path);
  for (int l : labels) out << l << '\n';
  if (!out) throw ParseError(path + ": write failed");
}

/// Tab separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw LengthMismatch("table row width differs from header");
    rows.push_back(std::move(row));
  }
};

inline void write_table(const std::string& path, const Table& t) {
  auto out = detail::open_out(path);
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k > 0 ? "\t" : "") << r[k];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  if (!out) throw ParseError(path + ": write failed");
}

inline Table read_table(const std::string& path) {
  auto in = detail::open_in(path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.add(std::move(fields));
    }
  }
  if (first) throw ParseError(path + ": missing header row");
  return t;
}

}  // namespace fsc::io
