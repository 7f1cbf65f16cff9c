#pragma once

#include <stdexcept>
#include <string>

namespace fsc {

/// Coarse classification used by the command-line front-end to pick an exit code.
enum class ErrorKind {
  kUser,       // bad input data or parameters (exit 1)
  kNumerical,  // solver or factorization failure (exit 2)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidParams : public Error {
 public:
  explicit InvalidParams(const std::string& what) : Error(ErrorKind::kUser, "invalid parameters: " + what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error(ErrorKind::kUser, "shape mismatch: " + what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorKind::kUser, "dimension mismatch: " + what) {}
};

class LengthMismatch : public Error {
 public:
  explicit LengthMismatch(const std::string& what) : Error(ErrorKind::kUser, "length mismatch: " + what) {}
};

class EmptyScope : public Error {
 public:
  explicit EmptyScope(const std::string& what) : Error(ErrorKind::kUser, "empty scope: " + what) {}
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& what) : Error(ErrorKind::kNumerical, "rank deficient: " + what) {}
};

/// A column (or a bare observation pattern, column = -1) observed on fewer
/// entries than the subspace dimension.
class InsufficientObservations : public Error {
 public:
  InsufficientObservations(long column, long observed, long required)
      : Error(ErrorKind::kUser, describe(column, observed, required)),
        column_(column),
        observed_(observed),
        required_(required) {}

  long column() const noexcept { return column_; }
  long observed() const noexcept { return observed_; }
  long required() const noexcept { return required_; }

 private:
  static std::string describe(long column, long observed, long required) {
    const std::string who = column >= 0 ? "column " + std::to_string(column) : std::string("observation pattern");
    return who + " has " + std::to_string(observed) + " observed entries; at least r = " + std::to_string(required) +
           " are required";
  }

  long column_;
  long observed_;
  long required_;
};

class NonFiniteObjective : public Error {
 public:
  explicit NonFiniteObjective(const std::string& what)
      : Error(ErrorKind::kNumerical, "non-finite objective: " + what) {}
};

class DegenerateDegree : public Error {
 public:
  explicit DegenerateDegree(long row)
      : Error(ErrorKind::kNumerical, "similarity row " + std::to_string(row) + " sums to zero (isolated point)"),
        row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class EmptyCluster : public Error {
 public:
  explicit EmptyCluster(int cluster)
      : Error(ErrorKind::kUser, "cluster " + std::to_string(cluster) + " has no members"), cluster_(cluster) {}
  int cluster() const noexcept { return cluster_; }

 private:
  int cluster_;
};

class AllEntriesFailed : public Error {
 public:
  explicit AllEntriesFailed(const std::string& what)
      : Error(ErrorKind::kNumerical, "all path entries failed: " + what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::kUser, "parse error: " + what) {}
};

}  // namespace fsc
