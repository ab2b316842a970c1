#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Malformed or inconsistent input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural invariant of a domain type does not hold.
class InvariantError : public InputError {
 public:
  using InputError::InputError;
};

/// The numerical machinery broke down (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

inline void require_dim(Eigen::Index got, Eigen::Index expected, std::string_view what) {
  if (got != expected) {
    throw InputError(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) +
                     ", got " + std::to_string(got) + ")");
  }
}

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Mat make_mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.begin()->size());
  Mat m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

/// Rank-one matrix a ⊗ b = a bᵀ.
inline Mat outer(const Vec& a, const Vec& b) { return a * b.transpose(); }

// Logging controlled by MMT_LOG ∈ {quiet, info, debug}; default quiet.
enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MMT_LOG");
    if (env == nullptr) return LogLevel::quiet;
    const std::string_view s(env);
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    return LogLevel::quiet;
  }();
  return level;
}

inline void log(LogLevel level, std::string_view msg) {
  if (level != LogLevel::quiet && static_cast<int>(level) <= static_cast<int>(log_level())) {
    std::cerr << (level == LogLevel::debug ? "[mmt:debug] " : "[mmt] ") << msg << '\n';
  }
}

}  // namespace mmt
