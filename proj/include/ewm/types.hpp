#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ewm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Labels = Eigen::VectorXi;
using Index = Eigen::Index;

/// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or insufficient input data (exit code 3).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Numerical failure that cannot be recovered from (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Both classes must be present for any Usefulness or AUC computation.
inline bool has_both_classes(const Labels& y) {
  bool pos = false, neg = false;
  for (Index i = 0; i < y.size(); ++i) (y[i] != 0 ? pos : neg) = true;
  return pos && neg;
}

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ewm
