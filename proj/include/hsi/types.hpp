#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace hsi {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// All internal numerics are 64-bit; on-disk formats narrow to 32-bit where
// the format says so.
using Mat = MatrixX<double>;
using Vec = VectorX<double>;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands (message names both shapes).
struct DimensionError : Error {
  using Error::Error;
};

/// Malformed configuration (bad schema, unknown keys, invalid values).
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (files, labels, splits).
struct DataError : Error {
  using Error::Error;
};

/// Non-finite values or numerically impossible requests.
struct NumericError : Error {
  using Error::Error;
};

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace hsi
