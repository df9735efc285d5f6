#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace duonet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Stacked network vector: row i is the n-dimensional block owned by node i.
using BlockVector = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorCRef = Eigen::Ref<const Vector>;

// Base of every library error. Validation-type errors derive from
// InputError, numerical breakdowns from SolverError.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class DisconnectedGraph : public InputError {
 public:
  using InputError::InputError;
};

class InvalidEdge : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class NoStochasticSupport : public InputError {
 public:
  using InputError::InputError;
};

class NotASimplex : public InputError {
 public:
  using InputError::InputError;
};

class NonSquareCost : public InputError {
 public:
  using InputError::InputError;
};

class TooFewSamples : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class NonFiniteIterate : public SolverError {
 public:
  using SolverError::SolverError;
};

class BatchOverflow : public SolverError {
 public:
  using SolverError::SolverError;
};

inline void require_blocks(const BlockVector& x, Eigen::Index m, const char* what) {
  if (x.rows() != m) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(m) +
                            " blocks, got " + std::to_string(x.rows()));
  }
}

// Frobenius inner product of two stacked vectors.
inline double dot(const BlockVector& a, const BlockVector& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace duonet
