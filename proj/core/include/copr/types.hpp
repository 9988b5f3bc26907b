#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace copr {

using cplx = std::complex<double>;

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

/// m x m boolean aperture support.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Complex coefficient vector `a` (pupil samples in zonal form, basis
/// weights in modal form).
using CoefficientVector = CVec;

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Non-finite values or a degenerate quantity encountered during a solve.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// The 2n_a x 2n_a normal matrix could not be factorized.
class RankDeficientError : public NumericalFailure {
 public:
  RankDeficientError(const std::string& what, double rcond)
      : NumericalFailure(what), rcond_(rcond) {}
  /// Reciprocal condition estimate at the time of failure.
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// An inner iterative loop stopped before reaching its tolerance.
class ConvergenceError : public NumericalFailure {
 public:
  ConvergenceError(const std::string& what, CVec best)
      : NumericalFailure(what), best_(std::move(best)) {}
  const CVec& best_iterate() const noexcept { return best_; }

 private:
  CVec best_;
};

/// Malformed input file; carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace copr
