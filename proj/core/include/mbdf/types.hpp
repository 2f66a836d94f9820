#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mbdf {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// One row per stream, one column per bit position.
using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// All randomness in the library flows through this generator type.
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimensions or lengths of the inputs do not agree.
class InputShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Inconsistent detector / simulation configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Singular or ill-conditioned linear algebra.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An exhaustive search would exceed its enumeration guard.
class SearchSpaceError : public Error {
 public:
  using Error::Error;
};

// Circularly-symmetric complex Gaussian sample with E|x|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace mbdf
