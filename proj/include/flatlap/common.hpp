#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace flatlap {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed surface / bundle / graph documents.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Inputs that parse but violate a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedures that failed to reach their tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Largest entry modulus of a dense matrix (0 for empty input).
inline double max_abs_entry(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// max |U^H U - I| over entries.
inline double unitarity_defect(const CMatrix& u) {
  const auto r = u.rows();
  return max_abs_entry(u.adjoint() * u - CMatrix::Identity(r, r));
}

}  // namespace flatlap
