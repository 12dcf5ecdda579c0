#pragma once

#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qpencil {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

// Default tolerances shared across modules.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPdTol = 1e-10;
inline constexpr double kZeroTol = 1e-8;
inline constexpr double kNodeTol = 1e-12;

enum class ErrorKind {
  NotHermitian,
  NotPositiveDefinite,
  HyperbolicityLost,
  InvalidFrame,
  IntegrationFailure,
  NonTransversalCrossing,
  InconsistentBox,
  UnsupportedBoundary,
  Config,
  InvalidArgument,
};

const char* to_string(ErrorKind kind) noexcept;

/// Short scientific rendering for error messages; std::to_string would print 0.000000.
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qpencil
