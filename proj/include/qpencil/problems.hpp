#pragma once

// Built-in problem registry, seeded random problems, and the JSON problem format.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpencil/pencil.hpp"

namespace qpencil {

/// Names accepted by builtin_problem().
std::vector<std::string> builtin_names();

/// example1..example4, constant, constant-half, and random-half:<seed>,
/// random-whole:<seed>, random-complex:<seed>.
PencilProblem builtin_problem(const std::string& name);

struct RandomProblemOptions {
  int n = 1;
  bool half_line = false;
  bool complex_entries = false;
  /// When false, V stays negative definite for every x; otherwise a bump of
  /// either sign is added to the negative definite limit.
  bool allow_positive_bump = true;
};

PencilProblem random_problem(std::uint64_t seed, const RandomProblemOptions& opts);

/// Natural cubic spline through (x_i, y_i); constant continuation outside the knots.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;

 private:
  std::vector<double> x_, y_, m_;
};

/// Parses an n x n matrix from nested arrays of numbers or [re, im] pairs; a
/// bare number is accepted for n = 1.
CMatrix matrix_from_json(const nlohmann::json& j, int n, const std::string& what);
nlohmann::json matrix_to_json(const CMatrix& m);

/// Builds a problem from the JSON schema; throws Error(Config) or
/// Error(UnsupportedBoundary) with the offending location.
PencilProblem problem_from_json(const nlohmann::json& j);

/// Loads a problem from a registry name or a path to a JSON file.
PencilProblem load_problem(const std::string& name_or_path);

}  // namespace qpencil
