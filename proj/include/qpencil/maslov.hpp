#pragma once

// Shelf indices, the Maslov box, and the spectral counts N(lambda) built from them.

#include <optional>
#include <string>
#include <vector>

#include "qpencil/frameflow.hpp"
#include "qpencil/pencil.hpp"

namespace qpencil {

enum class Shelf { Top, Right, Bottom, Left };
const char* to_string(Shelf s) noexcept;

struct ShelfResult {
  Shelf shelf = Shelf::Left;
  int maslov = 0;
  std::vector<ConjugatePoint> crossings;
  double param_from = 0.0;
  double param_to = 0.0;
  double fixed = 0.0;
  std::optional<int> numeric_maslov;   // bottom shelf: value from the asymptotic path
  double max_lagrangian_defect = 0.0;
  double max_unitary_defect = 0.0;
};

struct CountOptions {
  FlowOptions flow;
  double zero_tol = kZeroTol;
  double limit_tol = 1e-8;
  double domain_scale = 1.0;   // multiplies both truncation points
  double top_margin = 3.0;     // whole-line top shelf sits this far past the last left crossing
  bool check_stability = false;
  bool retry_on_inconsistent_box = true;
  int curve_refinements = 6;   // bisection rounds where neighbouring curve counts differ
};

struct SpectralCountReport {
  double lambda = 0.0;
  double lambda_hi = 0.0;
  int N = 0;
  int maslov = 0;                       // left shelf
  MorseCount morse_correction;
  int kernel_dim_at_lambda = 0;
  int crossing_total = 0;               // total multiplicity on the left shelf
  std::vector<ShelfResult> shelves;
  std::optional<int> box_sum;
  std::optional<int> oracle_count;
  std::optional<bool> truncation_stable;
  double x_min = 0.0;
  double x_max = 0.0;
  double x_top = 0.0;
  double lambda_inf = 0.0;
  std::string domain;
  std::vector<std::string> notes;

  const ShelfResult* shelf(Shelf s) const;
};

class InconsistentBoxError : public Error {
 public:
  InconsistentBoxError(const std::string& what, SpectralCountReport report)
      : Error(ErrorKind::InconsistentBox, what), report_(std::move(report)) {}
  const SpectralCountReport& report() const { return report_; }

 private:
  SpectralCountReport report_;
};

/// Signed count of the path's passages through -1, with its crossings.
ShelfResult shelf_index(const FramePath& path, Shelf shelf);

/// Morse data of sqrt(lambda f1- + lambda^2 f2- - V-) - c - phi(lambda).
MorseCount bottom_shelf_correction(const PencilProblem& p, double lambda, double zero_tol = kZeroTol);

/// Truncation points used by the counting routines (after domain_scale).
Truncation count_truncation(const PencilProblem& p, const CountOptions& opts);
double problem_lambda_inf(const PencilProblem& p, const Truncation& t);

SpectralCountReport spectral_count_halfline(const PencilProblem& p, double lambda,
                                            const CountOptions& opts = {});
SpectralCountReport spectral_count_wholeline(const PencilProblem& p, double lambda,
                                             const CountOptions& opts = {});
/// Dirichlet condition at x = L; uses the limits at -infinity only.
SpectralCountReport spectral_count_truncated(const PencilProblem& p, double L, double lambda,
                                             const CountOptions& opts = {});
/// Dispatches on the problem's domain.
SpectralCountReport spectral_count(const PencilProblem& p, double lambda, const CountOptions& opts = {});

/// All four shelves on [lambda_lo, lambda_hi]; a negative lambda_hi selects lambda_inf.
/// Throws InconsistentBoxError when the shelves do not sum to zero.
SpectralCountReport maslov_box(const PencilProblem& p, double lambda_lo, double lambda_hi,
                               const CountOptions& opts = {});

struct CurvePoint {
  double lambda = 0.0;
  int strand = 0;
  double x_star = 0.0;
};

struct CurveTable {
  std::vector<CurvePoint> points;
  std::vector<double> failed_lambdas;
  int strands_at(double lambda) const;
};

/// Conjugate-point loci x*(lambda) of the left-shelf path for each lambda,
/// plus bisection points where the strand count changes between neighbours.
CurveTable eigenvalue_curves(const PencilProblem& p, const std::vector<double>& lambda_grid,
                             const CountOptions& opts = {});

}  // namespace qpencil
