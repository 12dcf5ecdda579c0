#pragma once

// Finite-difference check: discretize the pencil as Q(lambda) = lambda^2 A2 +
// lambda A1 + A0 and count real eigenvalues from determinant signs.

#include <iosfwd>
#include <string>
#include <vector>

#include "qpencil/pencil.hpp"

namespace qpencil {

/// Block tridiagonal Q(lambda) with n x n blocks, one block row per unknown node.
/// A1 and A2 are block diagonal; A0 carries the second-difference coupling.
struct DiscretizedPencil {
  int n = 1;
  double h = 0.0;
  std::vector<double> grid;        // all N + 1 grid points on [a, b]
  std::vector<double> nodes;       // unknown nodes (Dirichlet ends removed)
  std::vector<CMatrix> a0_diag;
  std::vector<CMatrix> a0_off;     // block (k, k+1); block (k+1, k) is its adjoint
  std::vector<CMatrix> a1_diag;
  std::vector<CMatrix> a2_diag;

  int block_count() const { return static_cast<int>(nodes.size()); }
  CMatrix dense_A0() const;
  CMatrix dense_A1() const;
  CMatrix dense_A2() const;
  /// Dense Q(lambda); intended for small test problems.
  CMatrix dense_Q(Complex lambda) const;
};

/// Central differences on N + 1 points of [a, b]; Dirichlet rows at a (and b
/// unless half-line).  Half-line problems get a ghost-point Robin row at b = 0,
/// which needs linear phi.
DiscretizedPencil discretize(const PencilProblem& p, double a, double b, int N);

struct DetSample {
  double lambda = 0.0;
  int sign = 0;               // sign of det Q(lambda); 0 when a pivot vanished
  double log_abs_det = 0.0;
  int n_negative = 0;         // inertia of Q(lambda)
};

/// Block LDL* factorization: sign, log|det| and the negative inertia of Q(lambda).
DetSample det_eval(const DiscretizedPencil& dp, double lambda);

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  int sign_lo = 0;
  int sign_hi = 0;
  int inertia_change = 0;     // n_negative(lo) - n_negative(hi)
  bool degenerate = false;    // could not be split below cluster_tol
};

/// Sign-change brackets on a uniform grid of `steps` intervals.  Intervals whose
/// inertia changes by two or more are bisected until the roots separate.
std::vector<Bracket> det_scan(const DiscretizedPencil& dp, double lambda_lo, double lambda_hi, int steps,
                              double cluster_tol = 1e-6, std::vector<DetSample>* audit = nullptr);

/// Bisection on the determinant sign down to width tol; returns the midpoint.
double refine_root(const DiscretizedPencil& dp, const Bracket& bracket, double tol);

struct OracleOptions {
  int steps = 400;
  double root_tol = 1e-10;
  double cluster_tol = 1e-6;
};

struct OracleCount {
  int count = 0;                  // roots in (lambda_lo, lambda_hi]
  int inertia_count = 0;          // n_negative(lo) - n_negative(hi)
  std::vector<double> roots;
  bool cluster_caveat = false;    // two roots closer than cluster_tol, or an unsplit bracket
  std::vector<std::string> notes;
  std::vector<DetSample> audit;
};

OracleCount count_real_eigs(const DiscretizedPencil& dp, double lambda_lo, double lambda_hi,
                            const OracleOptions& opts = {});

struct OracleReport {
  OracleCount result;
  double a = 0.0;
  double b = 0.0;
  int N = 0;
  double h = 0.0;
  double lambda = 0.0;
  double lambda_hi = 0.0;
};

/// Grid size giving h <= min(0.02, 0.3 / sqrt(max |lambda_hi f1 + lambda_hi^2 f2 - V|)).
int default_grid_size(const PencilProblem& p, double a, double b, double lambda_hi);

/// Counts eigenvalues above lambda on the truncation used by the Maslov code.
/// N <= 0 picks default_grid_size; n_scale multiplies it.
OracleReport oracle_count(const PencilProblem& p, double lambda, double domain_scale = 1.0, int N = 0,
                          double n_scale = 1.0, const OracleOptions& opts = {});

/// CSV: lambda, sign, log_abs_det, n_negative.
void write_det_csv(const std::vector<DetSample>& samples, std::ostream& out);

}  // namespace qpencil
