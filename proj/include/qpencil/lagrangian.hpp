#pragma once

// Lagrangian frames [X; Y] in C^{2n} with J = [[0, -I], [I, 0]], and their
// unitary representations W = (X + iY)(X - iY)^{-1}.

#include <vector>

#include "qpencil/linalg.hpp"
#include "qpencil/types.hpp"

namespace qpencil {

struct BoundaryData;

inline constexpr double kLagrangianTol = 1e-8;
inline constexpr double kUnitaryTol = 1e-9;
inline constexpr double kAngleTol = 1e-6;
inline constexpr double kRankTol = 1e-12;

class LagrangianFrame {
 public:
  LagrangianFrame(CMatrix x, CMatrix y);
  static LagrangianFrame from_stacked(const CMatrix& f);

  int n() const { return static_cast<int>(x_.cols()); }
  const CMatrix& X() const { return x_; }
  const CMatrix& Y() const { return y_; }
  CMatrix stacked() const;

  /// ||X*Y - Y*X|| after orthonormalizing the columns; independent of the basis scale.
  double lagrangian_defect() const;
  /// Smallest singular value of the orthonormalized frame's X - iY block.
  double chart_margin() const;
  /// Throws InvalidFrame when rank, Lagrangian or chart conditions fail.
  void validate(double lag_tol = kLagrangianTol, double rank_tol = kRankTol) const;

  /// Same plane, orthonormal columns, R factor with positive real diagonal.
  LagrangianFrame orthonormalized() const;
  /// Same plane in the basis F (X - iY)^{-1}; unique for each plane.
  LagrangianFrame canonical() const;
  /// Right multiplication by an invertible n x n matrix (change of basis).
  LagrangianFrame rebased(const CMatrix& g) const;

 private:
  CMatrix x_;
  CMatrix y_;
};

/// Thin QR with R carrying a positive real diagonal.  Returns Q; R through the pointer.
CMatrix positive_qr(const CMatrix& f, CMatrix* r = nullptr);

CMatrix symplectic_j(int n);

LagrangianFrame dirichlet_frame(int n);
LagrangianFrame graph_frame(const CMatrix& s);
LagrangianFrame phi_frame(const BoundaryData& b, double lambda);

CMatrix w_of(const LagrangianFrame& frame);
CMatrix w_relative(const LagrangianFrame& frame1, const LagrangianFrame& frame2);

double unitary_defect(const CMatrix& w);

struct Eigenphases {
  RVector phases;    // ascending, wrapped to (-pi, pi]
  CMatrix vectors;   // columns are the matching unit eigenvectors
};

/// Eigenphases of a unitary matrix through a rotated Cayley transform, so the
/// only eigensolver involved is the Hermitian one.
Eigenphases unitary_eigenphases(const CMatrix& w);

double wrap_angle(double theta);

/// Number of eigenvalues of w_relative within angle_tol of -1.
int intersection_dim(const LagrangianFrame& frame1, const LagrangianFrame& frame2,
                     double angle_tol = kAngleTol);

struct UnitaryTrace {
  double param = 0.0;
  CMatrix W;
  RVector phases;   // continuously unwrapped along the path
};

/// Assigns new wrapped phases to the strands of prev_unwrapped by the cyclic
/// shift with the smallest maximal displacement.  Returns the unwrapped
/// continuation; the largest displacement goes through max_jump.
RVector continue_phases(const RVector& prev_unwrapped, const RVector& new_wrapped,
                        double* max_jump = nullptr);

/// floor((theta - pi) / 2pi), with theta within angle_tol of an odd multiple of pi snapped onto it.
int phase_sheet(double theta, double angle_tol = kAngleTol);

}  // namespace qpencil
