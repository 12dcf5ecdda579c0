#pragma once

// Paths of the unstable plane E^u(x, lambda), sampled in x at fixed lambda or
// in lambda at fixed x, with their unitary traces against a reference plane.

#include <iosfwd>
#include <limits>
#include <vector>

#include "qpencil/integrator.hpp"
#include "qpencil/lagrangian.hpp"
#include "qpencil/pencil.hpp"

namespace qpencil {

enum class PathDirection { InX, InLambda };
const char* to_string(PathDirection d) noexcept;

/// Reference plane: Dirichlet, or the Robin plane (I; c + phi(lambda)).
struct Reference {
  enum class Kind { Dirichlet, Phi };
  Kind kind = Kind::Dirichlet;

  static Reference dirichlet() { return {Kind::Dirichlet}; }
  static Reference phi() { return {Kind::Phi}; }
  /// Phi for half-line problems, Dirichlet otherwise.
  static Reference natural(const PencilProblem& p);

  LagrangianFrame frame(const PencilProblem& p, double lambda) const;
  /// Symplectic map sending the reference plane at lambda onto the Dirichlet plane.
  CMatrix to_dirichlet(const PencilProblem& p, double lambda) const;
};

struct FlowOptions {
  IntegratorOptions integrator;
  double max_phase_jump = 0.5;   // radians between consecutive samples
  int lambda_samples = 33;       // initial uniform lambda grid
  double lambda_floor = 1e-10;   // smallest lambda spacing before giving up
  double param_tol = 1e-8;
  double angle_tol = kAngleTol;
  double lag_tol = kLagrangianTol;
  double unitary_tol = kUnitaryTol;
  std::vector<double> lambda_seeds;   // extra initial samples for lambda-paths
};

struct PathSample {
  double param = 0.0;
  LagrangianFrame frame = dirichlet_frame(1);   // orthonormal basis, R diagonal positive
  UnitaryTrace trace;
  double lagrangian_defect = 0.0;
  double unitary_defect = 0.0;
  double det_arg = std::numeric_limits<double>::quiet_NaN();   // arg det(first block of T F)
};

struct ConjugatePoint {
  double param = 0.0;
  int multiplicity = 1;
  int direction = 1;
  PathDirection kind = PathDirection::InX;
  bool sharp = false;               // located from the determinant sign alone
  bool corroborated = true;         // crossing form agrees with the phase direction
  double form_min = std::numeric_limits<double>::quiet_NaN();
  double form_max = std::numeric_limits<double>::quiet_NaN();
};

struct FramePath {
  PathDirection direction = PathDirection::InX;
  double fixed = 0.0;               // lambda for x-paths, x for lambda-paths
  double x_seed = 0.0;              // where E^u is seeded
  Reference reference;
  FlowOptions options;
  const PencilProblem* problem = nullptr;   // must outlive the path
  std::vector<PathSample> samples;          // in traversal order
  std::vector<DenseSegment> segments;       // x-paths only, ascending x
  std::vector<ConjugatePoint> sharp_crossings;

  double max_lagrangian_defect() const;
  double max_unitary_defect() const;
  /// Frame at an arbitrary parameter inside the path's range.
  LagrangianFrame frame_at(double param) const;
  LagrangianFrame reference_at(double param) const;
};

/// Frame of E^u(x, lambda), integrated from the graph-form seed at x_seed.
/// Orthonormal with positive R diagonal, so for real problems the basis
/// orientation is continuous in lambda.
LagrangianFrame unstable_frame_at(const PencilProblem& p, double lambda, double x_seed, double x,
                                  const IntegratorOptions& opts);

/// x-path at fixed lambda.  The seed is the frame at min(x_from, x_to);
/// samples run from x_from to x_to.
FramePath propagate_in_x(const PencilProblem& p, double lambda, double x_from, double x_to,
                         const LagrangianFrame& seed, const FlowOptions& opts,
                         Reference ref);

/// lambda-path at fixed x, each frame seeded at x_seed.
FramePath propagate_in_lambda(const PencilProblem& p, double x_fixed, double x_seed,
                              double lambda_from, double lambda_to, const FlowOptions& opts,
                              Reference ref);

/// lambda-path of the asymptotic planes (I; sqrt(lambda f1- + lambda^2 f2- - V-)).
FramePath asymptotic_lambda_path(const PencilProblem& p, double x_label, double lambda_from,
                                 double lambda_to, const FlowOptions& opts, Reference ref);

/// 2 Re <M* (X* Y' - Y* X') M w, w> with M = (X - iY)^{-1}; frame and rate
/// are taken relative to the Dirichlet plane.
double crossing_form(const LagrangianFrame& frame, const CMatrix& frame_rate, const CVector& w);

/// Signed crossings of the path with its reference, refined by bisection.
std::vector<ConjugatePoint> detect_crossings(const FramePath& path);

/// Exact arrival/departure count from the unwrapped phases.
int path_maslov(const FramePath& path);

/// CSV: param, phase_1..phase_n, lagrangian_defect.
void write_path_csv(const FramePath& path, std::ostream& out);

}  // namespace qpencil
