#pragma once

// Dormand–Prince 5(4) for frames F' = [Y; K(x) X], with dense output and
// error control measured on the plane spanned by F rather than on F itself.

#include <array>
#include <functional>

#include "qpencil/types.hpp"

namespace qpencil {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.5;
  int renorm_every = 5;
  double min_step = 1e-12;
  long max_steps = 5'000'000;
};

/// Continuous extension of one accepted step, valid on [x0, x0 + h].
struct DenseSegment {
  double x0 = 0.0;
  double h = 0.0;
  std::array<CMatrix, 5> r;

  CMatrix eval(double x) const;
};

struct AcceptedStep {
  DenseSegment segment;
  CMatrix frame;          // state at x0 + h, possibly renormalized
  bool renormalized = false;
};

class FrameIntegrator {
 public:
  /// k(x) returns lambda f1 + lambda^2 f2 - V at x.
  using Generator = std::function<CMatrix(double)>;
  using Observer = std::function<void(const AcceptedStep&)>;

  FrameIntegrator(Generator k, IntegratorOptions opts);

  /// Integrates from x0 to x1 (x1 > x0) and returns the final frame.
  /// The observer sees every accepted step in order.
  CMatrix integrate(double x0, double x1, const CMatrix& f0, const Observer& observer = {});

  long last_step_count() const { return steps_; }

 private:
  CMatrix rhs(double x, const CMatrix& f) const;

  Generator k_;
  IntegratorOptions opts_;
  long steps_ = 0;
};

/// True when the frame should be re-orthonormalized before the next step.
bool needs_renormalization(const CMatrix& f, long accepted, int renorm_every);

}  // namespace qpencil
