#include "qpencil/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpencil/lagrangian.hpp"

namespace qpencil {

namespace {

constexpr double a21 = 0.2, a31 = 3.0 / 40.0, a32 = 9.0 / 40.0, a41 = 44.0 / 45.0,
                 a42 = -56.0 / 15.0, a43 = 32.0 / 9.0, a51 = 19372.0 / 6561.0,
                 a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0,
                 a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0, a71 = 35.0 / 384.0,
                 a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

CMatrix DenseSegment::eval(double x) const {
  const double t = (x - x0) / h;
  const double s = 1.0 - t;
  return r[0] + t * (r[1] + s * (r[2] + t * (r[3] + s * r[4])));
}

bool needs_renormalization(const CMatrix& f, long accepted, int renorm_every) {
  if (renorm_every > 0 && accepted % renorm_every == 0) return true;
  if (f.norm() > 1e6) return true;
  const Eigen::VectorXd cols = f.colwise().norm().transpose();
  return cols.maxCoeff() > 1e3 * cols.minCoeff();
}

FrameIntegrator::FrameIntegrator(Generator k, IntegratorOptions opts)
    : k_(std::move(k)), opts_(opts) {
  if (!(opts_.rel_tol > 0.0) || !(opts_.abs_tol > 0.0) || !(opts_.max_step > 0.0))
    throw Error(ErrorKind::Config, "integrator tolerances and max_step must be positive");
}

CMatrix FrameIntegrator::rhs(double x, const CMatrix& f) const {
  const Eigen::Index n = f.cols();
  CMatrix out(2 * n, n);
  out.topRows(n) = f.bottomRows(n);
  out.bottomRows(n).noalias() = k_(x) * f.topRows(n);
  return out;
}

CMatrix FrameIntegrator::integrate(double x0, double x1, const CMatrix& f0, const Observer& observer) {
  steps_ = 0;
  if (!(x1 > x0)) return f0;
  const double tol = opts_.abs_tol + opts_.rel_tol;
  double x = x0;
  CMatrix y = f0;
  double h = std::min(opts_.max_step, x1 - x0) * 0.1;
  long accepted = 0;

  while (x < x1) {
    if (++steps_ > opts_.max_steps)
      throw Error(ErrorKind::IntegrationFailure, "step budget exhausted at x=" + std::to_string(x));
    bool last = false;
    if (x + h >= x1) {
      h = x1 - x;
      last = true;
    }
    const CMatrix k1 = rhs(x, y);
    const CMatrix k2 = rhs(x + c2 * h, y + h * (a21 * k1));
    const CMatrix k3 = rhs(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const CMatrix k4 = rhs(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const CMatrix k5 = rhs(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const CMatrix k6 = rhs(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const CMatrix y5 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const CMatrix k7 = rhs(x + h, y5);
    const CMatrix e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    // Only the error transverse to the plane matters; measure it in the
    // orthonormal basis of the new plane.
    CMatrix r;
    const CMatrix q = positive_qr(y5, &r);
    const CMatrix perp = e - q * (q.adjoint() * e);
    const CMatrix scaled = r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(perp);
    double err = scaled.cwiseAbs().maxCoeff() / tol;
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      AcceptedStep step;
      step.segment.x0 = x;
      step.segment.h = h;
      step.segment.r[0] = y;
      step.segment.r[1] = y5 - y;
      step.segment.r[2] = h * k1 - step.segment.r[1];
      step.segment.r[3] = step.segment.r[1] - h * k7 - step.segment.r[2];
      step.segment.r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      ++accepted;
      x = last ? x1 : x + h;
      if (needs_renormalization(y5, accepted, opts_.renorm_every)) {
        y = q;
        step.renormalized = true;
      } else {
        y = y5;
      }
      step.frame = y;
      if (observer) observer(step);
      if (last) break;
    }
    const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h = std::min(opts_.max_step, h * std::clamp(fac, 0.2, 5.0));
    if (h < opts_.min_step)
      throw Error(ErrorKind::IntegrationFailure, "step size underflow at x=" + std::to_string(x));
  }
  return y;
}

}  // namespace qpencil
