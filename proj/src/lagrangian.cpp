#include "qpencil/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qpencil/pencil.hpp"

namespace qpencil {

namespace {

CMatrix right_solve(const CMatrix& a, const CMatrix& b) {
  // a * b^{-1}
  return b.transpose().partialPivLu().solve(a.transpose()).transpose();
}

bool all_finite(const CMatrix& m) { return m.allFinite(); }

}  // namespace

LagrangianFrame::LagrangianFrame(CMatrix x, CMatrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != x_.cols() || y_.rows() != y_.cols() || x_.rows() != y_.rows() || x_.rows() < 1) {
    throw Error(ErrorKind::InvalidFrame, "frame blocks must be equal non-empty square matrices");
  }
}

LagrangianFrame LagrangianFrame::from_stacked(const CMatrix& f) {
  if (f.rows() != 2 * f.cols())
    throw Error(ErrorKind::InvalidFrame, "stacked frame must be 2n x n");
  const Eigen::Index n = f.cols();
  return LagrangianFrame(f.topRows(n), f.bottomRows(n));
}

CMatrix LagrangianFrame::stacked() const {
  CMatrix f(2 * x_.rows(), x_.cols());
  f << x_, y_;
  return f;
}

CMatrix positive_qr(const CMatrix& f, CMatrix* r) {
  const Eigen::Index m = f.rows();
  const Eigen::Index n = f.cols();
  Eigen::HouseholderQR<CMatrix> qr(f);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m, n);
  CMatrix rr = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(rr(j, j));
    if (mag == 0.0) continue;
    const Complex ph = rr(j, j) / mag;
    q.col(j) *= ph;
    rr.row(j) *= std::conj(ph);
  }
  if (r) *r = rr;
  return q;
}

LagrangianFrame LagrangianFrame::orthonormalized() const {
  return from_stacked(positive_qr(stacked()));
}

double LagrangianFrame::lagrangian_defect() const {
  const LagrangianFrame q = orthonormalized();
  return (q.X().adjoint() * q.Y() - q.Y().adjoint() * q.X()).norm();
}

double LagrangianFrame::chart_margin() const {
  const LagrangianFrame q = orthonormalized();
  const CMatrix m = q.X() - kI * q.Y();
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().minCoeff();
}

void LagrangianFrame::validate(double lag_tol, double rank_tol) const {
  if (!all_finite(x_) || !all_finite(y_))
    throw Error(ErrorKind::InvalidFrame, "frame has non-finite entries");
  Eigen::JacobiSVD<CMatrix> svd(stacked());
  const auto& sv = svd.singularValues();
  if (!(sv.minCoeff() > rank_tol * std::max(1.0, sv.maxCoeff())))
    throw Error(ErrorKind::InvalidFrame, "frame is rank deficient");
  const double defect = lagrangian_defect();
  if (!(defect <= lag_tol))
    throw Error(ErrorKind::InvalidFrame, "Lagrangian defect " + sci(defect));
  if (!(chart_margin() > 0.5))
    throw Error(ErrorKind::InvalidFrame, "X - iY is not invertible");
}

LagrangianFrame LagrangianFrame::canonical() const {
  const CMatrix m = x_ - kI * y_;
  return LagrangianFrame(right_solve(x_, m), right_solve(y_, m));
}

LagrangianFrame LagrangianFrame::rebased(const CMatrix& g) const {
  return LagrangianFrame(x_ * g, y_ * g);
}

CMatrix symplectic_j(int n) {
  CMatrix j = CMatrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -CMatrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = CMatrix::Identity(n, n);
  return j;
}

LagrangianFrame dirichlet_frame(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "dirichlet_frame: n must be positive");
  return LagrangianFrame(CMatrix::Zero(n, n), CMatrix::Identity(n, n));
}

LagrangianFrame graph_frame(const CMatrix& s) {
  require_hermitian(s, kHermitianTol, "graph_frame");
  const CMatrix sym = (s + s.adjoint()) * 0.5;
  return LagrangianFrame(CMatrix::Identity(s.rows(), s.cols()), sym);
}

LagrangianFrame phi_frame(const BoundaryData& b, double lambda) {
  return graph_frame(b.robin_matrix(lambda));
}

CMatrix w_of(const LagrangianFrame& frame) {
  const LagrangianFrame q = frame.orthonormalized();
  return right_solve(q.X() + kI * q.Y(), q.X() - kI * q.Y());
}

CMatrix w_relative(const LagrangianFrame& frame1, const LagrangianFrame& frame2) {
  if (frame1.n() != frame2.n())
    throw Error(ErrorKind::InvalidArgument, "w_relative: frame dimensions differ");
  const LagrangianFrame a = frame1.orthonormalized();
  const LagrangianFrame b = frame2.orthonormalized();
  const CMatrix first = right_solve(a.X() + kI * a.Y(), a.X() - kI * a.Y());
  const CMatrix second = right_solve(b.X() - kI * b.Y(), b.X() + kI * b.Y());
  return -first * second;
}

double unitary_defect(const CMatrix& w) {
  return (w.adjoint() * w - CMatrix::Identity(w.cols(), w.cols())).norm();
}

double wrap_angle(double theta) {
  double t = std::remainder(theta, 2.0 * kPi);
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

Eigenphases unitary_eigenphases(const CMatrix& w) {
  require_square(w, "unitary_eigenphases");
  const Eigen::Index n = w.rows();
  const CMatrix id = CMatrix::Identity(n, n);

  std::vector<double> alphas = {0.0, kPi, 0.5 * kPi, -0.5 * kPi};
  const int fine = static_cast<int>(4 * n + 4);
  for (int k = 0; k < fine; ++k) alphas.push_back(2.0 * kPi * (k + 0.5) / fine);

  Eigenphases best;
  double best_kappa = std::numeric_limits<double>::infinity();
  for (const double alpha : alphas) {
    const CMatrix wa = std::polar(1.0, alpha) * w;
    const CMatrix plus = id + wa;
    Eigen::PartialPivLU<CMatrix> lu(plus);
    if (!(std::abs(lu.determinant()) > 1e-12)) continue;
    // K = i (I - Wa)(I + Wa)^{-1}; the two factors commute.
    CMatrix k = kI * right_solve(id - wa, plus);
    k = CMatrix((k + k.adjoint()) * 0.5);
    if (!k.allFinite()) continue;
    const auto eig = herm_eig(k);
    const double kappa = eig.values.cwiseAbs().maxCoeff();
    if (kappa < best_kappa) {
      best_kappa = kappa;
      best.phases.resize(n);
      for (Eigen::Index j = 0; j < n; ++j)
        best.phases(j) = wrap_angle(2.0 * std::atan(eig.values(j)) - alpha);
      best.vectors = eig.vectors;
    }
    if (kappa < 10.0) break;
  }
  if (!std::isfinite(best_kappa))
    throw Error(ErrorKind::InvalidArgument, "unitary_eigenphases: no usable Cayley rotation");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return best.phases(a) < best.phases(b); });
  Eigenphases out;
  out.phases.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.phases(j) = best.phases(order[j]);
    out.vectors.col(j) = best.vectors.col(order[j]);
  }
  return out;
}

int intersection_dim(const LagrangianFrame& frame1, const LagrangianFrame& frame2,
                     double angle_tol) {
  const Eigenphases e = unitary_eigenphases(w_relative(frame1, frame2));
  int count = 0;
  for (Eigen::Index j = 0; j < e.phases.size(); ++j)
    if (std::abs(e.phases(j)) >= kPi - angle_tol) ++count;
  return count;
}

RVector continue_phases(const RVector& prev_unwrapped, const RVector& new_wrapped,
                        double* max_jump) {
  const Eigen::Index n = prev_unwrapped.size();
  if (new_wrapped.size() != n)
    throw Error(ErrorKind::InvalidArgument, "continue_phases: strand count changed");
  std::vector<Eigen::Index> strands(static_cast<std::size_t>(n));
  std::iota(strands.begin(), strands.end(), Eigen::Index{0});
  RVector prev_wrapped(n);
  for (Eigen::Index j = 0; j < n; ++j) prev_wrapped(j) = wrap_angle(prev_unwrapped(j));
  std::sort(strands.begin(), strands.end(),
            [&](Eigen::Index a, Eigen::Index b) { return prev_wrapped(a) < prev_wrapped(b); });
  std::vector<double> target(new_wrapped.data(), new_wrapped.data() + n);
  std::sort(target.begin(), target.end());

  double best_cost = std::numeric_limits<double>::infinity();
  RVector best(n);
  for (Eigen::Index shift = 0; shift < n; ++shift) {
    RVector cand(n);
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index s = strands[static_cast<std::size_t>(i)];
      const double d = wrap_angle(target[static_cast<std::size_t>((i + shift) % n)] - prev_wrapped(s));
      cost = std::max(cost, std::abs(d));
      cand(s) = prev_unwrapped(s) + d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = cand;
    }
  }
  if (max_jump) *max_jump = best_cost;
  return best;
}

int phase_sheet(double theta, double angle_tol) {
  const double t = (theta - kPi) / (2.0 * kPi);
  const double r = std::round(t);
  if (std::abs(theta - kPi - 2.0 * kPi * r) <= angle_tol) return static_cast<int>(r);
  return static_cast<int>(std::floor(t));
}

}  // namespace qpencil
