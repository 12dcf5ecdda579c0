#pragma once

// Dense Hermitian kernel: Jacobi eigensolver, positive square roots, Morse
// counts, Loewner matrices and derivatives of spectral matrix functions.
//
// Everything is templated on the Eigen expression type so the same code
// serves real symmetric and complex Hermitian inputs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "qpencil/types.hpp"

namespace qpencil {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct EigenDecomposition {
  RVector values;                 // ascending
  DenseMatrix<Scalar> vectors;    // columns are orthonormal eigenvectors
};

struct MorseCount {
  int n_negative = 0;
  int n_zero = 0;

  int nonpositive() const { return n_negative + n_zero; }
  bool operator==(const MorseCount&) const = default;
};

/// Scalar function paired with its derivative, used by the Loewner machinery.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string name;
};

ScalarFunction sqrt_function();
ScalarFunction power_function(double p);
ScalarFunction identity_function();

struct LoewnerData {
  RVector nodes;
  RMatrix matrix;
};

struct CauchyDetCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& h) {
  if (h.size() == 0) return 0.0;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* where) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(where) + ": expected a non-empty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

/// Throws NotHermitian when |H - H*| exceeds tol relative to max(1, max|H_jk|).
template <typename Derived>
void require_hermitian(const Eigen::MatrixBase<Derived>& h, double tol, const char* where) {
  require_square(h, where);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double defect = hermitian_defect(h);
  if (!(defect <= tol * scale)) {
    throw Error(ErrorKind::NotHermitian, std::string(where) + ": Hermitian defect " +
                                             std::to_string(defect) + " exceeds tolerance");
  }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> herm_eig(const Eigen::MatrixBase<Derived>& h,
                                                      double herm_tol = kHermitianTol) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  using Eigen::numext::conj;
  using Eigen::numext::real;

  require_hermitian(h, herm_tol, "herm_eig");
  const Eigen::Index n = h.rows();
  Mat a = (h + h.adjoint()) * Scalar(0.5);
  Mat v = Mat::Identity(n, n);
  const double scale = a.norm();

  if (scale > 0.0) {
    for (int sweep = 0; sweep < 64; ++sweep) {
      double off = 0.0;
      for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
      if (std::sqrt(off) <= 1e-15 * scale) break;

      for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
          const double b = std::abs(a(p, q));
          if (b <= 1e-300 || b <= 1e-18 * scale) continue;
          const Scalar phase = a(p, q) / b;
          const double tau = (real(a(q, q)) - real(a(p, p))) / (2.0 * b);
          const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;
          const Scalar jpp = c;
          const Scalar jpq = s;
          const Scalar jqp = -s * conj(phase);
          const Scalar jqq = c * conj(phase);

          for (Eigen::Index k = 0; k < n; ++k) {
            const Scalar akp = a(k, p), akq = a(k, q);
            a(k, p) = akp * jpp + akq * jqp;
            a(k, q) = akp * jpq + akq * jqq;
            const Scalar vkp = v(k, p), vkq = v(k, q);
            v(k, p) = vkp * jpp + vkq * jqp;
            v(k, q) = vkp * jpq + vkq * jqq;
          }
          for (Eigen::Index k = 0; k < n; ++k) {
            const Scalar apk = a(p, k), aqk = a(q, k);
            a(p, k) = conj(jpp) * apk + conj(jqp) * aqk;
            a(q, k) = conj(jpq) * apk + conj(jqq) * aqk;
          }
          a(p, q) = Scalar(0);
          a(q, p) = Scalar(0);
          a(p, p) = Scalar(real(a(p, p)));
          a(q, q) = Scalar(real(a(q, q)));
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return real(a(x, x)) < real(a(y, y)); });

  EigenDecomposition<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = real(a(order[j], order[j]));
    out.vectors.col(j) = v.col(order[j]);
  }
  return out;
}

/// Largest absolute eigenvalue of a Hermitian matrix (its operator 2-norm).
template <typename Derived>
double hermitian_norm(const Eigen::MatrixBase<Derived>& h) {
  const auto eig = herm_eig(h);
  return eig.values.cwiseAbs().maxCoeff();
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& h) {
  return herm_eig(h).values(0);
}

/// Applies a real function to the spectrum: R f(D) R*.
template <typename Derived, typename F>
DenseMatrix<typename Derived::Scalar> spectral_apply(const Eigen::MatrixBase<Derived>& h, F&& f) {
  using Scalar = typename Derived::Scalar;
  const auto eig = herm_eig(h);
  RVector fd(eig.values.size());
  for (Eigen::Index j = 0; j < fd.size(); ++j) fd(j) = f(eig.values(j));
  DenseMatrix<Scalar> out =
      eig.vectors * fd.cast<Scalar>().asDiagonal() * eig.vectors.adjoint();
  return (out + out.adjoint()) * Scalar(0.5);
}

/// Positive square root of a positive definite Hermitian matrix.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> sqrt_pd(const Eigen::MatrixBase<Derived>& h,
                                              double pd_tol = kPdTol) {
  using Scalar = typename Derived::Scalar;
  const auto eig = herm_eig(h);
  if (!(eig.values(0) > pd_tol)) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "sqrt_pd: smallest eigenvalue " + std::to_string(eig.values(0)));
  }
  DenseMatrix<Scalar> out = eig.vectors * eig.values.cwiseSqrt().template cast<Scalar>().asDiagonal() *
                            eig.vectors.adjoint();
  return (out + out.adjoint()) * Scalar(0.5);
}

/// Counts eigenvalues below -zero_tol and within [-zero_tol, zero_tol].
template <typename Derived>
MorseCount morse_index(const Eigen::MatrixBase<Derived>& h, double zero_tol = kZeroTol) {
  const auto eig = herm_eig(h);
  MorseCount out;
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    if (eig.values(j) < -zero_tol)
      ++out.n_negative;
    else if (eig.values(j) <= zero_tol)
      ++out.n_zero;
  }
  return out;
}

LoewnerData loewner(const ScalarFunction& f, const RVector& nodes, double node_tol = kNodeTol);

/// d/dt f(A(t)) given A and A' = adot, via the Loewner (divided difference) formula.
template <typename DerivedA, typename DerivedB>
DenseMatrix<typename DerivedA::Scalar> matfun_derivative(const ScalarFunction& f,
                                                         const Eigen::MatrixBase<DerivedA>& a,
                                                         const Eigen::MatrixBase<DerivedB>& adot) {
  using Scalar = typename DerivedA::Scalar;
  require_hermitian(adot, kHermitianTol, "matfun_derivative");
  const auto eig = herm_eig(a);
  const LoewnerData l = loewner(f, eig.values);
  const DenseMatrix<Scalar> p = eig.vectors.adjoint() * adot * eig.vectors;
  DenseMatrix<Scalar> out =
      eig.vectors * p.cwiseProduct(l.matrix.cast<Scalar>()) * eig.vectors.adjoint();
  return (out + out.adjoint()) * Scalar(0.5);
}

CauchyDetCheck cauchy_det_check(const RVector& nodes);

/// Determinant by Gaussian elimination with partial pivoting.
template <typename Derived>
typename Derived::Scalar det_complex(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_square(m, "det_complex");
  DenseMatrix<Scalar> a = m;
  const Eigen::Index n = a.rows();
  Scalar det = Scalar(1);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(a(k, k));
    for (Eigen::Index r = k + 1; r < n; ++r) {
      if (std::abs(a(r, k)) > best) {
        best = std::abs(a(r, k));
        piv = r;
      }
    }
    if (best == 0.0) return Scalar(0);
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index r = k + 1; r < n; ++r) {
      const Scalar factor = a(r, k) / a(k, k);
      a.row(r).tail(n - k) -= factor * a.row(k).tail(n - k);
    }
  }
  return det;
}

/// All complex roots of sum_k coeffs[k] z^k (Aberth–Ehrlich iteration).
/// Returns false through `converged` when the iteration budget runs out.
std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs, bool* converged = nullptr);

}  // namespace qpencil
