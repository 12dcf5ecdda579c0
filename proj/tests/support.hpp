#pragma once

// Hand-rolled generators and small independent oracles shared by the tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qpencil/types.hpp"

namespace qtest {

using qpencil::CMatrix;
using qpencil::Complex;
using qpencil::CVector;
using qpencil::RVector;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  CMatrix matrix(int n, bool complex_entries = true) {
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = Complex(normal(), complex_entries ? normal() : 0.0);
    return a;
  }
  CMatrix hermitian(int n, bool complex_entries = true) {
    const CMatrix a = matrix(n, complex_entries);
    return 0.5 * (a + a.adjoint());
  }
  /// Hermitian positive definite with smallest eigenvalue at least `floor`.
  CMatrix positive_definite(int n, double floor = 0.1, bool complex_entries = true) {
    const CMatrix a = matrix(n, complex_entries);
    return a * a.adjoint() + floor * CMatrix::Identity(n, n);
  }
  CVector vector(int n) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(normal(), normal());
    return v;
  }
  RVector distinct_positive(int n, double lo, double hi) {
    RVector d(n);
    for (int i = 0; i < n; ++i) {
      bool fresh = false;
      while (!fresh) {
        d(i) = uniform(lo, hi);
        fresh = true;
        for (int j = 0; j < i; ++j) fresh = fresh && std::abs(d(i) - d(j)) > 1e-3;
      }
    }
    return d;
  }

 private:
  std::mt19937_64 rng_;
};

/// Laplace cofactor expansion along the first row; exponential cost, small n only.
inline Complex cofactor_det(const CMatrix& m) {
  const auto n = m.rows();
  if (n == 1) return m(0, 0);
  Complex total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    CMatrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    }
    total += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
  }
  return total;
}

/// Roots of the real function p on [lo, hi] by sign scanning and bisection.
template <typename F>
std::vector<double> scan_roots(F&& p, double lo, double hi, int steps) {
  std::vector<double> roots;
  double a = lo;
  double fa = p(a);
  for (int i = 1; i <= steps; ++i) {
    const double b = lo + (hi - lo) * i / steps;
    const double fb = p(b);
    if ((fa < 0.0) != (fb < 0.0)) {
      double l = a, r = b, fl = fa;
      for (int k = 0; k < 200 && r - l > 1e-14 * std::max(1.0, std::abs(l)); ++k) {
        const double mid = 0.5 * (l + r);
        const double fm = p(mid);
        if ((fm < 0.0) == (fl < 0.0)) {
          l = mid;
          fl = fm;
        } else {
          r = mid;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace qtest
