#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "qpencil/linalg.hpp"
#include "support.hpp"

using namespace qpencil;
using qtest::Gen;

namespace {

double rel_residual(const CMatrix& h, const EigenDecomposition<Complex>& e) {
  const CMatrix rec = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
  return (h - rec).norm() / std::max(1.0, h.norm());
}

}  // namespace

TEST_CASE("herm_eig on identity and diagonal input") {
  const auto id = herm_eig(CMatrix::Identity(2, 2));
  CHECK(id.values(0) == doctest::Approx(1.0));
  CHECK(id.values(1) == doctest::Approx(1.0));
  CHECK((id.vectors.cwiseAbs() - RMatrix::Identity(2, 2)).norm() < 1e-14);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  const auto e = herm_eig(d);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(4.0));
}

TEST_CASE("herm_eig matches characteristic polynomial roots found by bisection") {
  Gen g(11);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix h = g.hermitian(4);
    const auto e = herm_eig(h);
    const double bound = h.norm() + 1.0;
    auto charpoly = [&](double t) {
      return qtest::cofactor_det(CMatrix(h - t * CMatrix::Identity(4, 4))).real();
    };
    const auto roots = qtest::scan_roots(charpoly, -bound, bound, 4000);
    REQUIRE(roots.size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(roots[static_cast<std::size_t>(j)] - e.values(j)) < 1e-9);
  }
}

TEST_CASE("herm_eig reconstruction and unitarity for n up to 16") {
  Gen g(12);
  for (int n = 1; n <= 16; ++n) {
    const CMatrix h = g.hermitian(n);
    const auto e = herm_eig(h);
    CHECK(rel_residual(h, e) <= 1e-10);
    CHECK((e.vectors.adjoint() * e.vectors - CMatrix::Identity(n, n)).norm() <= 1e-10);
    CHECK(std::is_sorted(e.values.data(), e.values.data() + n));
  }
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
  CMatrix m(2, 2);
  m << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(herm_eig(m), Error);
  try {
    herm_eig(m);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotHermitian);
  }
}

TEST_CASE("sqrt_pd examples") {
  CHECK((sqrt_pd(CMatrix(4.0 * CMatrix::Identity(3, 3))) - 2.0 * CMatrix::Identity(3, 3)).norm() < 1e-14);
  CMatrix nine(1, 1);
  nine(0, 0) = 9.0;
  CHECK(sqrt_pd(nine)(0, 0).real() == doctest::Approx(3.0));
  CMatrix a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const CMatrix r = sqrt_pd(a);
  CHECK((r * r - a).norm() <= 1e-12);
  CHECK(min_eigenvalue(r) > 0.0);
}

TEST_CASE("sqrt_pd squares back for random positive definite input") {
  Gen g(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 6);
    const CMatrix h = g.positive_definite(n);
    const CMatrix r = sqrt_pd(h);
    CHECK((r * r - h).norm() <= 1e-10 * h.norm());
    CHECK(hermitian_defect(r) <= 1e-12);
  }
}

TEST_CASE("sqrt_pd rejects indefinite input") {
  CMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(sqrt_pd(m), Error);
}

TEST_CASE("morse_index examples") {
  CMatrix s(1, 1);
  s(0, 0) = 1.0 - 18.0;
  CHECK(morse_index(s) == MorseCount{1, 0});
  CMatrix c(2, 2);
  c << 18.0, 2.0, 2.0, 25.0;
  CHECK(morse_index(CMatrix(CMatrix::Identity(2, 2) - c)) == MorseCount{2, 0});
  CHECK(morse_index(CMatrix(CMatrix::Zero(3, 3))) == MorseCount{0, 3});
}

TEST_CASE("loewner matrix examples") {
  RVector nodes(2);
  nodes << 1.0, 4.0;
  const auto l = loewner(sqrt_function(), nodes);
  CHECK(l.matrix(0, 0) == doctest::Approx(0.5));
  CHECK(l.matrix(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(l.matrix(1, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(l.matrix(1, 1) == doctest::Approx(0.25));

  RVector any(3);
  any << -2.0, 0.5, 7.0;
  const auto ones = loewner(identity_function(), any);
  CHECK((ones.matrix - RMatrix::Ones(3, 3)).norm() < 1e-14);

  RVector three(3);
  three << 1.0, 4.0, 9.0;
  const auto l3 = loewner(sqrt_function(), three);
  for (int k = 1; k <= 3; ++k) CHECK(l3.matrix.topLeftCorner(k, k).determinant() > 0.0);
}

TEST_CASE("loewner uses the derivative at the midpoint for coincident nodes") {
  RVector nodes(2);
  nodes << 4.0, 4.0 + 1e-14;
  const auto l = loewner(sqrt_function(), nodes);
  CHECK(l.matrix(0, 1) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(l.matrix == l.matrix.transpose());
}

TEST_CASE("loewner matrix of sqrt is positive semidefinite on random nodes") {
  Gen g(14);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(2, 8);
    const RVector nodes = g.distinct_positive(n, 0.01, 100.0);
    const auto l = loewner(sqrt_function(), nodes);
    CHECK(min_eigenvalue(CMatrix(l.matrix.cast<Complex>())) >= -1e-12);
  }
}

TEST_CASE("matfun_derivative examples") {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 4.0;
  CMatrix ad = CMatrix::Zero(2, 2);
  ad(0, 0) = 3.0;
  ad(1, 1) = 5.0;
  const CMatrix d = matfun_derivative(sqrt_function(), a, ad);
  CHECK(d(0, 0).real() == doctest::Approx(1.5));
  CHECK(d(1, 1).real() == doctest::Approx(1.25));
  CHECK(std::abs(d(0, 1)) < 1e-14);

  Gen g(15);
  const CMatrix h = g.hermitian(3);
  const CMatrix hd = g.hermitian(3);
  CHECK((matfun_derivative(identity_function(), h, hd) - hd).norm() < 1e-12);
}

TEST_CASE("matfun_derivative of sqrt matches central differences") {
  Gen g(16);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const CMatrix a = g.positive_definite(3, 0.5);
    const CMatrix ad = g.hermitian(3);
    const CMatrix fd = (sqrt_pd(CMatrix(a + h * ad)) - sqrt_pd(CMatrix(a - h * ad))) / (2.0 * h);
    CHECK((matfun_derivative(sqrt_function(), a, ad) - fd).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("matfun_derivative of t^p converges at second order") {
  Gen g(17);
  for (const double p : {0.25, 0.5, 0.8, 1.0}) {
    const CMatrix a = g.positive_definite(3, 0.5);
    const CMatrix ad = g.hermitian(3);
    const ScalarFunction f = power_function(p);
    const CMatrix exact = matfun_derivative(f, a, ad);
    auto apply = [&](const CMatrix& m) { return spectral_apply(m, [&](double t) { return f.value(t); }); };
    auto err = [&](double h) {
      const CMatrix fd = (apply(CMatrix(a + h * ad)) - apply(CMatrix(a - h * ad))) / (2.0 * h);
      return (exact - fd).norm();
    };
    const double e1 = err(1e-2);
    const double e2 = err(5e-3);
    if (p == 1.0) {
      CHECK(e1 < 1e-10);
    } else {
      CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    }
  }
}

TEST_CASE("derivative of sqrt M is positive definite when M and M' are") {
  Gen g(18);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(1, 5);
    const CMatrix m = g.positive_definite(n, 0.05);
    const CMatrix md = g.positive_definite(n, 0.05);
    CHECK(min_eigenvalue(matfun_derivative(sqrt_function(), m, md)) > 0.0);
  }
}

TEST_CASE("cauchy_det_check examples") {
  RVector two(2);
  two << 1.0, 4.0;
  const auto c2 = cauchy_det_check(two);
  CHECK(c2.lhs == doctest::Approx(1.0 / 72.0));
  CHECK(c2.rhs == doctest::Approx(1.0 / 72.0));

  RVector one(1);
  one << 1.0;
  const auto c1 = cauchy_det_check(one);
  CHECK(c1.lhs == doctest::Approx(0.5));
  CHECK(c1.rhs == doctest::Approx(0.5));

  RVector five(5);
  five << 1.0, 4.0, 9.0, 16.0, 25.0;
  const auto c5 = cauchy_det_check(five);
  CHECK(std::abs(c5.lhs - c5.rhs) <= 1e-12 * std::abs(c5.lhs));
}

TEST_CASE("cauchy determinant identity on random integer node sets") {
  Gen g(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = g.integer(1, 6);
    RVector nodes(n);
    for (int i = 0; i < n; ++i) {
      bool fresh = false;
      while (!fresh) {
        nodes(i) = g.integer(1, 100);
        fresh = true;
        for (int j = 0; j < i; ++j) fresh = fresh && nodes(i) != nodes(j);
      }
    }
    const auto c = cauchy_det_check(nodes);
    CHECK(std::abs(c.lhs - c.rhs) <= 1e-10 * std::abs(c.rhs));
  }
}

TEST_CASE("det_complex examples and cofactor agreement") {
  CHECK(std::abs(det_complex(CMatrix(CMatrix::Identity(3, 3))) - Complex(1.0)) < 1e-15);
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = Complex(0.0, 3.0);
  CHECK(std::abs(det_complex(d) - Complex(0.0, 6.0)) < 1e-14);
  CMatrix sing(2, 2);
  sing << 1.0, 2.0, 2.0, 4.0;
  CHECK(std::abs(det_complex(sing)) < 1e-14);

  Gen g(20);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix m = g.matrix(4);
    const Complex ref = qtest::cofactor_det(m);
    CHECK(std::abs(det_complex(m) - ref) <= 1e-12 * std::abs(ref));
  }
}

TEST_CASE("polynomial_roots recovers known roots") {
  // (z - 1)(z - 2)(z + 3) = z^3 - 7z + 6, coefficients lowest degree first.
  bool ok = false;
  auto roots = polynomial_roots({6.0, -7.0, 0.0, 1.0}, &ok);
  CHECK(ok);
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  REQUIRE(roots.size() == 3);
  CHECK(std::abs(roots[0] - Complex(-3.0)) < 1e-10);
  CHECK(std::abs(roots[1] - Complex(1.0)) < 1e-10);
  CHECK(std::abs(roots[2] - Complex(2.0)) < 1e-10);

  // 2 z^2 + z + 2 has roots (-1 +- i sqrt(15)) / 4.
  const auto q = polynomial_roots({2.0, 1.0, 2.0});
  REQUIRE(q.size() == 2);
  for (const auto& z : q) CHECK(std::abs(z.real() + 0.25) < 1e-12);
}

TEST_CASE("polynomial_roots converges on multiple roots") {
  // (z + 0.5)^2 (z + 2)^2 = z^4 + 5 z^3 + 8.25 z^2 + 5 z + 1.
  bool ok = false;
  const auto roots = polynomial_roots({1.0, 5.0, 8.25, 5.0, 1.0}, &ok);
  CHECK(ok);
  REQUIRE(roots.size() == 4);
  int near_half = 0, near_two = 0;
  for (const auto& z : roots) {
    near_half += std::abs(z + 0.5) < 1e-6;
    near_two += std::abs(z + 2.0) < 1e-6;
  }
  CHECK(near_half == 2);
  CHECK(near_two == 2);
}
