#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "qpencil/frameflow.hpp"
#include "qpencil/maslov.hpp"
#include "qpencil/problems.hpp"
#include "support.hpp"

using namespace qpencil;
using qtest::Gen;

namespace {

int total(const std::vector<ConjugatePoint>& cs) {
  int t = 0;
  for (const auto& c : cs) t += c.multiplicity;
  return t;
}

FramePath x_path(const PencilProblem& p, double lambda, const FlowOptions& opts = {}) {
  const Truncation t = find_truncation(p);
  const double x_hi = p.is_half_line() ? 0.0 : t.x_max;
  return propagate_in_x(p, lambda, t.x_min, x_hi, unstable_graph_frame(p, lambda), opts, Reference::natural(p));
}

/// x-derivative of a frame under y' = A y, A = [[0, I], [lambda f1 + lambda^2 f2 - V, 0]].
CMatrix x_rate(const PencilProblem& p, const LagrangianFrame& f, double x, double lambda) {
  const CMatrix k = pencil_matrix(p.coeffs(x), lambda);
  CMatrix rate(2 * f.n(), f.n());
  rate.topRows(f.n()) = f.Y();
  rate.bottomRows(f.n()) = k * f.X();
  return rate;
}

void check_hygiene(const FramePath& path) {
  CHECK(path.max_lagrangian_defect() <= 1e-8);
  CHECK(path.max_unitary_defect() <= 1e-9);
  for (std::size_t i = 1; i < path.samples.size(); ++i) CHECK(path.samples[i].param != path.samples[i - 1].param);
}

}  // namespace

TEST_CASE("constant coefficients keep the plane fixed") {
  const auto p = builtin_problem("constant");
  const auto path = propagate_in_x(p, 0.0, -20.0, 20.0, unstable_graph_frame(p, 0.0), {}, Reference::dirichlet());
  CHECK(detect_crossings(path).empty());
  CHECK(path_maslov(path) == 0);
  const CMatrix w0 = path.samples.front().trace.W;
  for (const auto& s : path.samples) CHECK((s.trace.W - w0).norm() <= 1e-9);
  check_hygiene(path);
}

TEST_CASE("second example has three conjugate points at lambda 0") {
  const auto p = builtin_problem("example2");
  const auto path = x_path(p, 0.0);
  const auto cs = detect_crossings(path);
  CHECK(total(cs) == 3);
  for (const auto& c : cs) CHECK(c.direction == -1);
  CHECK(path_maslov(path) == -3);
  check_hygiene(path);
}

TEST_CASE("fourth example has five conjugate points at lambda 0") {
  const auto p = builtin_problem("example4");
  const auto path = x_path(p, 0.0);
  const auto cs = detect_crossings(path);
  CHECK(total(cs) == 5);
  for (const auto& c : cs) CHECK(c.direction == -1);
  check_hygiene(path);
}

TEST_CASE("third example x-path against the Robin plane has index 1") {
  const auto p = builtin_problem("example3");
  const auto path = x_path(p, 0.0);
  CHECK(path_maslov(path) == 1);
  check_hygiene(path);
}

TEST_CASE("lambda paths") {
  SUBCASE("asymptotic frames never meet the Dirichlet plane") {
    const auto p = builtin_problem("example2");
    const auto t = find_truncation(p);
    const auto path = asymptotic_lambda_path(p, t.x_min, 0.0, 0.8, {}, Reference::dirichlet());
    CHECK(detect_crossings(path).empty());
    CHECK(path_maslov(path) == 0);
  }
  SUBCASE("first example top shelf has index 0") {
    const auto p = builtin_problem("example1");
    const auto t = find_truncation(p);
    const double lam_inf = problem_lambda_inf(p, t);
    const auto path = propagate_in_lambda(p, 0.0, t.x_min, 0.0, lam_inf, {}, Reference::phi());
    CHECK(path_maslov(path) == 0);
    check_hygiene(path);
  }
  SUBCASE("second example top shelf turns counterclockwise three times") {
    const auto p = builtin_problem("example2");
    const auto t = find_truncation(p);
    const double lam_inf = problem_lambda_inf(p, t);
    const auto path = propagate_in_lambda(p, 8.0, t.x_min, 0.0, lam_inf, {}, Reference::dirichlet());
    const auto cs = detect_crossings(path);
    CHECK(total(cs) == 3);
    for (const auto& c : cs) CHECK(c.direction == 1);
    CHECK(path_maslov(path) == 3);
    check_hygiene(path);
  }
}

TEST_CASE("crossing form at a left-shelf conjugate point with negative potential") {
  const auto p = builtin_problem("example2");
  const auto path = x_path(p, 0.0);
  const auto cs = detect_crossings(path);
  REQUIRE(!cs.empty());
  Gen g(41);
  for (const auto& c : cs) {
    const LagrangianFrame f = path.frame_at(c.param);
    const CMatrix rate = x_rate(p, f, c.param, 0.0);
    const auto e = unitary_eigenphases(w_of(f));
    // Eigenvector closest to -1.
    Eigen::Index j = 0;
    (e.phases.array().abs() - kPi).abs().minCoeff(&j);
    const CVector w = e.vectors.col(j);
    const double q = crossing_form(f, rate, w);
    const CVector u = (f.X() - Complex(0.0, 1.0) * f.Y()).inverse() * w;
    CHECK(q < 0.0);
    CHECK(q == doctest::Approx(-2.0 * (f.Y() * u).squaredNorm()).epsilon(1e-4));
    const Complex s(g.normal(), g.normal());
    CHECK(crossing_form(f, rate, CVector(s * w)) == doctest::Approx(std::norm(s) * q).epsilon(1e-10));
  }
}

TEST_CASE("crossing form is positive when X*Y' - Y*X' is positive definite") {
  // Frames on a Dirichlet conjugate point: X = U diag(0, d) U*, Y = U diag(1, s) U*.
  // The rate has Y' = 0 and X' = -Y^{-*} P, so X*Y' - Y*X' = P, the sign the
  // lambda-derivative takes when f1 + 2 lambda f2 > 0.  The form's sign is
  // compared with the motion of the eigenphase of w_of leaving -1.
  Gen g(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 3);
    const CMatrix u = positive_qr(g.matrix(n));
    RVector dx(n), dy(n);
    for (int j = 0; j < n; ++j) {
      dx(j) = j == 0 ? 0.0 : g.uniform(0.5, 2.0);
      dy(j) = j == 0 ? 1.0 : g.uniform(-2.0, 2.0);
      if (j > 0 && std::abs(dy(j)) < 0.1) dy(j) = 0.5;
    }
    const CMatrix x = u * dx.cast<Complex>().asDiagonal() * u.adjoint();
    const CMatrix y = u * dy.cast<Complex>().asDiagonal() * u.adjoint();
    const LagrangianFrame f(x, y);
    const CMatrix pd = g.positive_definite(n, 0.2);
    CMatrix rate = CMatrix::Zero(2 * n, n);
    rate.topRows(n) = -y.adjoint().inverse() * pd;

    const auto e0 = unitary_eigenphases(w_of(f));
    Eigen::Index j = 0;
    (e0.phases.array().abs() - kPi).abs().minCoeff(&j);
    const CVector w = e0.vectors.col(j);
    const double q = crossing_form(f, rate, w);
    CHECK(q > 0.0);

    const double h = 1e-6;
    const LagrangianFrame moved(CMatrix(x + h * rate.topRows(n)), y);
    const auto e1 = unitary_eigenphases(w_of(moved));
    double dphase = 10.0;
    for (int k = 0; k < n; ++k) {
      const double d = wrap_angle(e1.phases(k) - kPi);
      if (std::abs(d) < std::abs(dphase)) dphase = d;
    }
    CHECK(dphase > 0.0);
  }
}

TEST_CASE("recorded unitaries do not depend on the frame basis") {
  const auto p = builtin_problem("example4");
  const auto path = x_path(p, 0.0);
  Gen g(43);
  for (std::size_t i = 0; i < path.samples.size(); i += std::max<std::size_t>(1, path.samples.size() / 40)) {
    const auto& s = path.samples[i];
    const CMatrix basis = g.matrix(p.n()) + 3.0 * CMatrix::Identity(p.n(), p.n());
    const auto ref = path.reference_at(s.param);
    CHECK((w_relative(s.frame.rebased(basis), ref) - s.trace.W).norm() <= 1e-10);
    CHECK((w_relative(s.frame.orthonormalized(), ref) - s.trace.W).norm() <= 1e-10);
  }
}

TEST_CASE("halving integrator tolerances keeps counts and moves crossings little") {
  for (const std::string name : {"example2", "example4", "example3"}) {
    CAPTURE(name);
    const auto p = builtin_problem(name);
    FlowOptions tight;
    tight.integrator.rel_tol *= 0.5;
    tight.integrator.abs_tol *= 0.5;
    const auto a = detect_crossings(x_path(p, 0.0));
    const auto b = detect_crossings(x_path(p, 0.0, tight));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].multiplicity == b[i].multiplicity);
      CHECK(std::abs(a[i].param - b[i].param) < 10.0 * tight.param_tol);
    }
  }
}

TEST_CASE("path CSV layout") {
  const auto p = builtin_problem("example4");
  const auto path = x_path(p, 0.0);
  std::ostringstream os;
  write_path_csv(path, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "param,phase_1,phase_2,lagrangian_defect");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == path.samples.size());
}
