#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qpencil/pencil.hpp"
#include "qpencil/problems.hpp"
#include "support.hpp"

using namespace qpencil;
using qtest::Gen;

namespace {

CMatrix scalar(double v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

Limits scalar_limits(double v, double f1, double f2) { return Limits{scalar(v), scalar(f1), scalar(f2)}; }

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  return g;
}

/// Constant scalar whole-line problem with the given sup norms.
PencilProblem constant_whole(double v, double f1, double f2, double delta) {
  const Limits l = scalar_limits(v, f1, f2);
  CoefficientField field(1, [l](double) { return l; }, l, l, delta);
  return PencilProblem{"const", field, WholeLine{}};
}

/// Largest real part among roots of a lambda^2 + b lambda + c by the quadratic formula.
double max_re_root(double a, double b, double c) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -b / (2.0 * a);
  return (-b + std::sqrt(disc)) / (2.0 * a);
}

}  // namespace

TEST_CASE("hyperbolicity scalar examples") {
  const auto ok = check_hyperbolicity(scalar_limits(-1.0, 1.0, 2.0), grid(0.0, 10.0, 200));
  CHECK(ok.ok());
  REQUIRE(ok.has_gamma);
  CHECK(ok.gamma_estimate == doctest::Approx(-0.25).epsilon(1e-8));

  const auto bad = check_hyperbolicity(scalar_limits(1.0, 1.0, 1.0), {0.0});
  CHECK_FALSE(bad.ok());
  CHECK(bad.gamma_estimate == doctest::Approx((-1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-8));
}

TEST_CASE("hyperbolicity gamma matches the quadratic formula on random scalar limits") {
  Gen g(31);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = g.uniform(-3.0, 1.0);
    const double f1 = g.uniform(0.2, 3.0);
    const double f2 = g.uniform(0.2, 3.0);
    const auto mus = grid(0.0, 5.0, 60);
    double expected = -1e300;
    for (double mu : mus) expected = std::max(expected, max_re_root(f2, f1, mu * mu - v));
    const auto r = check_hyperbolicity(scalar_limits(v, f1, f2), mus);
    CHECK(r.gamma_estimate == doctest::Approx(expected).epsilon(1e-7));
    CHECK(r.ok() == (expected <= -1e-3));
  }
}

TEST_CASE("diagonal limits decouple into scalar checks") {
  Gen g(32);
  for (int trial = 0; trial < 20; ++trial) {
    const double v1 = g.uniform(-2.0, 0.5), v2 = g.uniform(-2.0, 0.5);
    const double a1 = g.uniform(0.5, 2.0), a2 = g.uniform(0.5, 2.0);
    const double b1 = g.uniform(0.5, 2.0), b2 = g.uniform(0.5, 2.0);
    Limits l{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    l.V(0, 0) = v1, l.V(1, 1) = v2;
    l.f1(0, 0) = a1, l.f1(1, 1) = a2;
    l.f2(0, 0) = b1, l.f2(1, 1) = b2;
    const auto mus = grid(0.0, 4.0, 50);
    const auto both = check_hyperbolicity(l, mus);
    const auto s1 = check_hyperbolicity(scalar_limits(v1, a1, b1), mus);
    const auto s2 = check_hyperbolicity(scalar_limits(v2, a2, b2), mus);
    CHECK(both.ok() == (s1.ok() && s2.ok()));
    CHECK(both.gamma_estimate == doctest::Approx(std::max(s1.gamma_estimate, s2.gamma_estimate)).epsilon(1e-7));
  }
}

TEST_CASE("hyperbolicity holds for the example limits") {
  for (const std::string name : {"example1", "example2", "example3", "example4"}) {
    CAPTURE(name);
    const auto p = builtin_problem(name);
    const auto r = check_hyperbolicity(p.coeffs.minus(), default_mu_grid(p.coeffs.minus(), 2.0));
    CHECK(r.ok());
    CHECK(r.gamma_estimate <= -0.2);
  }
}

TEST_CASE("boundary assumption examples") {
  const auto lam = grid(0.0, 5.0, 21);
  CHECK(check_boundary_assumptions(BoundaryData::linear(scalar(18.0), scalar(-9.0)), lam).ok());
  CHECK(check_boundary_assumptions(
            BoundaryData::linear(CMatrix(CMatrix::Identity(2, 2)), CMatrix(-9.0 * CMatrix::Identity(2, 2))),
            lam)
            .ok());
  CHECK_FALSE(check_boundary_assumptions(BoundaryData::linear(scalar(18.0), scalar(1.0)), lam).ok());
}

TEST_CASE("custom phi is reported unverified rather than failed") {
  const auto b = BoundaryData::custom(scalar(1.0), [](Complex l) { return scalar(1.0) * (-l - l * l); });
  const auto r = check_boundary_assumptions(b, grid(0.0, 2.0, 11));
  bool any_unverified = false;
  for (const auto& [name, v] : r.verdicts) any_unverified = any_unverified || v == Verdict::Unverified;
  CHECK(any_unverified);
  CHECK(r.ok());
}

TEST_CASE("lambda_max examples") {
  const auto p = builtin_problem("example2");
  const auto t = find_truncation(p);
  CHECK(lambda_max(p, default_sample_grid(p, t)) == doctest::Approx(1.25 * std::sqrt(2.0) / 2.0).epsilon(1e-6));

  // Half-line with c = 0: nu = -||V||, so the bound reduces to sqrt(||f2|| ||V||) / delta.
  const Limits l = scalar_limits(-1.0, 1.0, 2.0);
  CoefficientField field(1, [l](double) { return l; }, l, std::nullopt, 2.0);
  const PencilProblem half{"c0", field, HalfLine{BoundaryData::linear(scalar(0.0), scalar(-1.0))}};
  const auto hg = grid(-50.0, 0.0, 101);
  CHECK(lambda_max(half, hg) == doctest::Approx(1.25 * std::sqrt(2.0) / 2.0).epsilon(1e-9));

  const auto base = constant_whole(-1.0, 1.0, 2.0, 2.0);
  const auto scaled = constant_whole(-1.0, 1.0, 8.0, 8.0);
  const auto g = grid(-10.0, 10.0, 101);
  CHECK(lambda_max(scaled, g) == doctest::Approx(0.5 * lambda_max(base, g)));
  CHECK_THROWS_AS(lambda_max(base, {}), Error);
}

TEST_CASE("lambda_max is invariant under translation of the sampling grid") {
  const auto p = builtin_problem("example2");
  const auto t = find_truncation(p);
  auto g = default_sample_grid(p, t);
  const double ref = lambda_max(p, g);
  // Any grid reaching the peak at x = 0 and both tails gives the same sup norms.
  for (double shift : {-0.5, 0.25}) {
    std::vector<double> moved = g;
    for (double& x : moved) x += shift;
    moved.push_back(0.0);
    CHECK(lambda_max(p, moved) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("asymptotic decomposition examples") {
  const auto p = constant_whole(-1.0, 1.0, 2.0, 2.0);
  const auto d0 = asymptotic_decomposition(p, Side::Minus, 0.0);
  CHECK(d0.nus(0) == doctest::Approx(1.0));
  CHECK(d0.mus(0) == doctest::Approx(1.0));
  CHECK(std::abs(d0.r_vectors(0, 0)) == doctest::Approx(1.0));
  const auto d1 = asymptotic_decomposition(p, Side::Minus, 1.0);
  CHECK(d1.nus(0) == doctest::Approx(4.0));
  CHECK(d1.mus(0) == doctest::Approx(2.0));

  const Limits l{CMatrix(-CMatrix::Identity(2, 2)), CMatrix(CMatrix::Identity(2, 2)),
                 CMatrix(2.0 * CMatrix::Identity(2, 2))};
  CoefficientField field(2, [l](double) { return l; }, l, l, 2.0);
  const PencilProblem p2{"id", field, WholeLine{}};
  const auto d2 = asymptotic_decomposition(p2, Side::Minus, 0.0);
  CHECK((d2.nus - RVector::Ones(2)).norm() < 1e-14);
  CHECK((d2.r_vectors.adjoint() * d2.r_vectors - CMatrix::Identity(2, 2)).norm() < 1e-14);

  const auto f = unstable_frame_at_minus_infinity(p, 0.0);
  CHECK(f.X()(0, 0).real() == doctest::Approx(std::abs(f.Y()(0, 0))));
  const auto f2 = unstable_frame_at_minus_infinity(p2, 0.0);
  CHECK((f2.X() - f2.Y()).norm() < 1e-14);
  CHECK(f2.lagrangian_defect() < 1e-14);
}

TEST_CASE("asymptotic decomposition loses hyperbolicity when nu is not positive") {
  const auto p = constant_whole(1.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(asymptotic_decomposition(p, Side::Minus, 0.0), Error);
}

TEST_CASE("asymptotic decomposition reconstructs the pencil and grows in lambda") {
  Gen g(33);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(1, 3);
    const auto p = random_problem(static_cast<std::uint64_t>(trial), RandomProblemOptions{n, false, trial % 2 == 1, true});
    const auto& m = p.coeffs.minus();
    double prev = -1.0;
    for (double lam : {0.0, 0.3, 0.7, 1.5, 3.0}) {
      const auto d = asymptotic_decomposition(p, Side::Minus, lam);
      const CMatrix rec = d.r_vectors * d.nus.cast<Complex>().asDiagonal() * d.r_vectors.adjoint();
      CHECK((rec - pencil_matrix(m, lam)).norm() <= 1e-10 * std::max(1.0, rec.norm()));
      CHECK((d.mus.array().square() - d.nus.array()).abs().maxCoeff() <= 1e-12 * d.nus.maxCoeff());
      CHECK(d.nus.minCoeff() > prev);
      prev = d.nus.minCoeff();
      CHECK(unstable_frame_at_minus_infinity(p, lam).lagrangian_defect() <= 1e-12);
    }
  }
}

TEST_CASE("coefficient checks and truncation on the examples") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto p = builtin_problem(name);
    CHECK_NOTHROW(validate_problem(p));
    CHECK(check_assumptions(p).ok());
    const auto t = find_truncation(p);
    CHECK(t.x_min < 0.0);
    const auto far = p.coeffs(t.x_min);
    const auto& lim = p.coeffs.minus();
    CHECK((far.V - lim.V).norm() + (far.f1 - lim.f1).norm() + (far.f2 - lim.f2).norm() <= 1e-8);
  }
}

TEST_CASE("whole-line problems require both limits") {
  const Limits l = scalar_limits(-1.0, 1.0, 2.0);
  CoefficientField field(1, [l](double) { return l; }, l, std::nullopt, 2.0);
  const PencilProblem p{"no-plus", field, WholeLine{}};
  CHECK_THROWS_AS(validate_problem(p), Error);
}
