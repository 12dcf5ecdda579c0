#include "qpencil/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "qpencil/linalg.hpp"

namespace qpencil {

using nlohmann::json;

namespace {

CMatrix scalar_matrix(int n, double v) { return CMatrix::Identity(n, n) * v; }

Limits constant_limits(CMatrix V, CMatrix f1, CMatrix f2) {
  return Limits{std::move(V), std::move(f1), std::move(f2)};
}

double min_eig(const CMatrix& m) { return min_eigenvalue(CMatrix(0.5 * (m + m.adjoint()))); }

PencilProblem example1() {
  auto eval = [](double x) {
    CMatrix V(1, 1);
    V(0, 0) = -1.0 - (815.0 + 219.0 * std::cos(1.8 * x)) * std::exp(0.1 * x);
    return CoefficientSample{V, scalar_matrix(1, 1.0), scalar_matrix(1, 2.0)};
  };
  Limits minus = constant_limits(scalar_matrix(1, -1.0), scalar_matrix(1, 1.0), scalar_matrix(1, 2.0));
  CoefficientField field(1, eval, minus, std::nullopt, 2.0, 10.0);
  auto b = BoundaryData::linear(scalar_matrix(1, 18.0), scalar_matrix(1, -9.0));
  return PencilProblem{"example1", std::move(field), HalfLine{b}};
}

PencilProblem example2() {
  auto eval = [](double x) {
    CMatrix V(1, 1);
    V(0, 0) = -1.0 + 1.8 * std::exp(-0.06 * std::abs(x));
    return CoefficientSample{V, scalar_matrix(1, 1.0), scalar_matrix(1, 2.0)};
  };
  Limits lim = constant_limits(scalar_matrix(1, -1.0), scalar_matrix(1, 1.0), scalar_matrix(1, 2.0));
  CoefficientField field(1, eval, lim, lim, 2.0, 1.0 / 0.06);
  return PencilProblem{"example2", std::move(field), WholeLine{}};
}

PencilProblem example3() {
  auto eval = [](double x) {
    CMatrix V = CMatrix::Zero(2, 2);
    V(0, 0) = -1.0 - (815.0 + 219.0 * std::cos(1.8 * x)) * std::exp(0.1 * x);
    V(1, 1) = -1.0 - (255.0 + 0.1 * std::cos(0.5 * x)) * std::exp(0.15 * x);
    return CoefficientSample{V, scalar_matrix(2, 1.0), scalar_matrix(2, 2.0)};
  };
  Limits minus = constant_limits(scalar_matrix(2, -1.0), scalar_matrix(2, 1.0), scalar_matrix(2, 2.0));
  CoefficientField field(2, eval, minus, std::nullopt, 2.0, 10.0);
  CMatrix c(2, 2);
  c << 18.0, 2.0, 2.0, 25.0;
  auto b = BoundaryData::linear(c, scalar_matrix(2, -9.0));
  return PencilProblem{"example3", std::move(field), HalfLine{b}};
}

PencilProblem example4() {
  auto eval = [](double x) {
    CMatrix V(2, 2);
    const double d = -1.0 + 1.93 * std::exp(-0.141 * std::abs(x));
    V << d, 0.5, 0.5, d;
    return CoefficientSample{V, scalar_matrix(2, 1.0), scalar_matrix(2, 2.0)};
  };
  CMatrix V(2, 2);
  V << -1.0, 0.5, 0.5, -1.0;
  Limits lim = constant_limits(V, scalar_matrix(2, 1.0), scalar_matrix(2, 2.0));
  CoefficientField field(2, eval, lim, lim, 2.0, 1.0 / 0.141);
  return PencilProblem{"example4", std::move(field), WholeLine{}};
}

PencilProblem constant_problem(bool half) {
  const int n = 2;
  Limits lim = constant_limits(scalar_matrix(n, -1.0), scalar_matrix(n, 1.0), scalar_matrix(n, 1.0));
  auto eval = [lim](double) { return lim; };
  if (half) {
    CoefficientField field(n, eval, lim, std::nullopt, 1.0);
    // c below -1 keeps the Robin problem stable for every lambda >= 0.
    auto b = BoundaryData::linear(scalar_matrix(n, -2.0), scalar_matrix(n, -1.0));
    return PencilProblem{"constant-half", std::move(field), HalfLine{b}};
  }
  CoefficientField field(n, eval, lim, lim, 1.0);
  return PencilProblem{"constant", std::move(field), WholeLine{}};
}

CMatrix random_hermitian(std::mt19937_64& rng, int n, bool complex_entries) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), complex_entries ? g(rng) : 0.0);
  return 0.5 * (a + a.adjoint());
}

/// Hermitian with spectrum drawn uniformly from [lo, hi].
CMatrix random_spectrum(std::mt19937_64& rng, int n, bool complex_entries, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const auto q = herm_eig(random_hermitian(rng, n, complex_entries)).vectors;
  RVector d(n);
  for (int i = 0; i < n; ++i) d(i) = u(rng);
  return q * d.cast<Complex>().asDiagonal() * q.adjoint();
}

std::uint64_t parse_seed(const std::string& s, const std::string& name) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "bad seed in problem name '" + name + "'");
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorKind::Config, where + ": missing key '" + key + "'");
  return j.at(key);
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::Config, where + ": expected a number");
  return j.get<double>();
}

Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::Config, where + ": expected a number or [re, im]");
}

std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::Config, where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_at(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Limits limits_from_json(const json& j, int n, const std::string& side, const std::string& where) {
  return Limits{matrix_from_json(require(j, ("V" + side).c_str(), where), n, where + ".V" + side),
                matrix_from_json(require(j, ("f1" + side).c_str(), where), n, where + ".f1" + side),
                matrix_from_json(require(j, ("f2" + side).c_str(), where), n, where + ".f2" + side)};
}

/// Coefficients tabulated on a grid, splined entrywise (real and imaginary parts).
/// Outside the knots the declared limits apply.
CoefficientField::Eval table_eval(const json& j, int n, const std::string& where, const Limits& minus,
                                  const std::optional<Limits>& plus) {
  const auto xs = number_array(require(j, "x", where), where + ".x");
  if (xs.size() < 2) throw Error(ErrorKind::Config, where + ".x: need at least two points");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::Config, where + ".x: must be strictly increasing");

  struct Entry {
    CubicSpline re, im;
  };
  auto build = [&](const char* key) {
    const json& arr = require(j, key, where);
    if (!arr.is_array() || arr.size() != xs.size())
      throw Error(ErrorKind::Config, where + "." + key + ": expected one matrix per x value");
    std::vector<CMatrix> ms;
    for (std::size_t i = 0; i < arr.size(); ++i)
      ms.push_back(matrix_from_json(arr[i], n, where + "." + key + "[" + std::to_string(i) + "]"));
    std::vector<Entry> entries;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        std::vector<double> re, im;
        for (const auto& m : ms) {
          re.push_back(m(r, c).real());
          im.push_back(m(r, c).imag());
        }
        entries.push_back({CubicSpline(xs, re), CubicSpline(xs, im)});
      }
    return entries;
  };
  auto V = build("V");
  auto f1 = build("f1");
  auto f2 = build("f2");
  const double x_lo = xs.front();
  const double x_hi = xs.back();
  return [n, V, f1, f2, x_lo, x_hi, minus, plus](double x) {
    if (x < x_lo) return CoefficientSample(minus);
    if (x > x_hi && plus) return CoefficientSample(*plus);
    auto eval = [&](const std::vector<Entry>& e) {
      CMatrix m(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          const auto& s = e[static_cast<std::size_t>(r * n + c)];
          m(r, c) = Complex(s.re(x), s.im(x));
        }
      return CMatrix(0.5 * (m + m.adjoint()));
    };
    return CoefficientSample{eval(V), eval(f1), eval(f2)};
  };
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"example1", "example2", "example3", "example4", "constant", "constant-half"};
}

PencilProblem builtin_problem(const std::string& name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  if (name == "example3") return example3();
  if (name == "example4") return example4();
  if (name == "constant") return constant_problem(false);
  if (name == "constant-half") return constant_problem(true);
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string family = name.substr(0, colon);
    const auto seed = parse_seed(name.substr(colon + 1), name);
    RandomProblemOptions o;
    o.n = 1 + static_cast<int>(seed % 3);
    if (family == "random-half") {
      o.half_line = true;
    } else if (family == "random-whole") {
      o.half_line = false;
    } else if (family == "random-complex") {
      o.complex_entries = true;
      o.half_line = (seed % 2) == 0;
    } else {
      throw Error(ErrorKind::Config, "unknown problem family '" + family + "'");
    }
    auto p = random_problem(seed, o);
    p.name = name;
    return p;
  }
  throw Error(ErrorKind::Config, "unknown problem '" + name + "'");
}

PencilProblem random_problem(std::uint64_t seed, const RandomProblemOptions& opts) {
  if (opts.n < 1 || opts.n > 3) throw Error(ErrorKind::Config, "random problems use 1 <= n <= 3");
  const int n = opts.n;
  const bool cx = opts.complex_entries;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const CMatrix v_inf = random_spectrum(rng, n, cx, -1.5, -0.3);
  const CMatrix f1 = random_spectrum(rng, n, cx, 0.5, 2.0);
  const CMatrix f2 = random_spectrum(rng, n, cx, 0.5, 2.0);
  const double delta = 0.999 * min_eig(f2);

  // A negative semidefinite bump keeps V negative definite everywhere.
  const CMatrix bump = opts.allow_positive_bump ? random_spectrum(rng, n, cx, -2.0, 4.0)
                                                : random_spectrum(rng, n, cx, -2.0, 0.0);
  const double width = 1.0 + 2.0 * u(rng);
  Limits lim{v_inf, f1, f2};

  if (opts.half_line) {
    const double kappa = 0.5 + u(rng);
    auto eval = [=](double x) {
      return CoefficientSample{CMatrix(v_inf + bump * std::exp(kappa * x)), f1, f2};
    };
    CoefficientField field(n, eval, lim, std::nullopt, delta, 1.0 / kappa);
    const CMatrix c = random_spectrum(rng, n, cx, -3.0, 3.0);
    const CMatrix C2 = -random_spectrum(rng, n, cx, 0.2, 2.0);
    return PencilProblem{"random-half:" + std::to_string(seed), std::move(field),
                         HalfLine{BoundaryData::linear(c, C2)}};
  }
  const double shift = 2.0 * u(rng) - 1.0;
  auto eval = [=](double x) {
    const double s = (x - shift) / width;
    return CoefficientSample{CMatrix(v_inf + bump * std::exp(-0.5 * s * s)), f1, f2};
  };
  CoefficientField field(n, eval, lim, lim, delta, width);
  return PencilProblem{"random-whole:" + std::to_string(seed), std::move(field), WholeLine{}};
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error(ErrorKind::InvalidArgument, "spline needs matching x and y, n >= 2");
  if (n == 2) return;
  // Tridiagonal solve for second derivatives with natural end conditions.
  std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    a[i] = h0 / 6.0;
    b[i] = (h0 + h1) / 3.0;
    c[i] = h1 / 6.0;
    d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m_[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

double CubicSpline::operator()(double t) const {
  if (x_.empty()) return 0.0;
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double A = (x_[i + 1] - t) / h;
  const double B = (t - x_[i]) / h;
  return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

CMatrix matrix_from_json(const json& j, int n, const std::string& what) {
  if (n == 1 && (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number()))) {
    CMatrix m(1, 1);
    m(0, 0) = complex_from_json(j, what);
    return m;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw Error(ErrorKind::Config, what + ": expected " + std::to_string(n) + " rows");
  CMatrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw Error(ErrorKind::Config, what + "[" + std::to_string(r) + "]: expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c)
      m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)],
                                  what + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex z = m(r, c);
      if (z.imag() == 0.0) row.push_back(z.real());
      else row.push_back(json::array({z.real(), z.imag()}));
    }
    rows.push_back(row);
  }
  return rows;
}

PencilProblem problem_from_json(const json& j) {
  const json& coeffs = require(j, "coefficients", "problem");
  const std::string kind = require(coeffs, "kind", "problem.coefficients").get<std::string>();
  if (kind == "builtin") return builtin_problem(require(coeffs, "name", "problem.coefficients").get<std::string>());
  if (kind == "expr")
    throw Error(ErrorKind::UnsupportedBoundary, "problem.coefficients: kind 'expr' is not supported; use 'table'");
  if (kind != "table") throw Error(ErrorKind::Config, "problem.coefficients.kind: unknown kind '" + kind + "'");

  const int n = require(j, "n", "problem").get<int>();
  if (n < 1) throw Error(ErrorKind::Config, "problem.n: must be positive");
  const json& lim = require(j, "limits", "problem");
  Limits minus = limits_from_json(lim, n, "minus", "problem.limits");
  std::optional<Limits> plus;
  if (lim.contains("Vplus")) plus = limits_from_json(lim, n, "plus", "problem.limits");
  auto eval = table_eval(coeffs, n, "problem.coefficients", minus, plus);
  const double delta = j.contains("delta") ? number_at(j.at("delta"), "problem.delta") : 0.999 * min_eig(minus.f2);
  const std::string name = j.value("name", std::string("table"));

  const json& dom = require(j, "domain", "problem");
  const std::string dkind = require(dom, "kind", "problem.domain").get<std::string>();
  if (dkind == "half") {
    const CMatrix c = matrix_from_json(require(dom, "c", "problem.domain"), n, "problem.domain.c");
    if (dom.contains("phi"))
      throw Error(ErrorKind::UnsupportedBoundary, "problem.domain.phi: only linear phi = C2 lambda can be read from JSON");
    const CMatrix C2 = matrix_from_json(require(dom, "C2", "problem.domain"), n, "problem.domain.C2");
    CoefficientField field(n, std::move(eval), std::move(minus), std::nullopt, delta);
    PencilProblem p{name, std::move(field), HalfLine{BoundaryData::linear(c, C2)}};
    validate_problem(p);
    return p;
  }
  if (dkind == "whole") {
    if (!plus) throw Error(ErrorKind::Config, "problem.limits.Vplus: required for the whole line");
    CoefficientField field(n, std::move(eval), std::move(minus), std::move(plus), delta);
    PencilProblem p{name, std::move(field), WholeLine{}};
    validate_problem(p);
    return p;
  }
  if (dkind == "truncated") {
    const double L = number_at(require(dom, "L", "problem.domain"), "problem.domain.L");
    CoefficientField field(n, std::move(eval), std::move(minus), std::move(plus), delta);
    PencilProblem p{name, std::move(field), Truncated{L}};
    validate_problem(p);
    return p;
  }
  throw Error(ErrorKind::Config, "problem.domain.kind: unknown kind '" + dkind + "'");
}

PencilProblem load_problem(const std::string& name_or_path) {
  std::ifstream in(name_or_path);
  if (!in) return builtin_problem(name_or_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, name_or_path + ": " + e.what());
  }
  return problem_from_json(j);
}

}  // namespace qpencil
