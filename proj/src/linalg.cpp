#include "qpencil/linalg.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace qpencil {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::HyperbolicityLost: return "HyperbolicityLost";
    case ErrorKind::InvalidFrame: return "InvalidFrame";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::NonTransversalCrossing: return "NonTransversalCrossing";
    case ErrorKind::InconsistentBox: return "InconsistentBox";
    case ErrorKind::UnsupportedBoundary: return "UnsupportedBoundary";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ScalarFunction sqrt_function() {
  ScalarFunction f;
  f.name = "sqrt";
  f.value = [](double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sqrt undefined at " + std::to_string(t));
    return std::sqrt(t);
  };
  f.derivative = [](double t) {
    if (!(t > 0.0))
      throw Error(ErrorKind::InvalidArgument, "sqrt not differentiable at " + std::to_string(t));
    return 0.5 / std::sqrt(t);
  };
  return f;
}

ScalarFunction power_function(double p) {
  ScalarFunction f;
  f.name = "pow(" + std::to_string(p) + ")";
  f.value = [p](double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "power undefined at " + std::to_string(t));
    return std::pow(t, p);
  };
  f.derivative = [p](double t) {
    if (!(t > 0.0))
      throw Error(ErrorKind::InvalidArgument, "power not differentiable at " + std::to_string(t));
    return p * std::pow(t, p - 1.0);
  };
  return f;
}

ScalarFunction identity_function() {
  return ScalarFunction{[](double t) { return t; }, [](double) { return 1.0; }, "identity"};
}

LoewnerData loewner(const ScalarFunction& f, const RVector& nodes, double node_tol) {
  const Eigen::Index n = nodes.size();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "loewner: empty node list");
  RVector fv(n);
  for (Eigen::Index j = 0; j < n; ++j) fv(j) = f.value(nodes(j));

  LoewnerData out{nodes, RMatrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.matrix(j, j) = f.derivative(nodes(j));
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double gap = nodes(j) - nodes(k);
      double v;
      if (std::abs(gap) <= node_tol * std::max(1.0, std::abs(nodes(j))))
        v = f.derivative(0.5 * (nodes(j) + nodes(k)));
      else
        v = (fv(j) - fv(k)) / gap;
      out.matrix(j, k) = v;
      out.matrix(k, j) = v;
    }
  }
  return out;
}

// Cauchy matrices on nearby square roots have condition numbers far beyond
// 1/eps, so both sides run in 50-digit binary floating point.
CauchyDetCheck cauchy_det_check(const RVector& nodes) {
  using Wide = boost::multiprecision::cpp_bin_float_50;
  const Eigen::Index n = nodes.size();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "cauchy_det_check: empty node list");
  std::vector<Wide> s(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(nodes(j) > 0.0))
      throw Error(ErrorKind::InvalidArgument, "cauchy_det_check: nodes must be positive");
    s[static_cast<std::size_t>(j)] = boost::multiprecision::sqrt(Wide(nodes(j)));
  }
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::vector<Wide>> m(un, std::vector<Wide>(un));
  for (std::size_t j = 0; j < un; ++j)
    for (std::size_t k = 0; k < un; ++k) m[j][k] = 1 / (s[j] + s[k]);

  // Plain LU with partial pivoting.
  Wide det = 1;
  for (std::size_t k = 0; k < un; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < un; ++r)
      if (abs(m[r][k]) > abs(m[piv][k])) piv = r;
    if (m[piv][k] == 0) {
      det = 0;
      break;
    }
    if (piv != k) {
      std::swap(m[piv], m[k]);
      det = -det;
    }
    det *= m[k][k];
    for (std::size_t r = k + 1; r < un; ++r) {
      const Wide factor = m[r][k] / m[k][k];
      for (std::size_t c = k; c < un; ++c) m[r][c] -= factor * m[k][c];
    }
  }

  Wide num = 1;
  Wide den = 1;
  for (std::size_t j = 0; j < un; ++j) {
    den *= 2 * s[j];
    for (std::size_t k = 0; k < j; ++k) {
      num *= (s[j] - s[k]) * (s[j] - s[k]);
      den *= (s[j] + s[k]) * (s[j] + s[k]);
    }
  }
  return CauchyDetCheck{static_cast<double>(det), static_cast<double>(num / den)};
}

namespace {

std::pair<Complex, Complex> horner(const std::vector<Complex>& c, Complex z) {
  Complex p = c.back();
  Complex dp = 0.0;
  for (std::size_t k = c.size() - 1; k-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
  return {p, dp};
}

}  // namespace

std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs, bool* converged) {
  std::vector<Complex> c = coeffs;
  const double cmax = [&] {
    double m = 0.0;
    for (const auto& v : c) m = std::max(m, std::abs(v));
    return m;
  }();
  while (!c.empty() && std::abs(c.back()) <= 1e-14 * cmax) c.pop_back();
  if (converged) *converged = true;
  if (c.size() <= 1) return {};

  const std::size_t deg = c.size() - 1;
  const Complex lead = c.back();
  for (auto& v : c) v /= lead;

  double radius = 0.0;
  for (std::size_t k = 0; k < deg; ++k) radius = std::max(radius, std::abs(c[k]));
  radius = 1.0 + radius;

  std::vector<Complex> z(deg);
  for (std::size_t k = 0; k < deg; ++k) {
    const double ang = 2.0 * kPi * (static_cast<double>(k) + 0.25) / static_cast<double>(deg) + 0.4;
    z[k] = 0.5 * radius * Complex(std::cos(ang), std::sin(ang));
  }

  // A root also counts as converged once |p(z)| is within rounding of
  // sum |c_k| |z|^k; multiple roots never reach the step criterion.
  std::vector<double> cabs(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) cabs[k] = std::abs(c[k]);
  auto rounding_floor = [&](double r) {
    double acc = cabs.back();
    for (std::size_t k = cabs.size() - 1; k-- > 0;) acc = acc * r + cabs[k];
    return 8.0 * static_cast<double>(deg + 1) * std::numeric_limits<double>::epsilon() * acc;
  };
  std::vector<bool> settled(deg, false);

  bool done = false;
  for (int iter = 0; iter < 1000 && !done; ++iter) {
    done = true;
    for (std::size_t k = 0; k < deg; ++k) {
      if (settled[k]) continue;
      const auto [p, dp] = horner(c, z[k]);
      if (std::abs(p) <= rounding_floor(std::abs(z[k]))) {
        settled[k] = true;
        continue;
      }
      const Complex ratio = p / dp;
      Complex sum = 0.0;
      for (std::size_t j = 0; j < deg; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      const Complex w = ratio / (1.0 - ratio * sum);
      z[k] -= w;
      if (std::abs(w) > 1e-14 * std::max(1.0, std::abs(z[k]))) done = false;
    }
  }
  if (converged) *converged = done;
  return z;
}

}  // namespace qpencil
