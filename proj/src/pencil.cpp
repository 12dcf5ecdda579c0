#include "qpencil/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qpencil {

namespace {

bool is_real_matrix(const CMatrix& m) { return m.imag().cwiseAbs().maxCoeff() <= 1e-14; }

bool is_real_sample(const CoefficientSample& s) {
  return is_real_matrix(s.V) && is_real_matrix(s.f1) && is_real_matrix(s.f2);
}

void require_shape(const CMatrix& m, int n, const std::string& what) {
  if (m.rows() != n || m.cols() != n) {
    throw Error(ErrorKind::Config, what + " must be " + std::to_string(n) + "x" + std::to_string(n) +
                                       ", got " + std::to_string(m.rows()) + "x" +
                                       std::to_string(m.cols()));
  }
}

void require_sample(const CoefficientSample& s, int n, const std::string& where) {
  require_shape(s.V, n, where + " V");
  require_shape(s.f1, n, where + " f1");
  require_shape(s.f2, n, where + " f2");
  require_hermitian(s.V, kHermitianTol, (where + " V").c_str());
  require_hermitian(s.f1, kHermitianTol, (where + " f1").c_str());
  require_hermitian(s.f2, kHermitianTol, (where + " f2").c_str());
}

double coefficient_gap(const CoefficientSample& s, const Limits& lim) {
  return (s.V - lim.V).norm() + (s.f1 - lim.f1).norm() + (s.f2 - lim.f2).norm();
}

Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::Violated || b == Verdict::Violated) return Verdict::Violated;
  if (a == Verdict::Unverified || b == Verdict::Unverified) return Verdict::Unverified;
  return Verdict::Ok;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

CoefficientField::CoefficientField(int n, Eval eval, Limits minus, std::optional<Limits> plus,
                                   double delta, double decay_scale)
    : n_(n),
      eval_(std::move(eval)),
      minus_(std::move(minus)),
      plus_(std::move(plus)),
      delta_(delta),
      decay_scale_(decay_scale) {
  if (n_ < 1) throw Error(ErrorKind::Config, "dimension must be positive");
  if (!eval_) throw Error(ErrorKind::Config, "coefficient field has no evaluator");
  if (!(delta_ > 0.0)) throw Error(ErrorKind::Config, "delta must be positive");
  require_sample(minus_, n_, "minus limit");
  if (plus_) require_sample(*plus_, n_, "plus limit");
  real_ = is_real_sample(minus_) && (!plus_ || is_real_sample(*plus_));
  for (const double x : {-7.3, -2.1, -0.4, 0.0, 0.6, 2.9, 8.2}) {
    if (!real_) break;
    real_ = is_real_sample(eval_(x));
  }
}

BoundaryData BoundaryData::linear(CMatrix c, CMatrix C2) {
  BoundaryData b;
  b.c = std::move(c);
  b.C2 = std::move(C2);
  b.kind = PhiKind::Linear;
  return b;
}

BoundaryData BoundaryData::custom(CMatrix c, std::function<CMatrix(Complex)> phi) {
  BoundaryData b;
  b.c = std::move(c);
  b.kind = PhiKind::Custom;
  b.custom_phi = std::move(phi);
  b.C2 = CMatrix::Zero(b.c.rows(), b.c.cols());
  return b;
}

CMatrix BoundaryData::phi(Complex lambda) const {
  if (kind == PhiKind::Linear) return C2 * lambda;
  if (!custom_phi) throw Error(ErrorKind::Config, "custom boundary without phi");
  return custom_phi(lambda);
}

CMatrix BoundaryData::phi_derivative(double lambda) const {
  if (kind == PhiKind::Linear) return C2;
  const double h = 1e-6 * std::max(1.0, std::abs(lambda));
  return (phi(lambda + h) - phi(lambda - h)) / (2.0 * h);
}

CMatrix BoundaryData::robin_matrix(double lambda) const {
  const CMatrix m = c + phi(lambda);
  require_hermitian(m, kHermitianTol, "c + phi(lambda)");
  return (m + m.adjoint()) * 0.5;
}

const BoundaryData& PencilProblem::boundary() const {
  if (const auto* h = std::get_if<HalfLine>(&domain)) return h->boundary;
  throw Error(ErrorKind::InvalidArgument, "problem '" + name + "' has no Robin boundary");
}

double PencilProblem::right_end() const {
  if (is_half_line()) return 0.0;
  if (const auto* t = std::get_if<Truncated>(&domain)) return t->L;
  return std::numeric_limits<double>::infinity();
}

std::string PencilProblem::domain_name() const {
  if (is_half_line()) return "half";
  if (is_truncated()) return "truncated";
  return "whole";
}

void validate_problem(const PencilProblem& p) {
  const int n = p.n();
  if (p.is_whole_line() && !p.coeffs.plus())
    throw Error(ErrorKind::Config, "whole-line problem needs limits at +infinity");
  if (p.is_half_line()) {
    const BoundaryData& b = p.boundary();
    require_shape(b.c, n, "c");
    require_hermitian(b.c, kHermitianTol, "c");
    if (b.kind == PhiKind::Linear) {
      require_shape(b.C2, n, "C2");
      require_hermitian(b.C2, kHermitianTol, "C2");
    }
  }
  const double probe = p.is_whole_line() ? 0.0 : std::min(0.0, p.right_end());
  require_sample(p.coeffs(probe), n, "coefficients at x=" + fmt(probe));
}

CMatrix pencil_matrix(const CoefficientSample& s, double lambda) {
  CMatrix m = lambda * s.f1 + (lambda * lambda) * s.f2 - s.V;
  return (m + m.adjoint()) * 0.5;
}

const Limits& limits_at(const PencilProblem& p, Side side) {
  if (side == Side::Minus) return p.coeffs.minus();
  if (!p.coeffs.plus()) throw Error(ErrorKind::InvalidArgument, "no limits at +infinity");
  return *p.coeffs.plus();
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Ok: return "ok";
    case Verdict::Violated: return "violated";
    case Verdict::Unverified: return "unverified";
  }
  return "unknown";
}

bool AssumptionReport::ok() const {
  return std::none_of(verdicts.begin(), verdicts.end(),
                      [](const auto& kv) { return kv.second == Verdict::Violated; });
}

void AssumptionReport::set(const std::string& name, Verdict v) {
  auto it = verdicts.find(name);
  if (it == verdicts.end())
    verdicts.emplace(name, v);
  else
    it->second = worst(it->second, v);
}

void AssumptionReport::merge(const AssumptionReport& other) {
  for (const auto& [k, v] : other.verdicts) set(k, v);
  if (other.has_gamma) {
    gamma_estimate = has_gamma ? std::max(gamma_estimate, other.gamma_estimate) : other.gamma_estimate;
    has_gamma = true;
  }
  details.insert(details.end(), other.details.begin(), other.details.end());
}

AssumptionReport check_hyperbolicity(const Limits& limits, const std::vector<double>& mu_grid,
                                     double gap_tol) {
  AssumptionReport rep;
  rep.set("hyperbolicity", Verdict::Ok);
  if (mu_grid.empty()) {
    rep.set("hyperbolicity", Verdict::Violated);
    rep.details.push_back("hyperbolicity: empty mu grid");
    return rep;
  }
  const Eigen::Index n = limits.V.rows();
  const int deg = static_cast<int>(2 * n);
  const int m = deg + 1;
  const CMatrix id = CMatrix::Identity(n, n);
  const double f2min = std::max(min_eigenvalue(limits.f2), 1e-300);
  const double f1n = hermitian_norm(limits.f1);

  double gamma = -std::numeric_limits<double>::infinity();
  for (const double mu : mu_grid) {
    const CMatrix k = mu * mu * id - limits.V;
    const double scale =
        std::max(1e-3, f1n / f2min + std::sqrt(hermitian_norm(k) / f2min));
    std::vector<Complex> values(static_cast<std::size_t>(m));
    for (int s = 0; s < m; ++s) {
      const Complex z = scale * std::polar(1.0, 2.0 * kPi * s / m);
      values[static_cast<std::size_t>(s)] = det_complex(CMatrix(z * z * limits.f2 + z * limits.f1 + k));
    }
    std::vector<Complex> coeffs(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      Complex acc = 0.0;
      for (int s = 0; s < m; ++s)
        acc += values[static_cast<std::size_t>(s)] * std::polar(1.0, -2.0 * kPi * j * s / m);
      coeffs[static_cast<std::size_t>(j)] = acc / (static_cast<double>(m) * std::pow(scale, j));
    }
    bool converged = true;
    const auto roots = polynomial_roots(coeffs, &converged);
    if (!converged || static_cast<int>(roots.size()) != deg) {
      rep.set("hyperbolicity", Verdict::Violated);
      rep.details.push_back("hyperbolicity: root finder failed at mu=" + fmt(mu));
      continue;
    }
    double local = -std::numeric_limits<double>::infinity();
    for (const auto& r : roots) local = std::max(local, r.real());
    if (local > -gap_tol) {
      rep.set("hyperbolicity", Verdict::Violated);
      rep.details.push_back("hyperbolicity: root with Re lambda=" + fmt(local) + " at mu=" + fmt(mu));
    }
    gamma = std::max(gamma, local);
  }
  rep.gamma_estimate = gamma;
  rep.has_gamma = true;
  return rep;
}

std::vector<double> default_mu_grid(const Limits& limits, double lambda_inf, int points) {
  const double mu_max = 2.0 * std::sqrt(hermitian_norm(limits.V) + lambda_inf * hermitian_norm(limits.f1) +
                                        lambda_inf * lambda_inf * hermitian_norm(limits.f2));
  std::vector<double> grid(static_cast<std::size_t>(std::max(points, 2)));
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = mu_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  return grid;
}

AssumptionReport check_boundary_assumptions(const BoundaryData& b,
                                            const std::vector<double>& lambda_grid) {
  AssumptionReport rep;
  rep.set("A2", Verdict::Ok);
  try {
    require_hermitian(b.c, kHermitianTol, "c");
  } catch (const Error& e) {
    rep.set("A2", Verdict::Violated);
    rep.details.push_back(std::string("A2: ") + e.what());
  }
  const double phi0 = b.phi(Complex(0.0)).cwiseAbs().maxCoeff();
  if (!(phi0 <= kHermitianTol)) {
    rep.set("A2", Verdict::Violated);
    rep.details.push_back("A2: phi(0) != 0 (max entry " + fmt(phi0) + ")");
  }
  for (const double lam : lambda_grid) {
    const CMatrix ph = b.phi(Complex(lam));
    if (hermitian_defect(ph) > kHermitianTol * std::max(1.0, ph.cwiseAbs().maxCoeff())) {
      rep.set("A2", Verdict::Violated);
      rep.details.push_back("A2: phi not Hermitian at lambda=" + fmt(lam));
      continue;
    }
    const CMatrix d = b.phi_derivative(lam);
    const double top = herm_eig(CMatrix((d + d.adjoint()) * 0.5)).values.maxCoeff();
    if (!(top < 0.0)) {
      rep.set("A2", Verdict::Violated);
      rep.details.push_back("A2: phi'(lambda) not negative definite at lambda=" + fmt(lam));
    }
  }
  if (b.kind == PhiKind::Linear) {
    bool neg = false;
    try {
      neg = herm_eig(b.C2).values.maxCoeff() < 0.0;
    } catch (const Error&) {
      neg = false;
    }
    rep.set("A3", neg ? Verdict::Ok : Verdict::Unverified);
    if (!neg) rep.details.push_back("A3: C2 is not negative definite; sign condition not certified");
  } else {
    rep.set("A3", Verdict::Unverified);
    rep.details.push_back("A3: custom phi, sign condition not certified");
  }
  return rep;
}

AssumptionReport check_coefficients(const PencilProblem& p, const std::vector<double>& x_grid) {
  AssumptionReport rep;
  rep.set("positivity", Verdict::Ok);
  const double delta = p.coeffs.delta();
  for (const double x : x_grid) {
    try {
      const CoefficientSample s = p.coeffs(x);
      require_sample(s, p.n(), "coefficients at x=" + fmt(x));
      const double f1min = min_eigenvalue(s.f1);
      const double f2min = min_eigenvalue(s.f2);
      if (!(f1min > 0.0)) {
        rep.set("positivity", Verdict::Violated);
        rep.details.push_back("f1 not positive definite at x=" + fmt(x));
      }
      if (!(f2min >= delta * (1.0 - 1e-12))) {
        rep.set("positivity", Verdict::Violated);
        rep.details.push_back("f2 below delta at x=" + fmt(x));
      }
    } catch (const Error& e) {
      rep.set("positivity", Verdict::Violated);
      rep.details.push_back(e.what());
    }
  }
  return rep;
}

Truncation find_truncation(const PencilProblem& p, double limit_tol) {
  auto probe = [&](const Limits& lim, double sign) {
    for (int k = 0; k <= 24; ++k) {
      const double reach = std::ldexp(1.0, k);
      bool inside = true;
      for (int j = 0; j <= 16 && inside; ++j) {
        const double x = sign * reach * (1.0 + j / 16.0);
        inside = coefficient_gap(p.coeffs(x), lim) <= limit_tol;
      }
      if (inside) return sign * reach;
    }
    throw Error(ErrorKind::Config, "coefficients of '" + p.name + "' do not approach their limits");
  };
  Truncation t;
  t.x_min = probe(p.coeffs.minus(), -1.0);
  if (p.is_whole_line()) {
    t.x_max = probe(*p.coeffs.plus(), 1.0);
  } else {
    t.x_max = p.right_end();
    t.x_min = std::min(t.x_min, t.x_max - 1.0);
  }
  return t;
}

std::vector<double> default_sample_grid(const PencilProblem& p, const Truncation& t, int points) {
  const double hi = p.is_whole_line() ? t.x_max : p.right_end();
  const int m = std::max(points, 2);
  std::vector<double> grid(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) grid[static_cast<std::size_t>(i)] = t.x_min + (hi - t.x_min) * i / (m - 1);
  if (t.x_min < 0.0 && hi > 0.0) grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  return grid;
}

double lambda_max(const PencilProblem& p, const std::vector<double>& sample_grid) {
  if (sample_grid.empty()) throw Error(ErrorKind::InvalidArgument, "lambda_max: empty sample grid");
  double v_inf = hermitian_norm(p.coeffs.minus().V);
  double f2_inf = hermitian_norm(p.coeffs.minus().f2);
  double v_lim = v_inf;
  double f2_lim = f2_inf;
  if (p.is_whole_line()) {
    v_lim = std::max(v_lim, hermitian_norm(p.coeffs.plus()->V));
    f2_lim = std::max(f2_lim, hermitian_norm(p.coeffs.plus()->f2));
    v_inf = v_lim;
    f2_inf = f2_lim;
  }
  for (const double x : sample_grid) {
    const CoefficientSample s = p.coeffs(x);
    v_inf = std::max(v_inf, hermitian_norm(s.V));
    f2_inf = std::max(f2_inf, hermitian_norm(s.f2));
  }
  const double delta = p.coeffs.delta();

  double bound = 0.0;
  if (p.is_half_line()) {
    const double nc = hermitian_norm(p.boundary().c);
    const double eps = 1.0 / (2.0 * (nc + 1.0));
    const double beta = 1.0 / eps;
    const double nu = -v_inf - nc * beta;
    const double nu_lim = -v_lim - nc * beta;
    bound = std::max(std::sqrt(f2_inf * std::abs(nu)), std::sqrt(f2_lim * std::abs(nu_lim))) / delta;
  } else {
    bound = std::max(std::sqrt(f2_inf * v_inf), std::sqrt(f2_lim * v_lim)) / delta;
  }
  const double out = 1.25 * bound;
  return out > 0.0 ? out : 1e-3;
}

AssumptionReport check_assumptions(const PencilProblem& p) {
  validate_problem(p);
  const Truncation t = find_truncation(p);
  const auto grid = default_sample_grid(p, t, 2001);
  const double lam_inf = lambda_max(p, grid);

  AssumptionReport positivity = check_coefficients(p, grid);
  AssumptionReport hyper = check_hyperbolicity(p.coeffs.minus(), default_mu_grid(p.coeffs.minus(), lam_inf));
  if (p.is_whole_line()) {
    hyper.merge(check_hyperbolicity(*p.coeffs.plus(), default_mu_grid(*p.coeffs.plus(), lam_inf)));
  }
  const std::string key = p.is_whole_line() ? "A4" : "A1";

  AssumptionReport rep;
  rep.set(key, worst(positivity.verdicts.at("positivity"), hyper.verdicts.at("hyperbolicity")));
  rep.gamma_estimate = hyper.gamma_estimate;
  rep.has_gamma = hyper.has_gamma;
  for (const auto& d : positivity.details) rep.details.push_back(key + ": " + d);
  for (const auto& d : hyper.details) rep.details.push_back(key + ": " + d);

  if (p.is_half_line()) {
    std::vector<double> lam_grid;
    for (int i = 0; i <= 20; ++i) lam_grid.push_back(lam_inf * i / 20.0);
    rep.merge(check_boundary_assumptions(p.boundary(), lam_grid));
  }
  return rep;
}

AsymptoticDecomposition asymptotic_decomposition(const PencilProblem& p, Side side, double lambda) {
  if (!(lambda >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "asymptotic_decomposition: lambda must be >= 0");
  const CMatrix m = pencil_matrix(limits_at(p, side), lambda);
  const auto eig = herm_eig(m);
  if (!(eig.values(0) > kPdTol)) {
    throw Error(ErrorKind::HyperbolicityLost,
                "lambda f1 + lambda^2 f2 - V at " + std::string(side == Side::Minus ? "-inf" : "+inf") +
                    " has eigenvalue " + fmt(eig.values(0)) + " at lambda=" + fmt(lambda));
  }
  AsymptoticDecomposition out;
  out.lambda = lambda;
  out.nus = eig.values;
  out.mus = eig.values.cwiseSqrt();
  out.r_vectors = eig.vectors;
  return out;
}

LagrangianFrame unstable_frame_at_minus_infinity(const PencilProblem& p, double lambda) {
  const AsymptoticDecomposition d = asymptotic_decomposition(p, Side::Minus, lambda);
  return LagrangianFrame(d.r_vectors, d.r_vectors * d.mus.cast<Complex>().asDiagonal());
}

LagrangianFrame unstable_graph_frame(const PencilProblem& p, double lambda) {
  const AsymptoticDecomposition d = asymptotic_decomposition(p, Side::Minus, lambda);
  const CMatrix s = d.r_vectors * d.mus.cast<Complex>().asDiagonal() * d.r_vectors.adjoint();
  return LagrangianFrame(CMatrix::Identity(p.n(), p.n()), (s + s.adjoint()) * 0.5);
}

}  // namespace qpencil
