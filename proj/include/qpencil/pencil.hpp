#pragma once

// Problem model for y'' + V y = lambda f1 y + lambda^2 f2 y: coefficient
// fields, boundary data, assumption checks and asymptotic subspaces.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qpencil/lagrangian.hpp"
#include "qpencil/types.hpp"

namespace qpencil {

struct CoefficientSample {
  CMatrix V;
  CMatrix f1;
  CMatrix f2;
};

/// Limits of the coefficients at one end of the line.
using Limits = CoefficientSample;

class CoefficientField {
 public:
  using Eval = std::function<CoefficientSample(double)>;

  CoefficientField(int n, Eval eval, Limits minus, std::optional<Limits> plus, double delta,
                   double decay_scale = 1.0);

  int n() const { return n_; }
  CoefficientSample operator()(double x) const { return eval_(x); }
  const Limits& minus() const { return minus_; }
  const std::optional<Limits>& plus() const { return plus_; }
  double delta() const { return delta_; }
  double decay_scale() const { return decay_scale_; }
  /// True when every sampled coefficient and both limits are real symmetric.
  bool is_real() const { return real_; }

 private:
  int n_;
  Eval eval_;
  Limits minus_;
  std::optional<Limits> plus_;
  double delta_;
  double decay_scale_;
  bool real_ = false;
};

enum class PhiKind { Linear, Custom };

/// Boundary condition y'(0) = (c + phi(lambda)) y(0) at the right end of the half-line.
struct BoundaryData {
  CMatrix c;
  PhiKind kind = PhiKind::Linear;
  CMatrix C2;                                   // phi(lambda) = C2 lambda for the linear kind
  std::function<CMatrix(Complex)> custom_phi;   // used for the custom kind

  static BoundaryData linear(CMatrix c, CMatrix C2);
  static BoundaryData custom(CMatrix c, std::function<CMatrix(Complex)> phi);

  CMatrix phi(Complex lambda) const;
  CMatrix phi_derivative(double lambda) const;
  /// c + phi(lambda), symmetrized for real lambda.
  CMatrix robin_matrix(double lambda) const;
};

struct HalfLine {
  BoundaryData boundary;
};
struct WholeLine {};
struct Truncated {
  double L = 0.0;
};
using Domain = std::variant<HalfLine, WholeLine, Truncated>;

struct PencilProblem {
  std::string name;
  CoefficientField coeffs;
  Domain domain;

  int n() const { return coeffs.n(); }
  bool is_half_line() const { return std::holds_alternative<HalfLine>(domain); }
  bool is_whole_line() const { return std::holds_alternative<WholeLine>(domain); }
  bool is_truncated() const { return std::holds_alternative<Truncated>(domain); }
  const BoundaryData& boundary() const;
  /// Right end of the physical interval: 0, L, or +infinity.
  double right_end() const;
  std::string domain_name() const;
};

/// Validates shape, Hermitian structure and the limits required by the domain.
void validate_problem(const PencilProblem& p);

/// lambda f1 + lambda^2 f2 - V.
CMatrix pencil_matrix(const CoefficientSample& s, double lambda);

enum class Side { Minus, Plus };

const Limits& limits_at(const PencilProblem& p, Side side);

enum class Verdict { Ok, Violated, Unverified };
const char* to_string(Verdict v) noexcept;

struct AssumptionReport {
  std::map<std::string, Verdict> verdicts;
  double gamma_estimate = 0.0;
  bool has_gamma = false;
  std::vector<std::string> details;

  bool ok() const;
  void set(const std::string& name, Verdict v);
  void merge(const AssumptionReport& other);
};

/// Scans det(lambda^2 f2 + lambda f1 + mu^2 I - V) = 0 over mu and records the
/// rightmost root.  ok iff every root satisfies Re lambda <= -gap_tol.
AssumptionReport check_hyperbolicity(const Limits& limits, const std::vector<double>& mu_grid,
                                     double gap_tol = 1e-3);

std::vector<double> default_mu_grid(const Limits& limits, double lambda_inf, int points = 200);

AssumptionReport check_boundary_assumptions(const BoundaryData& b,
                                            const std::vector<double>& lambda_grid);

/// Positivity of f1 and f2 - delta on a grid of x values.
AssumptionReport check_coefficients(const PencilProblem& p, const std::vector<double>& x_grid);

struct Truncation {
  double x_min = 0.0;
  double x_max = 0.0;   // 0 for half-line, L for truncated problems
};

/// Doubling probe for the points beyond which coefficients sit within limit_tol of their limits.
Truncation find_truncation(const PencilProblem& p, double limit_tol = 1e-8);

std::vector<double> default_sample_grid(const PencilProblem& p, const Truncation& t, int points = 4001);

double lambda_max(const PencilProblem& p, const std::vector<double>& sample_grid);

/// Full assumption report for the problem's domain type.
AssumptionReport check_assumptions(const PencilProblem& p);

struct AsymptoticDecomposition {
  double lambda = 0.0;
  RVector nus;
  RVector mus;
  CMatrix r_vectors;
};

AsymptoticDecomposition asymptotic_decomposition(const PencilProblem& p, Side side, double lambda);

/// Columns (r_j; mu_j r_j): solutions that decay as x -> -infinity.
LagrangianFrame unstable_frame_at_minus_infinity(const PencilProblem& p, double lambda);

/// The same plane in graph form (I; sqrt(lambda f1- + lambda^2 f2- - V-)), smooth in lambda.
LagrangianFrame unstable_graph_frame(const PencilProblem& p, double lambda);

}  // namespace qpencil
