#include "qpencil/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpencil/maslov.hpp"
#include "qpencil/oracle.hpp"
#include "qpencil/problems.hpp"

namespace qpencil {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument: return kExitConfig;
    case ErrorKind::UnsupportedBoundary: return kExitUnsupported;
    case ErrorKind::InconsistentBox: return kExitInconsistentBox;
    case ErrorKind::NotHermitian:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::HyperbolicityLost: return kExitAssumption;
    case ErrorKind::InvalidFrame:
    case ErrorKind::IntegrationFailure:
    case ErrorKind::NonTransversalCrossing: return kExitFailure;
  }
  return kExitFailure;
}

namespace {

struct Common {
  std::string problem;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double domain_scale = 1.0;
};

CountOptions count_options(const Common& c) {
  CountOptions o;
  o.flow.integrator.rel_tol = c.rel_tol;
  o.flow.integrator.abs_tol = c.abs_tol;
  o.domain_scale = c.domain_scale;
  return o;
}

/// Writes via a temporary file and rename so readers never see a partial file.
void write_atomically(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + path);
    body(f);
    if (!f) throw Error(ErrorKind::Config, "write failed for " + path);
  }
  std::filesystem::rename(tmp, path);
}

json crossing_json(const ConjugatePoint& c) {
  json j{{"param", c.param},
         {"multiplicity", c.multiplicity},
         {"direction", c.direction},
         {"sharp", c.sharp},
         {"corroborated", c.corroborated}};
  return j;
}

json shelf_json(const ShelfResult& s) {
  json cs = json::array();
  for (const auto& c : s.crossings) cs.push_back(crossing_json(c));
  json j{{"maslov", s.maslov},
         {"from", s.param_from},
         {"to", s.param_to},
         {"fixed", s.fixed},
         {"crossings", cs},
         {"max_lagrangian_defect", s.max_lagrangian_defect},
         {"max_unitary_defect", s.max_unitary_defect}};
  if (s.numeric_maslov) j["numeric_maslov"] = *s.numeric_maslov;
  return j;
}

json report_json(const PencilProblem& p, const SpectralCountReport& r) {
  json j{{"problem", p.name},
         {"domain", r.domain},
         {"lambda", r.lambda},
         {"N", r.N},
         {"maslov", r.maslov},
         {"morse", r.morse_correction.n_negative},
         {"morse_zero", r.morse_correction.n_zero},
         {"kernel_dim", r.kernel_dim_at_lambda},
         {"crossing_total", r.crossing_total},
         {"x_min", r.x_min},
         {"x_max", r.x_max},
         {"lambda_inf", r.lambda_inf},
         {"notes", r.notes}};
  if (const ShelfResult* left = r.shelf(Shelf::Left)) {
    json cs = json::array();
    for (const auto& c : left->crossings) cs.push_back(crossing_json(c));
    j["crossings"] = cs;
  }
  if (r.truncation_stable) j["truncation_stable"] = *r.truncation_stable;
  if (r.oracle_count) j["oracle_count"] = *r.oracle_count;
  return j;
}

json box_json(const PencilProblem& p, const SpectralCountReport& r) {
  json shelves = json::object();
  for (const auto& s : r.shelves) shelves[to_string(s.shelf)] = shelf_json(s);
  return json{{"problem", p.name},
              {"domain", r.domain},
              {"lambda_lo", r.lambda},
              {"lambda_hi", r.lambda_hi},
              {"box_sum", r.box_sum.value_or(0)},
              {"N", r.N},
              {"x_min", r.x_min},
              {"x_max", r.x_max},
              {"x_top", r.x_top},
              {"lambda_inf", r.lambda_inf},
              {"shelves", shelves},
              {"notes", r.notes}};
}

void write_box_csv(const SpectralCountReport& r, std::ostream& out) {
  out << "shelf,maslov,crossing_params\n";
  out.precision(12);
  for (const auto& s : r.shelves) {
    out << to_string(s.shelf) << ',' << s.maslov << ',';
    for (std::size_t i = 0; i < s.crossings.size(); ++i) out << (i ? ";" : "") << s.crossings[i].param;
    out << '\n';
  }
}

json oracle_json(const PencilProblem& p, const OracleReport& r) {
  return json{{"problem", p.name},
              {"method", "fd-scan"},
              {"lambda", r.lambda},
              {"lambda_hi", r.lambda_hi},
              {"oracle_count", r.result.count},
              {"inertia_count", r.result.inertia_count},
              {"roots", r.result.roots},
              {"cluster_caveat", r.result.cluster_caveat},
              {"a", r.a},
              {"b", r.b},
              {"grid_n", r.N},
              {"h", r.h},
              {"notes", r.result.notes}};
}

int cmd_check(const Common& c, std::ostream& out) {
  const PencilProblem p = load_problem(c.problem);
  const AssumptionReport rep = check_assumptions(p);
  json verdicts = json::object();
  for (const auto& [k, v] : rep.verdicts) verdicts[k] = to_string(v);
  json j{{"problem", p.name}, {"domain", p.domain_name()}, {"ok", rep.ok()}, {"verdicts", verdicts},
         {"details", rep.details}};
  if (rep.has_gamma) j["gamma_estimate"] = rep.gamma_estimate;
  out << j.dump(2) << '\n';
  return rep.ok() ? kExitOk : kExitAssumption;
}

int cmd_count(const Common& c, double lambda, bool oracle, bool stability, std::ostream& out) {
  const PencilProblem p = load_problem(c.problem);
  CountOptions opts = count_options(c);
  opts.check_stability = stability;
  SpectralCountReport r = spectral_count(p, lambda, opts);
  if (oracle) r.oracle_count = oracle_count(p, lambda, c.domain_scale).result.count;
  out << report_json(p, r).dump(2) << '\n';
  return kExitOk;
}

int cmd_curves(const Common& c, double lo, double hi, int points, const std::string& path, std::ostream& out) {
  if (points < 2) throw Error(ErrorKind::Config, "--points must be at least 2");
  const PencilProblem p = load_problem(c.problem);
  const CountOptions opts = count_options(c);
  if (hi < 0.0) hi = problem_lambda_inf(p, count_truncation(p, opts));
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(lo + (hi - lo) * i / (points - 1));
  const CurveTable table = eigenvalue_curves(p, grid, opts);
  auto write = [&](std::ostream& o) {
    o.precision(12);
    o << "lambda,strand_index,x_star\n";
    for (const auto& pt : table.points) o << pt.lambda << ',' << pt.strand << ',' << pt.x_star << '\n';
  };
  if (path.empty() || path == "-") {
    write(out);
  } else {
    write_atomically(path, write);
  }
  return kExitOk;
}

int cmd_box(const Common& c, double lo, double hi, const std::string& csv, std::ostream& out) {
  const PencilProblem p = load_problem(c.problem);
  SpectralCountReport r;
  int code = kExitOk;
  try {
    r = maslov_box(p, lo, hi, count_options(c));
  } catch (const InconsistentBoxError& e) {
    r = e.report();
    code = kExitInconsistentBox;
  }
  if (!csv.empty()) write_atomically(csv, [&](std::ostream& o) { write_box_csv(r, o); });
  out << box_json(p, r).dump(2) << '\n';
  return code;
}

int cmd_oracle(const Common& c, double lambda, int grid_n, double n_scale, int steps, bool doubling,
               const std::string& audit, std::ostream& out) {
  const PencilProblem p = load_problem(c.problem);
  OracleOptions o;
  o.steps = steps;
  const OracleReport r = oracle_count(p, lambda, c.domain_scale, grid_n, n_scale, o);
  json j = oracle_json(p, r);
  if (doubling) {
    const OracleReport d = oracle_count(p, lambda, c.domain_scale, r.N, 2.0, o);
    j["doubled_grid_n"] = d.N;
    j["doubled_count"] = d.result.count;
    j["doubling_stable"] = d.result.count == r.result.count;
  }
  if (!audit.empty()) write_atomically(audit, [&](std::ostream& f) { write_det_csv(r.result.audit, f); });
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qpencil: unstable real eigenvalues of quadratic operator pencils"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", common.problem, "built-in name or JSON problem file")->required();
    sub->add_option("--rel-tol", common.rel_tol, "integrator relative tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--abs-tol", common.abs_tol, "integrator absolute tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--domain-scale", common.domain_scale, "multiplies the truncation points")
        ->check(CLI::PositiveNumber);
  };

  auto* check = app.add_subcommand("check", "verify the standing assumptions");
  add_common(check);

  double lambda = 0.0;
  bool with_oracle = false;
  bool stability = false;
  auto* count = app.add_subcommand("count", "count eigenvalues above lambda");
  add_common(count);
  count->add_option("--lambda", lambda, "spectral parameter (>= 0)");
  count->add_flag("--oracle", with_oracle, "also run the finite-difference count");
  count->add_flag("--check-stability", stability, "repeat on a doubled domain");

  double lo = 0.0;
  double hi = -1.0;
  int points = 101;
  std::string out_path;
  auto* curves = app.add_subcommand("curves", "conjugate-point curves x*(lambda) as CSV");
  add_common(curves);
  curves->add_option("--lambda-min", lo, "first lambda");
  curves->add_option("--lambda-max", hi, "last lambda (default lambda_inf)");
  curves->add_option("--points", points, "number of lambda values");
  curves->add_option("--out", out_path, "CSV path (default stdout)");

  std::string csv_path;
  auto* box = app.add_subcommand("box", "all four shelves of the Maslov box");
  add_common(box);
  box->add_option("--lambda-lo", lo, "bottom-left corner lambda");
  box->add_option("--lambda-hi", hi, "top lambda (default lambda_inf)");
  box->add_option("--csv", csv_path, "also write shelf,maslov,crossing_params CSV");

  int grid_n = 0;
  double n_scale = 1.0;
  int steps = 400;
  bool doubling = false;
  std::string audit_path;
  auto* oracle = app.add_subcommand("oracle", "finite-difference determinant-sign count");
  add_common(oracle);
  oracle->add_option("--lambda", lambda, "count eigenvalues above this value");
  oracle->add_option("--grid-n", grid_n, "grid intervals (default from the coefficient scale)");
  oracle->add_option("--n-scale", n_scale, "multiplies the grid size")->check(CLI::PositiveNumber);
  oracle->add_option("--steps", steps, "uniform scan steps (>= 100)");
  oracle->add_flag("--doubling-audit", doubling, "repeat with twice the grid size");
  oracle->add_option("--audit", audit_path, "write lambda,sign,log_abs_det,n_negative CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*check) return cmd_check(common, out);
    if (*count) return cmd_count(common, lambda, with_oracle, stability, out);
    if (*curves) return cmd_curves(common, lo, hi, points, out_path, out);
    if (*box) return cmd_box(common, lo, hi, csv_path, out);
    if (*oracle) return cmd_oracle(common, lambda, grid_n, n_scale, steps, doubling, audit_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace qpencil
