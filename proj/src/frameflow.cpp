#include "qpencil/frameflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "qpencil/parallel.hpp"

namespace qpencil {

const char* to_string(PathDirection d) noexcept {
  return d == PathDirection::InX ? "in_x" : "in_lambda";
}

Reference Reference::natural(const PencilProblem& p) {
  return p.is_half_line() ? phi() : dirichlet();
}

LagrangianFrame Reference::frame(const PencilProblem& p, double lambda) const {
  if (kind == Kind::Dirichlet) return dirichlet_frame(p.n());
  return phi_frame(p.boundary(), lambda);
}

CMatrix Reference::to_dirichlet(const PencilProblem& p, double lambda) const {
  const int n = p.n();
  if (kind == Kind::Dirichlet) return CMatrix::Identity(2 * n, 2 * n);
  const CMatrix s = p.boundary().robin_matrix(lambda);
  CMatrix t = CMatrix::Zero(2 * n, 2 * n);
  t.topLeftCorner(n, n) = -s;
  t.topRightCorner(n, n) = CMatrix::Identity(n, n);
  t.bottomLeftCorner(n, n) = -CMatrix::Identity(n, n);
  return t;
}

namespace {

double sample_lambda(const FramePath& path, double param) {
  return path.direction == PathDirection::InX ? path.fixed : param;
}

/// Sample with wrapped phases; the caller unwraps.
PathSample make_sample(const PencilProblem& p, const Reference& ref, double param, double lambda,
                       const CMatrix& raw, const FlowOptions& opts) {
  PathSample s;
  s.param = param;
  s.frame = LagrangianFrame::from_stacked(positive_qr(raw));
  s.lagrangian_defect = s.frame.lagrangian_defect();
  if (!(s.lagrangian_defect <= opts.lag_tol)) {
    throw Error(ErrorKind::IntegrationFailure, "Lagrangian defect " + sci(s.lagrangian_defect) +
                                                   " at parameter " + sci(param));
  }
  s.trace.param = param;
  s.trace.W = w_relative(s.frame, ref.frame(p, lambda));
  s.unitary_defect = unitary_defect(s.trace.W);
  s.trace.phases = unitary_eigenphases(s.trace.W).phases;
  const CMatrix tf = ref.to_dirichlet(p, lambda) * s.frame.stacked();
  const Complex d = det_complex(CMatrix(tf.topRows(p.n())));
  if (std::abs(d) > 1e-300) s.det_arg = std::arg(d);
  return s;
}

using SampleMaker = std::function<PathSample(double)>;

/// Appends the sample at `target`, inserting midpoints until every phase
/// jump is at most max_jump.
void append_refined(std::vector<PathSample>& samples, double target, const SampleMaker& make,
                    double max_jump, double floor, PathSample first) {
  std::vector<PathSample> pending;
  pending.push_back(std::move(first));
  while (!pending.empty()) {
    PathSample& s = pending.back();
    const PathSample& last = samples.back();
    double jump = 0.0;
    RVector cont = continue_phases(last.trace.phases, s.trace.phases, &jump);
    if (jump <= max_jump) {
      s.trace.phases = std::move(cont);
      samples.push_back(std::move(s));
      pending.pop_back();
      continue;
    }
    if (std::abs(s.param - last.param) < floor) {
      throw Error(ErrorKind::IntegrationFailure,
                  "phase jump " + std::to_string(jump) + " unresolved near parameter " +
                      std::to_string(s.param));
    }
    pending.push_back(make(0.5 * (last.param + s.param)));
  }
  (void)target;
}

int sheet_change_count(const RVector& a, const RVector& b) {
  int total = 0;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    total += std::abs(phase_sheet(b(j), 0.0) - phase_sheet(a(j), 0.0));
  return total;
}

/// Adaptive lambda grid shared by the propagated and asymptotic lambda-paths.
void build_lambda_samples(FramePath& path, double lo, double hi, const SampleMaker& make) {
  const FlowOptions& opts = path.options;
  const int m = std::max(opts.lambda_samples, 2);
  std::vector<double> params;
  for (int i = 0; i < m; ++i) params.push_back(i + 1 == m ? hi : lo + (hi - lo) * i / (m - 1));
  for (const double s : opts.lambda_seeds)
    if (s > lo && s < hi) params.push_back(s);
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  std::vector<PathSample> grid(params.size());
  parallel_for(grid.size(), [&](std::size_t i) { grid[i] = make(params[i]); });

  const double scale = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  for (;;) {
    std::vector<PathSample> out;
    out.push_back(grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i)
      append_refined(out, grid[i].param, make, opts.max_phase_jump, opts.lambda_floor * scale, grid[i]);

    // det(first block) flips its argument by pi at each crossing.  A flip the
    // phases did not register is a crossing too fast to sample; bracket it
    // down to param_tol.
    bool refined = false;
    std::vector<PathSample> next;
    next.push_back(out.front());
    path.sharp_crossings.clear();
    for (std::size_t i = 1; i < out.size(); ++i) {
      const PathSample& a = out[i - 1];
      const PathSample& b = out[i];
      const bool defined = std::isfinite(a.det_arg) && std::isfinite(b.det_arg);
      const bool flip = std::abs(wrap_angle(b.det_arg - a.det_arg)) > 0.5 * kPi;
      const bool mismatch = defined && (flip != (sheet_change_count(a.trace.phases, b.trace.phases) % 2 == 1));
      if (mismatch) {
        if (b.param - a.param > opts.param_tol) {
          PathSample mid = make(0.5 * (a.param + b.param));
          mid.trace.phases = continue_phases(a.trace.phases, mid.trace.phases);
          next.push_back(std::move(mid));
          refined = true;
        } else {
          ConjugatePoint cp;
          cp.param = 0.5 * (a.param + b.param);
          cp.multiplicity = 1;
          cp.direction = 1;
          cp.kind = PathDirection::InLambda;
          cp.sharp = true;
          path.sharp_crossings.push_back(cp);
        }
      }
      next.push_back(b);
    }
    if (!refined) {
      path.samples = std::move(out);
      return;
    }
    // Re-wrap and restart the continuation with the inserted samples.
    for (auto& s : next) {
      RVector w(s.trace.phases.size());
      for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = wrap_angle(s.trace.phases(j));
      std::sort(w.data(), w.data() + w.size());
      s.trace.phases = w;
    }
    grid = std::move(next);
  }
}

void reverse_path(FramePath& path) {
  std::reverse(path.samples.begin(), path.samples.end());
  for (auto& cp : path.sharp_crossings) cp.direction = -cp.direction;
  std::reverse(path.sharp_crossings.begin(), path.sharp_crossings.end());
}

}  // namespace

double FramePath::max_lagrangian_defect() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.lagrangian_defect);
  return m;
}

double FramePath::max_unitary_defect() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.unitary_defect);
  return m;
}

LagrangianFrame FramePath::frame_at(double param) const {
  if (!problem) throw Error(ErrorKind::InvalidArgument, "path has no problem attached");
  if (direction == PathDirection::InLambda) {
    return unstable_frame_at(*problem, param, x_seed, fixed, options.integrator);
  }
  if (segments.empty() || param <= segments.front().x0) {
    const auto& first = samples.front().param < samples.back().param ? samples.front() : samples.back();
    return first.frame;
  }
  auto it = std::upper_bound(segments.begin(), segments.end(), param,
                             [](double x, const DenseSegment& s) { return x < s.x0; });
  const DenseSegment& seg = *std::prev(it);
  const double x = std::min(param, seg.x0 + seg.h);
  return LagrangianFrame::from_stacked(positive_qr(seg.eval(x)));
}

LagrangianFrame FramePath::reference_at(double param) const {
  return reference.frame(*problem, sample_lambda(*this, param));
}

LagrangianFrame unstable_frame_at(const PencilProblem& p, double lambda, double x_seed, double x,
                                  const IntegratorOptions& opts) {
  const CMatrix seed = unstable_graph_frame(p, lambda).stacked();
  if (!(x > x_seed)) return LagrangianFrame::from_stacked(positive_qr(seed));
  FrameIntegrator integ([&p, lambda](double s) { return pencil_matrix(p.coeffs(s), lambda); }, opts);
  const CMatrix f = integ.integrate(x_seed, x, seed);
  return LagrangianFrame::from_stacked(positive_qr(f));
}

FramePath propagate_in_x(const PencilProblem& p, double lambda, double x_from, double x_to,
                         const LagrangianFrame& seed, const FlowOptions& opts, Reference ref) {
  if (seed.n() != p.n()) throw Error(ErrorKind::InvalidArgument, "seed dimension mismatch");
  seed.validate(opts.lag_tol);
  FramePath path;
  path.direction = PathDirection::InX;
  path.fixed = lambda;
  path.reference = ref;
  path.options = opts;
  path.problem = &p;
  const double lo = std::min(x_from, x_to);
  const double hi = std::max(x_from, x_to);
  path.x_seed = lo;

  path.samples.push_back(make_sample(p, ref, lo, lambda, seed.stacked(), opts));
  FrameIntegrator integ([&p, lambda](double s) { return pencil_matrix(p.coeffs(s), lambda); },
                        opts.integrator);
  const double floor = 1e-12 * std::max(1.0, std::abs(hi - lo));
  integ.integrate(lo, hi, seed.stacked(), [&](const AcceptedStep& step) {
    path.segments.push_back(step.segment);
    const DenseSegment& seg = path.segments.back();
    const double end = seg.x0 + seg.h;
    SampleMaker make = [&](double x) {
      return make_sample(p, ref, x, lambda, seg.eval(x), opts);
    };
    append_refined(path.samples, end, make, opts.max_phase_jump, floor,
                   make_sample(p, ref, end, lambda, step.frame, opts));
  });
  if (x_from > x_to) reverse_path(path);
  return path;
}

FramePath propagate_in_lambda(const PencilProblem& p, double x_fixed, double x_seed,
                              double lambda_from, double lambda_to, const FlowOptions& opts,
                              Reference ref) {
  FramePath path;
  path.direction = PathDirection::InLambda;
  path.fixed = x_fixed;
  path.x_seed = x_seed;
  path.reference = ref;
  path.options = opts;
  path.problem = &p;
  const double lo = std::min(lambda_from, lambda_to);
  const double hi = std::max(lambda_from, lambda_to);
  SampleMaker make = [&](double lam) {
    const LagrangianFrame f = unstable_frame_at(p, lam, x_seed, x_fixed, opts.integrator);
    return make_sample(p, ref, lam, lam, f.stacked(), opts);
  };
  if (hi - lo <= 0.0) {
    path.samples.push_back(make(lo));
    return path;
  }
  build_lambda_samples(path, lo, hi, make);
  if (lambda_from > lambda_to) reverse_path(path);
  return path;
}

FramePath asymptotic_lambda_path(const PencilProblem& p, double x_label, double lambda_from,
                                 double lambda_to, const FlowOptions& opts, Reference ref) {
  FramePath path;
  path.direction = PathDirection::InLambda;
  path.fixed = x_label;
  path.x_seed = x_label;
  path.reference = ref;
  path.options = opts;
  path.problem = &p;
  const double lo = std::min(lambda_from, lambda_to);
  const double hi = std::max(lambda_from, lambda_to);
  SampleMaker make = [&](double lam) {
    return make_sample(p, ref, lam, lam, unstable_graph_frame(p, lam).stacked(), opts);
  };
  if (hi - lo <= 0.0) {
    path.samples.push_back(make(lo));
    return path;
  }
  build_lambda_samples(path, lo, hi, make);
  if (lambda_from > lambda_to) reverse_path(path);
  return path;
}

double crossing_form(const LagrangianFrame& frame, const CMatrix& frame_rate, const CVector& w) {
  const Eigen::Index n = frame.n();
  if (frame_rate.rows() != 2 * n || frame_rate.cols() != n || w.size() != n)
    throw Error(ErrorKind::InvalidArgument, "crossing_form: dimension mismatch");
  const CMatrix& x = frame.X();
  const CMatrix& y = frame.Y();
  const CMatrix xd = frame_rate.topRows(n);
  const CMatrix yd = frame_rate.bottomRows(n);
  const CMatrix m = (x - kI * y).inverse();
  const CMatrix w_d = (x + kI * y) * m;
  const CVector residual = (w_d + CMatrix::Identity(n, n)) * w;
  if (!(residual.norm() <= 1e-4 * std::max(1.0, w.norm()))) {
    throw Error(ErrorKind::InvalidArgument,
                "crossing_form: vector is not in ker(W + I), residual " + std::to_string(residual.norm()));
  }
  const CMatrix b = m.adjoint() * (x.adjoint() * yd - y.adjoint() * xd) * m;
  return 2.0 * (w.adjoint() * b * w)(0, 0).real();
}

namespace {

/// Restricted crossing form eigenvalues at a refined crossing.
void corroborate(const FramePath& path, ConjugatePoint& cp) {
  const PencilProblem& p = *path.problem;
  const double lam = sample_lambda(path, cp.param);
  const Eigen::Index n = p.n();
  const CMatrix t = path.reference.to_dirichlet(p, lam);
  CMatrix tf;
  CMatrix rate;
  if (path.direction == PathDirection::InX) {
    const LagrangianFrame f = path.frame_at(cp.param);
    CMatrix fdot(2 * n, n);
    fdot.topRows(n) = f.Y();
    fdot.bottomRows(n) = pencil_matrix(p.coeffs(cp.param), lam) * f.X();
    tf = t * f.stacked();
    rate = t * fdot;
  } else {
    // Canonical bases make the finite difference independent of the
    // integrator's choice of basis at each lambda.
    const double h = 1e-6 * std::max(1.0, std::abs(lam));
    auto canon = [&](double l) {
      const CMatrix tl = path.reference.to_dirichlet(p, l);
      return LagrangianFrame::from_stacked(tl * path.frame_at(l).stacked()).canonical().stacked();
    };
    tf = canon(cp.param);
    rate = (canon(cp.param + h) - canon(cp.param - h)) / (2.0 * h);
  }
  const LagrangianFrame frame = LagrangianFrame::from_stacked(tf);
  const Eigenphases e = unitary_eigenphases(w_of(frame));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = j;
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return kPi - std::abs(e.phases(a)) < kPi - std::abs(e.phases(b));
  });
  const int mult = std::min<int>(cp.multiplicity, static_cast<int>(n));
  CMatrix v(n, mult);
  for (int k = 0; k < mult; ++k) v.col(k) = e.vectors.col(idx[static_cast<std::size_t>(k)]);

  const CMatrix m = (frame.X() - kI * frame.Y()).inverse();
  const CMatrix b = m.adjoint() *
                    (frame.X().adjoint() * rate.bottomRows(n) - frame.Y().adjoint() * rate.topRows(n)) * m;
  const CMatrix restricted = v.adjoint() * (b + b.adjoint()) * v;
  const auto eig = herm_eig(restricted, 1.0);
  cp.form_min = eig.values.minCoeff();
  cp.form_max = eig.values.maxCoeff();
  cp.corroborated = cp.direction > 0 ? cp.form_min > 0.0 : cp.form_max < 0.0;
}

}  // namespace

std::vector<ConjugatePoint> detect_crossings(const FramePath& path) {
  std::vector<ConjugatePoint> out;
  const auto& s = path.samples;
  if (s.size() < 2 || !path.problem) {
    out.insert(out.end(), path.sharp_crossings.begin(), path.sharp_crossings.end());
    return out;
  }
  const FlowOptions& opts = path.options;
  const Eigen::Index n = s.front().trace.phases.size();
  const std::size_t last = s.size() - 1;
  auto sheet = [&](std::size_t i, Eigen::Index j) {
    const double tol = (i == 0 || i == last) ? opts.angle_tol : 0.0;
    return phase_sheet(s[i].trace.phases(j), tol);
  };

  // A strand parked on -1 across several interior samples is not transversal.
  for (Eigen::Index j = 0; j < n; ++j) {
    std::size_t run = 0;
    for (std::size_t i = 1; i < last; ++i) {
      const double d = std::abs(wrap_angle(s[i].trace.phases(j) - kPi));
      run = d <= opts.angle_tol ? run + 1 : 0;
      if (run >= 3 && std::abs(s[i].param - s[i - 2].param) > 10.0 * opts.param_tol) {
        throw Error(ErrorKind::NonTransversalCrossing,
                    "eigenphase stays at pi near parameter " + std::to_string(s[i].param));
      }
    }
  }

  for (std::size_t i = 0; i < last; ++i) {
    std::vector<ConjugatePoint> local;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int d = sheet(i + 1, j) - sheet(i, j);
      if (d == 0) continue;
      double a = s[i].param;
      double b = s[i + 1].param;
      RVector phases_a = s[i].trace.phases;
      const int sheet_a = sheet(i, j);
      const bool at_end = (i + 1 == last);
      while (std::abs(b - a) > opts.param_tol) {
        const double mid = 0.5 * (a + b);
        const LagrangianFrame f = path.frame_at(mid);
        const CMatrix w = w_relative(f, path.reference_at(mid));
        RVector pm = continue_phases(phases_a, unitary_eigenphases(w).phases);
        if (phase_sheet(pm(j), 0.0) == sheet_a) {
          a = mid;
          phases_a = pm;
        } else {
          b = mid;
        }
      }
      ConjugatePoint cp;
      cp.param = (at_end && std::abs(b - s[i + 1].param) <= opts.param_tol) ? b : 0.5 * (a + b);
      cp.multiplicity = std::abs(d);
      cp.direction = d > 0 ? 1 : -1;
      cp.kind = path.direction;
      local.push_back(cp);
    }
    std::sort(local.begin(), local.end(),
              [](const ConjugatePoint& x, const ConjugatePoint& y) { return x.param < y.param; });
    for (const auto& cp : local) {
      const double window = std::max(1e-6, 10.0 * opts.param_tol);
      if (!out.empty() && out.back().direction == cp.direction &&
          std::abs(out.back().param - cp.param) <= window && !out.back().sharp) {
        out.back().multiplicity += cp.multiplicity;
      } else {
        out.push_back(cp);
      }
    }
  }
  for (auto& cp : out) {
    try {
      corroborate(path, cp);
    } catch (const Error&) {
      cp.corroborated = false;
    }
  }
  out.insert(out.end(), path.sharp_crossings.begin(), path.sharp_crossings.end());
  std::stable_sort(out.begin(), out.end(), [&](const ConjugatePoint& x, const ConjugatePoint& y) {
    const bool ascending = s.front().param <= s.back().param;
    return ascending ? x.param < y.param : x.param > y.param;
  });
  return out;
}

int path_maslov(const FramePath& path) {
  int total = 0;
  if (path.samples.size() >= 2) {
    const RVector& a = path.samples.front().trace.phases;
    const RVector& b = path.samples.back().trace.phases;
    for (Eigen::Index j = 0; j < a.size(); ++j)
      total += phase_sheet(b(j), path.options.angle_tol) - phase_sheet(a(j), path.options.angle_tol);
  }
  for (const auto& cp : path.sharp_crossings) total += cp.direction * cp.multiplicity;
  return total;
}

void write_path_csv(const FramePath& path, std::ostream& out) {
  const Eigen::Index n = path.samples.empty() ? 0 : path.samples.front().trace.phases.size();
  out << "param";
  for (Eigen::Index j = 0; j < n; ++j) out << ",phase_" << (j + 1);
  out << ",lagrangian_defect\n";
  out.precision(12);
  for (const auto& s : path.samples) {
    out << s.param;
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << s.trace.phases(j);
    out << ',' << s.lagrangian_defect << '\n';
  }
}

}  // namespace qpencil
