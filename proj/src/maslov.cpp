#include "qpencil/maslov.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <sstream>

#include "qpencil/parallel.hpp"

namespace qpencil {

const char* to_string(Shelf s) noexcept {
  switch (s) {
    case Shelf::Top: return "top";
    case Shelf::Right: return "right";
    case Shelf::Bottom: return "bottom";
    case Shelf::Left: return "left";
  }
  return "unknown";
}

const ShelfResult* SpectralCountReport::shelf(Shelf s) const {
  for (const auto& r : shelves)
    if (r.shelf == s) return &r;
  return nullptr;
}

int CurveTable::strands_at(double lambda) const {
  return static_cast<int>(std::count_if(points.begin(), points.end(),
                                        [&](const CurvePoint& c) { return c.lambda == lambda; }));
}

ShelfResult shelf_index(const FramePath& path, Shelf shelf) {
  ShelfResult r;
  r.shelf = shelf;
  r.crossings = detect_crossings(path);
  r.maslov = path_maslov(path);
  if (!path.samples.empty()) {
    r.param_from = path.samples.front().param;
    r.param_to = path.samples.back().param;
  }
  r.fixed = path.fixed;
  r.max_lagrangian_defect = path.max_lagrangian_defect();
  r.max_unitary_defect = path.max_unitary_defect();
  return r;
}

MorseCount bottom_shelf_correction(const PencilProblem& p, double lambda, double zero_tol) {
  const CMatrix k = pencil_matrix(p.coeffs.minus(), lambda);
  CMatrix root;
  try {
    root = sqrt_pd(k);
  } catch (const Error& e) {
    throw Error(ErrorKind::HyperbolicityLost, std::string("bottom shelf: ") + e.what());
  }
  return morse_index(CMatrix(root - p.boundary().robin_matrix(lambda)), zero_tol);
}

Truncation count_truncation(const PencilProblem& p, const CountOptions& opts) {
  Truncation t = find_truncation(p, opts.limit_tol);
  t.x_min *= opts.domain_scale;
  if (p.is_whole_line()) t.x_max *= opts.domain_scale;
  return t;
}

double problem_lambda_inf(const PencilProblem& p, const Truncation& t) {
  return lambda_max(p, default_sample_grid(p, t, 2001));
}

namespace {

constexpr double kMinTopMargin = 0.2;

FramePath left_path(const PencilProblem& p, double lambda, double x_lo, double x_hi,
                    const CountOptions& opts, Reference ref) {
  return propagate_in_x(p, lambda, x_lo, x_hi, unstable_graph_frame(p, lambda), opts.flow, ref);
}

int total_multiplicity(const ShelfResult& s) {
  int total = 0;
  for (const auto& c : s.crossings) total += c.multiplicity;
  return total;
}

std::string describe(const SpectralCountReport& r) {
  std::ostringstream os;
  os << "box sum " << (r.box_sum ? *r.box_sum : 0) << " (";
  for (std::size_t i = 0; i < r.shelves.size(); ++i) {
    if (i) os << ", ";
    os << to_string(r.shelves[i].shelf) << '=' << r.shelves[i].maslov;
  }
  os << ')';
  return os.str();
}

void fill_halfline_terms(SpectralCountReport& rep, const PencilProblem& p, const FramePath& left,
                         const ShelfResult& shelf, double lambda, const CountOptions& opts) {
  rep.maslov = shelf.maslov;
  rep.crossing_total = total_multiplicity(shelf);
  rep.kernel_dim_at_lambda =
      intersection_dim(left.samples.back().frame, phi_frame(p.boundary(), lambda), opts.flow.angle_tol);
  rep.morse_correction = bottom_shelf_correction(p, lambda, opts.zero_tol);
  rep.N = -rep.maslov - rep.kernel_dim_at_lambda + rep.morse_correction.n_negative +
          rep.morse_correction.n_zero;
}

void require_nonnegative(const SpectralCountReport& rep) {
  if (rep.N < 0) {
    throw InconsistentBoxError("negative eigenvalue count " + std::to_string(rep.N) +
                                   " at lambda=" + std::to_string(rep.lambda),
                               rep);
  }
}

}  // namespace

SpectralCountReport spectral_count_halfline(const PencilProblem& p, double lambda,
                                            const CountOptions& opts) {
  if (!p.is_half_line()) throw Error(ErrorKind::InvalidArgument, "spectral_count_halfline: not a half-line problem");
  SpectralCountReport rep;
  rep.lambda = lambda;
  rep.domain = p.domain_name();
  const Truncation t = count_truncation(p, opts);
  rep.x_min = t.x_min;
  rep.x_max = 0.0;
  rep.lambda_inf = problem_lambda_inf(p, t);
  const FramePath left = left_path(p, lambda, t.x_min, 0.0, opts, Reference::phi());
  ShelfResult shelf = shelf_index(left, Shelf::Left);
  fill_halfline_terms(rep, p, left, shelf, lambda, opts);
  rep.shelves.push_back(std::move(shelf));
  require_nonnegative(rep);
  return rep;
}

SpectralCountReport spectral_count_truncated(const PencilProblem& p, double L, double lambda,
                                             const CountOptions& opts) {
  SpectralCountReport rep;
  rep.lambda = lambda;
  rep.domain = "truncated";
  Truncation t = count_truncation(p, opts);
  t.x_min = std::min(t.x_min, L - 1.0);
  t.x_max = L;
  rep.x_min = t.x_min;
  rep.x_max = L;
  rep.lambda_inf = problem_lambda_inf(p, t);
  const FramePath left = left_path(p, lambda, t.x_min, L, opts, Reference::dirichlet());
  ShelfResult shelf = shelf_index(left, Shelf::Left);
  rep.maslov = shelf.maslov;
  rep.crossing_total = total_multiplicity(shelf);
  rep.kernel_dim_at_lambda = intersection_dim(left.samples.back().frame, dirichlet_frame(p.n()),
                                              opts.flow.angle_tol);
  rep.N = -rep.maslov;
  rep.shelves.push_back(std::move(shelf));
  require_nonnegative(rep);
  return rep;
}

SpectralCountReport spectral_count_wholeline(const PencilProblem& p, double lambda,
                                             const CountOptions& opts) {
  if (!p.is_whole_line())
    throw Error(ErrorKind::InvalidArgument, "spectral_count_wholeline: not a whole-line problem");
  SpectralCountReport rep;
  rep.lambda = lambda;
  rep.domain = p.domain_name();
  const Truncation t = count_truncation(p, opts);
  rep.x_min = t.x_min;
  rep.x_max = t.x_max;
  rep.lambda_inf = problem_lambda_inf(p, t);
  const FramePath left = left_path(p, lambda, t.x_min, t.x_max, opts, Reference::dirichlet());
  ShelfResult shelf = shelf_index(left, Shelf::Left);
  rep.maslov = shelf.maslov;
  rep.crossing_total = total_multiplicity(shelf);
  rep.N = -rep.maslov;
  if (rep.crossing_total != rep.N)
    rep.notes.push_back("left-shelf crossing multiplicity " + std::to_string(rep.crossing_total) +
                        " differs from -Maslov " + std::to_string(rep.N));
  rep.shelves.push_back(std::move(shelf));
  if (opts.check_stability) {
    CountOptions doubled = opts;
    doubled.domain_scale *= 2.0;
    doubled.check_stability = false;
    rep.truncation_stable = spectral_count_wholeline(p, lambda, doubled).N == rep.N;
  }
  require_nonnegative(rep);
  return rep;
}

SpectralCountReport spectral_count(const PencilProblem& p, double lambda, const CountOptions& opts) {
  if (p.is_half_line()) return spectral_count_halfline(p, lambda, opts);
  if (const auto* t = std::get_if<Truncated>(&p.domain)) return spectral_count_truncated(p, t->L, lambda, opts);
  return spectral_count_wholeline(p, lambda, opts);
}

namespace {

/// Lambda values separating the jumps of the x-path index on [x_min, x_top].
/// Two crossings of the top shelf inside one lambda step can cancel in the
/// determinant parity check, so the top path is seeded with these points.
std::vector<double> top_seeds(const PencilProblem& p, double x_min, double x_top, double lo, double hi,
                              const CountOptions& opts, Reference ref) {
  if (!(hi > lo) || !(x_top > x_min)) return {};
  auto index_at = [&](double lam) { return path_maslov(left_path(p, lam, x_min, x_top, opts, ref)); };
  const int m = std::max(opts.flow.lambda_samples, 2);
  std::vector<double> lams(static_cast<std::size_t>(m));
  std::vector<int> idx(lams.size());
  for (int i = 0; i < m; ++i) lams[static_cast<std::size_t>(i)] = i + 1 == m ? hi : lo + (hi - lo) * i / (m - 1);
  parallel_for(lams.size(), [&](std::size_t i) { idx[i] = index_at(lams[i]); });

  const double floor = 1e-6 * std::max(1.0, std::abs(hi));
  std::vector<double> seeds(lams.begin(), lams.end());
  std::vector<std::pair<std::pair<double, int>, std::pair<double, int>>> work;
  for (std::size_t i = 0; i + 1 < lams.size(); ++i) work.push_back({{lams[i], idx[i]}, {lams[i + 1], idx[i + 1]}});
  while (!work.empty()) {
    const auto [a, b] = work.back();
    work.pop_back();
    if (std::abs(a.second - b.second) <= 1 || b.first - a.first <= floor) continue;
    const double mid = 0.5 * (a.first + b.first);
    const int im = index_at(mid);
    seeds.push_back(mid);
    work.push_back({a, {mid, im}});
    work.push_back({{mid, im}, b});
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

ShelfResult top_shelf(const PencilProblem& p, double x_top, double x_min, double lo, double hi,
                      const CountOptions& opts, Reference ref) {
  FlowOptions flow = opts.flow;
  const auto seeds = top_seeds(p, x_min, x_top, lo, hi, opts, ref);
  flow.lambda_seeds.insert(flow.lambda_seeds.end(), seeds.begin(), seeds.end());
  return shelf_index(propagate_in_lambda(p, x_top, x_min, lo, hi, flow, ref), Shelf::Top);
}

SpectralCountReport box_attempt(const PencilProblem& p, double lo, double hi, const Truncation& t,
                                double lam_inf, const CountOptions& opts) {
  SpectralCountReport rep;
  rep.lambda = lo;
  rep.lambda_hi = hi;
  rep.domain = p.domain_name();
  rep.x_min = t.x_min;
  rep.lambda_inf = lam_inf;

  if (p.is_half_line()) {
    const Reference ref = Reference::phi();
    rep.x_max = 0.0;
    rep.x_top = 0.0;
    // The four shelves are independent here.
    ShelfResult top, right, bottom, left_shelf;
    std::optional<FramePath> left;
    parallel_for(4, [&](std::size_t task) {
      switch (task) {
        case 0:
          left.emplace(left_path(p, lo, t.x_min, 0.0, opts, ref));
          left_shelf = shelf_index(*left, Shelf::Left);
          break;
        case 1: top = top_shelf(p, 0.0, t.x_min, lo, hi, opts, ref); break;
        case 2:
          right = shelf_index(
              propagate_in_x(p, hi, 0.0, t.x_min, unstable_graph_frame(p, hi), opts.flow, ref), Shelf::Right);
          break;
        default:
          bottom = shelf_index(asymptotic_lambda_path(p, t.x_min, hi, lo, opts.flow, ref), Shelf::Bottom);
      }
    });
    fill_halfline_terms(rep, p, *left, left_shelf, lo, opts);
    bottom.numeric_maslov = bottom.maslov;
    const MorseCount m_lo = bottom_shelf_correction(p, lo, opts.zero_tol);
    const MorseCount m_hi = bottom_shelf_correction(p, hi, opts.zero_tol);
    bottom.maslov = -(m_lo.n_negative - m_hi.n_negative);
    if (*bottom.numeric_maslov != bottom.maslov)
      rep.notes.push_back("bottom shelf: asymptotic path gives " + std::to_string(*bottom.numeric_maslov) +
                          ", Morse count gives " + std::to_string(bottom.maslov));
    rep.shelves = {std::move(top), std::move(right), std::move(bottom), std::move(left_shelf)};
  } else {
    const Reference ref = Reference::dirichlet();
    double x_end = t.x_max;
    double x_top = t.x_max;
    if (const auto* tr = std::get_if<Truncated>(&p.domain)) {
      x_end = tr->L;
      x_top = tr->L;
      rep.x_min = std::min(t.x_min, tr->L - 1.0);
    }
    const FramePath full = left_path(p, lo, rep.x_min, x_end, opts, ref);
    const ShelfResult full_shelf = shelf_index(full, Shelf::Left);
    rep.maslov = full_shelf.maslov;
    rep.crossing_total = total_multiplicity(full_shelf);
    rep.N = -full_shelf.maslov;
    rep.x_max = x_end;
    double last = rep.x_min;
    for (const auto& c : full_shelf.crossings) last = std::max(last, c.param);

    // x_top depends on the full left path; the remaining shelves are independent.
    // Past the last conjugate point the unstable frame at x_top grows
    // exponentially sensitive to lambda near each eigenvalue, and roundoff can
    // break the Lagrangian guard on the top path.  Any x_top beyond `last`
    // gives the same box, so a failing top path retries closer in.
    ShelfResult left_shelf, top, right, bottom;
    for (double margin = opts.top_margin;; margin *= 0.5) {
      if (p.is_whole_line()) x_top = std::min(x_end, last + margin);
      rep.x_top = x_top;
      left_shelf = full_shelf;
      try {
        parallel_for(4, [&](std::size_t task) {
          switch (task) {
            case 0:
              if (x_top < x_end)
                left_shelf = shelf_index(left_path(p, lo, rep.x_min, x_top, opts, ref), Shelf::Left);
              break;
            case 1: top = top_shelf(p, x_top, rep.x_min, lo, hi, opts, ref); break;
            case 2:
              right = shelf_index(
                  propagate_in_x(p, hi, x_top, rep.x_min, unstable_graph_frame(p, hi), opts.flow, ref),
                  Shelf::Right);
              break;
            default:
              bottom = shelf_index(asymptotic_lambda_path(p, rep.x_min, hi, lo, opts.flow, ref), Shelf::Bottom);
          }
        });
        break;
      } catch (const Error& e) {
        if (!p.is_whole_line() || e.kind() != ErrorKind::IntegrationFailure || margin < kMinTopMargin) throw;
        rep.notes.push_back("x_top " + sci(x_top) + " abandoned (" + e.what() + "); retrying closer");
      }
    }
    bottom.numeric_maslov = bottom.maslov;
    rep.shelves = {std::move(top), std::move(right), std::move(bottom), std::move(left_shelf)};
  }
  int sum = 0;
  for (const auto& s : rep.shelves) sum += s.maslov;
  rep.box_sum = sum;
  return rep;
}

}  // namespace

SpectralCountReport maslov_box(const PencilProblem& p, double lambda_lo, double lambda_hi,
                               const CountOptions& opts) {
  const Truncation t = count_truncation(p, opts);
  const double lam_inf = problem_lambda_inf(p, t);
  const double hi = lambda_hi < 0.0 ? lam_inf : lambda_hi;
  if (!(lambda_lo >= 0.0) || hi < lambda_lo)
    throw Error(ErrorKind::InvalidArgument, "maslov_box: need 0 <= lambda_lo <= lambda_hi");

  if (hi == lambda_lo) {
    SpectralCountReport rep;
    rep.lambda = lambda_lo;
    rep.lambda_hi = hi;
    rep.domain = p.domain_name();
    rep.x_min = t.x_min;
    rep.x_max = t.x_max;
    rep.lambda_inf = lam_inf;
    for (const Shelf s : {Shelf::Top, Shelf::Right, Shelf::Bottom, Shelf::Left}) {
      ShelfResult r;
      r.shelf = s;
      rep.shelves.push_back(r);
    }
    rep.box_sum = 0;
    return rep;
  }

  SpectralCountReport rep = box_attempt(p, lambda_lo, hi, t, lam_inf, opts);
  if (*rep.box_sum != 0 && opts.retry_on_inconsistent_box) {
    CountOptions tight = opts;
    tight.flow.integrator.rel_tol *= 0.5;
    tight.flow.integrator.abs_tol *= 0.5;
    tight.flow.max_phase_jump *= 0.5;
    tight.flow.lambda_samples = 2 * tight.flow.lambda_samples;
    rep = box_attempt(p, lambda_lo, hi, t, lam_inf, tight);
    rep.notes.push_back("box recomputed with halved tolerances");
  }
  if (*rep.box_sum != 0) throw InconsistentBoxError(describe(rep), rep);
  require_nonnegative(rep);
  return rep;
}

CurveTable eigenvalue_curves(const PencilProblem& p, const std::vector<double>& lambda_grid,
                             const CountOptions& opts) {
  const Truncation t = count_truncation(p, opts);
  double x_lo = t.x_min;
  double x_hi = t.x_max;
  if (const auto* tr = std::get_if<Truncated>(&p.domain)) {
    x_lo = std::min(x_lo, tr->L - 1.0);
    x_hi = tr->L;
  }
  const Reference ref = Reference::natural(p);

  struct Slot {
    double lambda = 0.0;
    bool failed = false;
    std::vector<double> loci;
  };
  auto evaluate = [&](std::vector<Slot>& slots) {
    parallel_for(slots.size(), [&](std::size_t i) {
      try {
        const FramePath path = left_path(p, slots[i].lambda, x_lo, x_hi, opts, ref);
        for (const auto& c : detect_crossings(path))
          for (int k = 0; k < c.multiplicity; ++k) slots[i].loci.push_back(c.param);
        std::sort(slots[i].loci.begin(), slots[i].loci.end());
      } catch (const Error&) {
        slots[i].failed = true;
      }
    });
  };

  std::vector<Slot> slots;
  for (const double l : lambda_grid) slots.push_back({l, false, {}});
  evaluate(slots);

  // Strand births and deaths: bisect between neighbours whose counts differ.
  if (lambda_grid.size() >= 2) {
    const auto [mn, mx] = std::minmax_element(lambda_grid.begin(), lambda_grid.end());
    const double min_width = 1e-3 * (*mx - *mn);
    for (int round = 0; round < opts.curve_refinements; ++round) {
      std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.lambda < b.lambda; });
      std::vector<Slot> fresh;
      for (std::size_t i = 0; i + 1 < slots.size(); ++i) {
        const Slot& a = slots[i];
        const Slot& b = slots[i + 1];
        if (a.failed || b.failed || a.loci.size() == b.loci.size()) continue;
        if (b.lambda - a.lambda <= min_width) continue;
        fresh.push_back({0.5 * (a.lambda + b.lambda), false, {}});
      }
      if (fresh.empty()) break;
      evaluate(fresh);
      slots.insert(slots.end(), fresh.begin(), fresh.end());
    }
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.lambda < b.lambda; });

  CurveTable table;
  for (const auto& slot : slots) {
    if (slot.failed) {
      table.failed_lambdas.push_back(slot.lambda);
      continue;
    }
    for (std::size_t k = 0; k < slot.loci.size(); ++k)
      table.points.push_back({slot.lambda, static_cast<int>(k), slot.loci[k]});
  }
  return table;
}

}  // namespace qpencil
