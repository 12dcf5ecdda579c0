#include "qpencil/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Cholesky>

#include "qpencil/linalg.hpp"
#include "qpencil/parallel.hpp"

namespace qpencil {

namespace {

CMatrix assemble(const DiscretizedPencil& dp, const std::vector<CMatrix>& diag, const std::vector<CMatrix>* off) {
  const int n = dp.n;
  const int m = dp.block_count();
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(n) * m);
  for (int k = 0; k < m; ++k) {
    out.block(k * n, k * n, n, n) = diag[static_cast<std::size_t>(k)];
    if (off && k + 1 < m) {
      const CMatrix& b = (*off)[static_cast<std::size_t>(k)];
      out.block(k * n, (k + 1) * n, n, n) = b;
      out.block((k + 1) * n, k * n, n, n) = b.adjoint();
    }
  }
  return out;
}

/// Relative size below which an LDL* pivot counts as zero.
constexpr double kPivotTol = 1e-14;

/// Block Schur recursion with K x K blocks (K = Eigen::Dynamic for general n).
template <int K>
void block_schur(const DiscretizedPencil& dp, double lambda, bool& singular, double& log_abs, int& neg) {
  using Block = Eigen::Matrix<Complex, K, K>;
  const int m = dp.block_count();
  const int n = dp.n;
  auto q_diag = [&](int k) {
    const auto i = static_cast<std::size_t>(k);
    return Block(lambda * lambda * dp.a2_diag[i] + lambda * dp.a1_diag[i] + dp.a0_diag[i]);
  };
  Block s = q_diag(0);
  for (int k = 0;; ++k) {
    Eigen::LDLT<Block> ldlt(s);
    const auto d = ldlt.vectorD();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    for (int j = 0; j < n; ++j) {
      const double dj = d(j).real();
      if (std::abs(d(j).imag()) > 1e-10 * std::max(1.0, std::abs(dj)))
        throw Error(ErrorKind::NotHermitian, "det_eval: complex pivot in Hermitian factorization");
      if (std::abs(dj) <= kPivotTol * scale) singular = true;
      if (dj < 0.0) ++neg;
      log_abs += std::log(std::max(std::abs(dj), 1e-300));
    }
    if (k + 1 == m) break;
    const Block b = dp.a0_off[static_cast<std::size_t>(k)];
    const Block next = q_diag(k + 1) - b.adjoint() * ldlt.solve(b);
    s = (next + next.adjoint()) * 0.5;
  }
}

}  // namespace

CMatrix DiscretizedPencil::dense_A0() const { return assemble(*this, a0_diag, &a0_off); }
CMatrix DiscretizedPencil::dense_A1() const { return assemble(*this, a1_diag, nullptr); }
CMatrix DiscretizedPencil::dense_A2() const { return assemble(*this, a2_diag, nullptr); }

CMatrix DiscretizedPencil::dense_Q(Complex lambda) const {
  return lambda * lambda * dense_A2() + lambda * dense_A1() + dense_A0();
}

DiscretizedPencil discretize(const PencilProblem& p, double a, double b, int N) {
  if (N < 50) throw Error(ErrorKind::InvalidArgument, "discretize: need N >= 50");
  if (!(b > a)) throw Error(ErrorKind::InvalidArgument, "discretize: need a < b");
  const bool half = p.is_half_line();
  if (half && p.boundary().kind != PhiKind::Linear)
    throw Error(ErrorKind::UnsupportedBoundary, "oracle: nonlinear phi makes Q(lambda) non-quadratic");

  DiscretizedPencil dp;
  dp.n = p.n();
  dp.h = (b - a) / N;
  const double h = dp.h;
  const double h2 = h * h;
  const int n = dp.n;
  const CMatrix id = CMatrix::Identity(n, n);
  dp.grid.resize(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) dp.grid[static_cast<std::size_t>(i)] = a + h * i;
  dp.grid.back() = b;

  const int last = half ? N : N - 1;   // index of the last unknown node
  for (int i = 1; i <= last; ++i) {
    const double x = dp.grid[static_cast<std::size_t>(i)];
    const CoefficientSample s = p.coeffs(x);
    dp.nodes.push_back(x);
    dp.a0_diag.push_back(CMatrix(2.0 / h2 * id - s.V));
    dp.a1_diag.push_back(s.f1);
    dp.a2_diag.push_back(s.f2);
    if (i < last) dp.a0_off.push_back(CMatrix(-1.0 / h2 * id));
  }
  if (half) {
    // Ghost node y_{N+1} = y_{N-1} + 2h (c + C2 lambda) y_N, halved to keep the
    // row Hermitian, then scaled by sqrt(2) on both sides (a congruence).
    const BoundaryData& bd = p.boundary();
    const CoefficientSample s = p.coeffs(b);
    CMatrix c = 0.5 * (bd.c + bd.c.adjoint());
    CMatrix C2 = 0.5 * (bd.C2 + bd.C2.adjoint());
    dp.a0_diag.back() = 2.0 / h2 * id - 2.0 / h * c - s.V;
    dp.a1_diag.back() = s.f1 - 2.0 / h * C2;
    dp.a2_diag.back() = s.f2;
    if (!dp.a0_off.empty()) dp.a0_off.back() *= std::sqrt(2.0);
  }
  return dp;
}

DetSample det_eval(const DiscretizedPencil& dp, double lambda) {
  DetSample out;
  out.lambda = lambda;
  const int m = dp.block_count();
  const int n = dp.n;
  bool singular = false;
  double log_abs = 0.0;
  int neg = 0;

  auto q_diag = [&](int k) {
    const auto i = static_cast<std::size_t>(k);
    return CMatrix(lambda * lambda * dp.a2_diag[i] + lambda * dp.a1_diag[i] + dp.a0_diag[i]);
  };

  // Schur recursion S_{k+1} = D_{k+1} - B_k^* S_k^{-1} B_k.
  if (n == 1) {
    double s = q_diag(0)(0, 0).real();
    for (int k = 0;; ++k) {
      const double scale = std::max(1.0, std::abs(q_diag(k)(0, 0).real()));
      if (std::abs(s) <= kPivotTol * scale) singular = true;
      if (s < 0.0) ++neg;
      log_abs += std::log(std::max(std::abs(s), 1e-300));
      if (k + 1 == m) break;
      const double bk = std::norm(dp.a0_off[static_cast<std::size_t>(k)](0, 0));
      s = q_diag(k + 1)(0, 0).real() - bk / s;
    }
  } else if (n == 2) {
    block_schur<2>(dp, lambda, singular, log_abs, neg);
  } else if (n == 3) {
    block_schur<3>(dp, lambda, singular, log_abs, neg);
  } else {
    block_schur<Eigen::Dynamic>(dp, lambda, singular, log_abs, neg);
  }
  out.n_negative = neg;
  out.log_abs_det = log_abs;
  out.sign = singular ? 0 : (neg % 2 == 0 ? 1 : -1);
  return out;
}

namespace {

/// Evaluates at lambda, nudging off an exactly singular point.
DetSample nonsingular_eval(const DiscretizedPencil& dp, double lambda, double width) {
  DetSample s = det_eval(dp, lambda);
  double nudge = std::max(1e-13, 1e-9 * width);
  for (int tries = 0; s.sign == 0 && tries < 8; ++tries, nudge *= 4.0) s = det_eval(dp, lambda + nudge);
  return s;
}

void split_interval(const DiscretizedPencil& dp, const DetSample& lo, const DetSample& hi, double cluster_tol,
                    std::vector<Bracket>& out, std::vector<DetSample>* audit) {
  const int change = lo.n_negative - hi.n_negative;
  if (change == 0) return;
  const bool odd = (lo.sign != hi.sign);
  if (std::abs(change) == 1 || hi.lambda - lo.lambda <= cluster_tol) {
    Bracket br{lo.lambda, hi.lambda, lo.sign, hi.sign, change, false};
    br.degenerate = std::abs(change) != 1 || !odd;
    out.push_back(br);
    return;
  }
  const double mid = 0.5 * (lo.lambda + hi.lambda);
  const DetSample ms = nonsingular_eval(dp, mid, hi.lambda - lo.lambda);
  if (audit) audit->push_back(ms);
  split_interval(dp, lo, ms, cluster_tol, out, audit);
  split_interval(dp, ms, hi, cluster_tol, out, audit);
}

}  // namespace

std::vector<Bracket> det_scan(const DiscretizedPencil& dp, double lambda_lo, double lambda_hi, int steps,
                              double cluster_tol, std::vector<DetSample>* audit) {
  if (steps < 100) throw Error(ErrorKind::InvalidArgument, "det_scan: need at least 100 steps");
  if (!(lambda_hi > lambda_lo)) return {};
  std::vector<DetSample> samples(static_cast<std::size_t>(steps) + 1);
  const double width = (lambda_hi - lambda_lo) / steps;
  parallel_for(samples.size(), [&](std::size_t i) {
    const double lam = i == samples.size() - 1 ? lambda_hi : lambda_lo + width * static_cast<double>(i);
    samples[i] = nonsingular_eval(dp, lam, width);
  });
  if (audit) audit->insert(audit->end(), samples.begin(), samples.end());
  std::vector<Bracket> out;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    split_interval(dp, samples[i], samples[i + 1], cluster_tol, out, audit);
  if (audit)
    std::sort(audit->begin(), audit->end(),
              [](const DetSample& x, const DetSample& y) { return x.lambda < y.lambda; });
  return out;
}

double refine_root(const DiscretizedPencil& dp, const Bracket& bracket, double tol) {
  double lo = bracket.lo;
  double hi = bracket.hi;
  const int sign_lo = bracket.sign_lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int s = det_eval(dp, mid).sign;
    if (s == 0) return mid;
    if (s == sign_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

OracleCount count_real_eigs(const DiscretizedPencil& dp, double lambda_lo, double lambda_hi,
                            const OracleOptions& opts) {
  OracleCount out;
  if (!(lambda_hi > lambda_lo)) return out;
  const auto brackets = det_scan(dp, lambda_lo, lambda_hi, opts.steps, opts.cluster_tol, &out.audit);
  if (!out.audit.empty()) out.inertia_count = out.audit.front().n_negative - out.audit.back().n_negative;
  for (const auto& br : brackets) {
    if (br.degenerate) {
      out.cluster_caveat = true;
      out.notes.push_back("unsplit bracket [" + std::to_string(br.lo) + ", " + std::to_string(br.hi) +
                          "] with inertia change " + std::to_string(br.inertia_change));
      for (int k = 0; k < std::abs(br.inertia_change); ++k) out.roots.push_back(0.5 * (br.lo + br.hi));
      continue;
    }
    if (br.inertia_change < 0) out.notes.push_back("root with decreasing inertia near " + std::to_string(br.lo));
    out.roots.push_back(refine_root(dp, br, opts.root_tol));
  }
  std::sort(out.roots.begin(), out.roots.end());
  for (std::size_t i = 1; i < out.roots.size(); ++i)
    if (out.roots[i] - out.roots[i - 1] < opts.cluster_tol) out.cluster_caveat = true;
  out.count = static_cast<int>(out.roots.size());
  if (out.count != out.inertia_count)
    out.notes.push_back("root count " + std::to_string(out.count) + " differs from inertia change " +
                        std::to_string(out.inertia_count));
  return out;
}

int default_grid_size(const PencilProblem& p, double a, double b, double lambda_hi) {
  double kmax = 0.0;
  const int probes = 2001;
  for (int i = 0; i < probes; ++i) {
    const double x = a + (b - a) * i / (probes - 1);
    kmax = std::max(kmax, hermitian_norm(pencil_matrix(p.coeffs(x), lambda_hi)));
  }
  const double h = std::min(0.02, kmax > 0.0 ? 0.3 / std::sqrt(kmax) : 0.02);
  return std::max(50, static_cast<int>(std::ceil((b - a) / h)));
}

OracleReport oracle_count(const PencilProblem& p, double lambda, double domain_scale, int N, double n_scale,
                          const OracleOptions& opts) {
  Truncation t = find_truncation(p);
  t.x_min *= domain_scale;
  if (p.is_whole_line()) t.x_max *= domain_scale;
  if (p.is_truncated()) {
    t.x_max = p.right_end();
    t.x_min = std::min(t.x_min, t.x_max - 1.0);
  }
  OracleReport rep;
  rep.a = t.x_min;
  rep.b = p.is_half_line() ? 0.0 : t.x_max;
  rep.lambda = lambda;
  rep.lambda_hi = lambda_max(p, default_sample_grid(p, t, 2001));
  if (N <= 0) N = default_grid_size(p, rep.a, rep.b, rep.lambda_hi);
  rep.N = std::max(50, static_cast<int>(std::lround(N * n_scale)));
  const DiscretizedPencil dp = discretize(p, rep.a, rep.b, rep.N);
  rep.h = dp.h;
  rep.result = count_real_eigs(dp, lambda, std::max(rep.lambda_hi, lambda), opts);
  return rep;
}

void write_det_csv(const std::vector<DetSample>& samples, std::ostream& out) {
  out << "lambda,sign,log_abs_det,n_negative\n";
  out.precision(17);
  for (const auto& s : samples)
    out << s.lambda << ',' << s.sign << ',' << s.log_abs_det << ',' << s.n_negative << '\n';
}

}  // namespace qpencil
