#include "osearch/refine.hpp"

#include <lapacke.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "osearch/cert_io.hpp"
#include "osearch/kernels.hpp"

namespace osearch {

namespace {

// Real eigenvalues of the colleague matrix of a Chebyshev-basis polynomial:
// candidates for roots in [-1, 1].  Coefficients must have a nonzero lead.
std::vector<double> colleague_roots(const std::vector<double>& d) {
  const int m = static_cast<int>(d.size()) - 1;
  std::vector<double> roots;
  if (m <= 0) return roots;
  if (m == 1) {
    roots.push_back(-d[0] / d[1]);
    return roots;
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  C(0, 1) = 1.0;
  for (int i = 1; i < m - 1; ++i) {
    C(i, i - 1) = 0.5;
    C(i, i + 1) = 0.5;
  }
  for (int j = 0; j < m; ++j)
    C(m - 1, j) = -d[static_cast<size_t>(j)] / (2.0 * d[static_cast<size_t>(m)]);
  C(m - 1, m - 2) += 0.5;

  std::vector<double> wr(static_cast<size_t>(m)), wi(static_cast<size_t>(m));
  // dgeev balances internally, which matters for precision: colleague
  // matrices of high-degree expansions are badly scaled.
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', m, C.data(), m, wr.data(),
                    wi.data(), nullptr, 1, nullptr, 1);
  require(info == 0, fmt::format("colleague_roots: dgeev failed ({})", info));
  for (int i = 0; i < m; ++i) {
    if (std::abs(wi[static_cast<size_t>(i)]) <= 1e-6 &&
        std::abs(wr[static_cast<size_t>(i)]) <= 1.0 + 1e-6)
      roots.push_back(std::clamp(wr[static_cast<size_t>(i)], -1.0, 1.0));
  }
  return roots;
}

void trim_trailing(std::vector<double>& c) {
  double maxabs = 0.0;
  for (double v : c) maxabs = std::max(maxabs, std::abs(v));
  const double cut = 1e-14 * maxabs;
  while (c.size() > 1 && std::abs(c.back()) <= cut) c.pop_back();
}

// Root candidates of `global` inside [a, b] by local Chebyshev re-expansion:
// sample on escalating Lobatto grids, accept once the coefficient tail has
// decayed, otherwise bisect the interval.  `noise` is the absolute floor of
// the tail test: local expansions cannot resolve below the evaluation noise
// of the global form, and demanding that they do would recurse forever on
// patches whose own magnitude sits near that floor.
void roots_by_subdivision(const ChebForm& global, double noise, double a,
                          double b, int depth, std::vector<double>& out) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const bool splittable = depth < 24;
  // Short-circuit patches that cannot pass the tail test at any ladder
  // size: a degree-m form completes about m * dtheta / pi oscillations over
  // the patch, each needing a couple of local coefficients to resolve.
  const int m = static_cast<int>(global.b.size()) - 1;
  const double osc = m *
                     (std::acos(std::clamp(a, -1.0, 1.0)) -
                      std::acos(std::clamp(b, -1.0, 1.0))) /
                     M_PI;
  if (splittable && osc > 400.0) {
    roots_by_subdivision(global, noise, a, mid, depth + 1, out);
    roots_by_subdivision(global, noise, mid, b, depth + 1, out);
    return;
  }
  static constexpr int kSizes[] = {65, 129, 257, 513};
  std::vector<double> last;
  bool resolved = false;
  for (int N : kSizes) {
    std::vector<double> f(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) {
      const double xl = std::cos(M_PI * j / (N - 1));
      f[static_cast<size_t>(j)] = global.eval(mid + half * xl);
    }
    std::vector<double> coef = kernels::dct1(f);
    for (double& v : coef) v /= (N - 1);
    coef.front() *= 0.5;
    coef.back() *= 0.5;
    double maxabs = 0.0;
    for (double v : coef) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs < std::max(1e-300, noise)) return;  // numerically zero patch
    const int tail_len = std::max(3, N / 32);
    double tail = 0.0;
    for (int j = N - tail_len; j < N; ++j)
      tail = std::max(tail, std::abs(coef[static_cast<size_t>(j)]));
    if (tail <= std::max(1e-13 * maxabs, noise)) {
      trim_trailing(coef);
      // Eigenvalue root-finding is cubic in the local degree, so a resolved
      // patch that is still large splits once more instead.
      if (!splittable || static_cast<int>(coef.size()) <= 201) {
        for (double xl : colleague_roots(coef)) out.push_back(mid + half * xl);
        return;
      }
      resolved = true;
      break;
    }
    last = std::move(coef);
  }
  if (!splittable && !resolved) {
    // Interval refuses to resolve; use the deepest expansion and let the
    // polishing pass flag anything this misses as unconverged.
    trim_trailing(last);
    for (double xl : colleague_roots(last)) out.push_back(mid + half * xl);
    return;
  }
  roots_by_subdivision(global, noise, a, mid, depth + 1, out);
  roots_by_subdivision(global, noise, mid, b, depth + 1, out);
}

}  // namespace

std::vector<CriticalPoint> critical_points(const ChebForm& q,
                                           const Tolerances& tol,
                                           int subdivide_degree) {
  std::vector<CriticalPoint> cps;
  ChebForm f = q.derivative();
  std::vector<double> fc = f.b;
  trim_trailing(fc);
  const int deg = static_cast<int>(fc.size()) - 1;
  if (deg < 1) {
    double maxabs = 0.0;
    for (double v : fc) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs == 0.0) return cps;  // constant q: no interior extrema
    if (deg == 0) return cps;       // constant nonzero derivative
  }

  const ChebForm f2 = f.derivative();
  double scale = 0.0;
  for (double v : f.b) scale += std::abs(v);
  scale = std::max(scale, 1e-300);

  std::vector<double> raw;
  if (deg <= subdivide_degree) {
    raw = colleague_roots(fc);
  } else {
    // Clenshaw evaluation of the full form carries absolute error of order
    // deg * eps * sum|coeffs|; local re-expansions bottom out there.
    const double noise = 1e-15 * static_cast<double>(deg) * scale;
    roots_by_subdivision(f, noise, -1.0, 1.0, 0, raw);
  }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-12; }),
            raw.end());

  for (double x0 : raw) {
    long double x = x0;
    for (int it = 0; it < 8; ++it) {
      const long double fx = f.eval_extended(x);
      const long double fpx = f2.eval_extended(x);
      if (std::abs(static_cast<double>(fpx)) < 1e-300) break;
      const long double dx = fx / fpx;
      x -= dx;
      if (x < -1.0L) x = -1.0L;
      if (x > 1.0L) x = 1.0L;
      if (std::abs(static_cast<double>(dx)) < 1e-17) break;
    }
    CriticalPoint cp;
    cp.x = static_cast<double>(x);
    cp.value = static_cast<double>(q.eval_extended(x));
    cp.residual = std::abs(static_cast<double>(f.eval_extended(x))) / scale;
    cp.converged = cp.residual <= tol.root_residual;
    cps.push_back(cp);
  }
  return cps;
}

std::vector<double> negative_minima(const SymLaurentPoly& q,
                                    const Tolerances& tol) {
  const ChebForm cheb = to_cheb(q);
  const ChebForm d2 = cheb.derivative().derivative();
  double d2scale = 0.0;
  for (double v : d2.b) d2scale += std::abs(v);

  std::vector<double> thetas;
  for (const CriticalPoint& cp : critical_points(cheb, tol)) {
    if (cp.value >= 0.0) continue;
    // Keep minima and flat saddles; skip clear maxima (their neighbouring
    // minima are deeper and already candidates).
    if (d2.eval(cp.x) < -1e-9 * std::max(1.0, d2scale)) continue;
    thetas.push_back(std::acos(std::clamp(cp.x, -1.0, 1.0)));
  }
  if (q.eval_extended(0.0) < 0.0) thetas.push_back(0.0);
  if (q.eval_extended(M_PI) < 0.0) thetas.push_back(M_PI);
  std::sort(thetas.begin(), thetas.end());
  return thetas;
}

CertifyResult certify_nonnegative(const SymLaurentPoly& q,
                                  const Tolerances& tol) {
  CertifyResult res;
  const ChebForm cheb = to_cheb(q);
  auto cps = critical_points(cheb, tol);
  res.num_critical = static_cast<int>(cps.size());
  double min_v = std::numeric_limits<double>::infinity();
  double min_x = 1.0;
  for (const CriticalPoint& cp : cps) {
    if (!cp.converged) ++res.num_unconverged;
    if (cp.value < min_v) {
      min_v = cp.value;
      min_x = cp.x;
    }
  }
  for (double x : {1.0, -1.0}) {  // theta = 0 and pi
    const double v = static_cast<double>(cheb.eval_extended(x));
    if (v < min_v) {
      min_v = v;
      min_x = x;
    }
  }
  res.min_value = min_v;
  res.min_theta = std::acos(std::clamp(min_x, -1.0, 1.0));
  res.nonneg = (res.num_unconverged == 0) && (min_v > tol.delta_pos);
  return res;
}

namespace {

double elapsed_sec(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SymLaurentPoly unit_poly(int n) {
  std::vector<double> c(static_cast<size_t>(n), 0.0);
  c[0] = 1.0;
  return SymLaurentPoly{std::move(c)};
}

}  // namespace

FeasibilityCertificate refine_loop(int n, int k, const RefineOptions& opt) {
  require(opt.backend != nullptr, "refine_loop: an LP backend is required");
  require(n >= 1 && k >= 1, "refine_loop: bad dimensions");
  const auto t0 = std::chrono::steady_clock::now();

  FeasibilityCertificate cert;
  cert.n = n;
  cert.k = k;
  cert.tol = opt.tol;
  const int max_iters = opt.max_iters >= 0 ? opt.max_iters : opt.tol.max_refine_iters;

  if (k == 1) {
    // No interior steps: the instance stands or falls with the single
    // linking identity between the two fixed endpoint polynomials.
    ConstraintSystem sys = build_system(n, 1, true);
    IterationLog L{0, sys.contradiction ? -sys.contradiction_residual : 1.0, 0, 0};
    cert.log.push_back(L);
    if (opt.progress) opt.progress(L);
    if (sys.contradiction) {
      cert.verdict = Verdict::Infeasible;
      cert.beta = -sys.contradiction_residual;
      cert.detail = fmt::format(
          "linking identity violated with residual {:.3e}; no step tuple exists",
          sys.contradiction_residual);
    } else {
      cert.verdict = Verdict::Feasible;
      cert.beta = 1.0;
      cert.q = {fejer_kernel(n), unit_poly(n)};
      cert.margins = {certify_nonnegative(cert.q[1], opt.tol).min_value};
      cert.detail = "endpoints alone satisfy every constraint";
    }
    cert.seconds = elapsed_sec(t0);
    return cert;
  }

  ConstraintSystem sys = build_system(n, k, true);
  Grid grid = Grid::initial(n);
  std::vector<RowRef> warm;
  double seconds_prev = 0.0;
  int iter = 0;

  if (opt.resume && !opt.checkpoint_path.empty() &&
      std::filesystem::exists(opt.checkpoint_path)) {
    Checkpoint cp = load_checkpoint(opt.checkpoint_path);
    require(cp.n == n && cp.k == k,
            fmt::format("checkpoint is for n={}, k={}", cp.n, cp.k));
    grid = cp.grid;
    warm = cp.basis;
    cert.log = cp.log;
    seconds_prev = cp.seconds_so_far;
    iter = static_cast<int>(cp.log.size());
  }

  auto save_cp = [&]() {
    if (opt.checkpoint_path.empty()) return;
    Checkpoint cp;
    cp.n = n;
    cp.k = k;
    cp.grid = grid;
    cp.basis = warm;
    cp.log = cert.log;
    cp.seconds_so_far = seconds_prev + elapsed_sec(t0);
    cp.tol = opt.tol;
    save_checkpoint(cp, opt.checkpoint_path);
  };

  Tolerances cur = opt.tol;
  bool escalated = false;
  int since_checkpoint = 0;

  while (true) {
    if (iter >= max_iters) {
      cert.verdict = Verdict::Inconclusive;
      cert.detail = fmt::format("iteration cap {} reached", max_iters);
      break;
    }
    if (opt.time_limit_sec > 0.0 &&
        seconds_prev + elapsed_sec(t0) > opt.time_limit_sec) {
      cert.verdict = Verdict::Inconclusive;
      cert.detail = fmt::format("time limit {}s reached", opt.time_limit_sec);
      break;
    }

    LpOptions lo;
    lo.fixed_rows = false;  // endpoint polys are certified inputs, not rows
    if (opt.time_limit_sec > 0.0)
      lo.time_budget_sec =
          std::max(1.0, opt.time_limit_sec - seconds_prev - elapsed_sec(t0));
    LpInstance lp = build_lp(sys, grid, lo);
    LpSolution s = opt.backend->solve(lp, cur, warm.empty() ? nullptr : &warm);
    if (s.status != LpStatus::Optimal) {
      cert.verdict = Verdict::Inconclusive;
      cert.detail = fmt::format("LP backend stopped ({})",
                                s.status == LpStatus::IterationLimit
                                    ? "iteration or time limit"
                                    : "numerical trouble");
      break;
    }
    warm = s.basis;
    cert.beta = s.beta;
    cert.lp_pivots_total += s.pivots;
    IterationLog L{iter, s.beta, grid.size(), 0};

    if (s.beta < -cur.delta_neg) {
      cert.log.push_back(L);
      if (opt.progress) opt.progress(L);
      cert.verdict = Verdict::Infeasible;
      cert.detail = fmt::format(
          "grid relaxation value {:.6e} is below -{:.1e}; no admissible "
          "tuple can be nonnegative on this grid",
          s.beta, cur.delta_neg);
      cert.grid = grid.theta;
      break;
    }

    std::vector<SymLaurentPoly> qs = sys.reconstruct_all(s.x);
    std::vector<double> cuts;
    for (int t = 1; t < k; ++t) {
      auto m = negative_minima(qs[static_cast<size_t>(t)], cur);
      cuts.insert(cuts.end(), m.begin(), m.end());
    }

    if (!cuts.empty()) {
      const int added = grid.add_dedup(cuts, cur.dedup_theta);
      L.new_points = added;
      cert.log.push_back(L);
      if (opt.progress) opt.progress(L);
      ++iter;
      if (added == 0) {
        if (!escalated) {
          escalated = true;
          cur.lp_feas = 1e-11;
          cur.lp_gap = 1e-11;
          continue;
        }
        cert.verdict = Verdict::Inconclusive;
        cert.detail = "stalled: every violated point duplicates the grid";
        cert.grid = grid.theta;
        break;
      }
      if (++since_checkpoint >= std::max(1, opt.checkpoint_every)) {
        save_cp();
        since_checkpoint = 0;
      }
      continue;
    }

    cert.log.push_back(L);
    if (opt.progress) opt.progress(L);
    ++iter;

    // No violated points found: certify every step polynomial globally.
    cert.margins.assign(static_cast<size_t>(k), 0.0);
    bool all_ok = true;
    std::string fail;
    for (int t = 1; t <= k; ++t) {
      CertifyResult c = certify_nonnegative(qs[static_cast<size_t>(t)], cur);
      cert.margins[static_cast<size_t>(t - 1)] = c.min_value;
      if (!c.nonneg && all_ok) {
        all_ok = false;
        fail = fmt::format(
            "step {} has min {:.3e} at theta={:.12g} ({} unconverged roots)",
            t, c.min_value, c.min_theta, c.num_unconverged);
      }
    }
    if (all_ok) {
      cert.verdict = Verdict::Feasible;
      cert.detail = "all step polynomials certified strictly positive at extrema";
      cert.q = qs;
      cert.grid = grid.theta;
      break;
    }
    if (!escalated) {
      escalated = true;
      cur.lp_feas = 1e-11;
      cur.lp_gap = 1e-11;
      continue;
    }
    cert.verdict = Verdict::Inconclusive;
    cert.detail = fmt::format("certification failed after escalation: {}", fail);
    cert.q = qs;
    cert.grid = grid.theta;
    break;
  }

  // Keep a resumable checkpoint when stopping on a resource cap.
  if (cert.verdict == Verdict::Inconclusive) save_cp();
  cert.seconds = seconds_prev + elapsed_sec(t0);
  return cert;
}

SearchResult max_feasible_n(int k, int lo, int hi, const RefineOptions& opt) {
  require(2 <= lo && lo <= hi, "max_feasible_n: need 2 <= lo <= hi");
  SearchResult res;
  res.k = k;
  std::map<int, FeasibilityCertificate> cache;

  auto probe = [&](int n) -> Verdict {
    auto it = cache.find(n);
    if (it == cache.end()) {
      RefineOptions po = opt;
      if (!po.checkpoint_path.empty())
        po.checkpoint_path = fmt::format("{}.n{}", opt.checkpoint_path, n);
      FeasibilityCertificate c = refine_loop(n, k, po);
      require(c.verdict != Verdict::Inconclusive,
              fmt::format("probe at n={} was inconclusive: {}", n, c.detail));
      res.probes.emplace_back(n, c.verdict);
      it = cache.emplace(n, std::move(c)).first;
    }
    return it->second.verdict;
  };

  // Widen downward until the low end is feasible.
  while (probe(lo) != Verdict::Feasible) {
    require(lo > 2, fmt::format("no feasible size at or above n=2 for k={}", k));
    hi = lo;
    lo = std::max(2, lo / 2);
  }
  // Widen upward until the high end is infeasible.
  while (probe(hi) == Verdict::Feasible) {
    lo = hi;
    require(hi <= (1 << 24), "max_feasible_n: upper bracket exploded");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (probe(mid) == Verdict::Feasible)
      lo = mid;
    else
      hi = mid;
  }
  res.n_max = lo;
  res.at_max = cache.at(lo);
  res.at_max_plus = cache.at(lo + 1);
  return res;
}

}  // namespace osearch
