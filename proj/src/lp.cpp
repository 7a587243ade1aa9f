#include "osearch/lp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace osearch {

Grid Grid::initial(int n) {
  require(n >= 1, "Grid::initial: n must be positive");
  Grid g;
  g.n = n;
  g.theta.resize(static_cast<size_t>(2 * n + 1));
  g.uniform_m.resize(static_cast<size_t>(2 * n + 1));
  for (int m = 0; m <= 2 * n; ++m) {
    g.theta[static_cast<size_t>(m)] = M_PI * m / (2.0 * n);
    g.uniform_m[static_cast<size_t>(m)] = m;
  }
  return g;
}

int Grid::add_dedup(std::span<const double> pts, double tau) {
  int added = 0;
  for (double p : pts) {
    const double x = std::clamp(p, 0.0, M_PI);
    auto it = std::lower_bound(theta.begin(), theta.end(), x);
    bool dup = false;
    if (it != theta.end() && *it - x <= tau) dup = true;
    if (it != theta.begin() && x - *(it - 1) <= tau) dup = true;
    if (dup) continue;
    const auto idx = static_cast<size_t>(it - theta.begin());
    theta.insert(it, x);
    uniform_m.insert(uniform_m.begin() + static_cast<std::ptrdiff_t>(idx), -1);
    ++added;
  }
  return added;
}

void LpInstance::row_data(const RowRef& r, Eigen::VectorXd& a, double& gamma,
                          double& d) const {
  const int F = num_x();
  switch (r.kind) {
    case RowKind::Interior: {
      sys->eval_row(r.t, r.theta, a, d);
      gamma = 1.0;
      return;
    }
    case RowKind::FixedCap:
      a.setZero(F);
      gamma = 1.0;
      d = fixed_value(r.t, r.theta);
      return;
    case RowKind::BetaCap:
      a.setZero(F);
      gamma = 1.0;
      d = 1.0;
      return;
    case RowKind::BoxLo:
      a.setZero(F);
      a(r.var) = 1.0;
      gamma = 0.0;
      d = opt.var_bound;
      return;
    case RowKind::BoxHi:
      a.setZero(F);
      a(r.var) = -1.0;
      gamma = 0.0;
      d = opt.var_bound;
      return;
  }
  throw Error("row_data: bad kind");
}

double LpInstance::fixed_value(int t, double theta) const {
  if (t == 0) return fejer_eval(sys->n, theta);
  require(t == sys->k, "fixed_value: t is not a fixed step");
  return 1.0;
}

LpInstance build_lp(const ConstraintSystem& sys, const Grid& grid,
                    const LpOptions& opt) {
  require(sys.eliminated || sys.k >= 2,
          "build_lp: explicit systems need interior steps");
  LpInstance lp;
  lp.sys = &sys;
  lp.grid = &grid;
  lp.opt = opt;
  for (int t = 1; t < sys.k; ++t)
    for (double th : grid.theta)
      lp.rows.push_back(RowRef{RowKind::Interior, t, th, -1});
  if (opt.fixed_rows)
    for (double th : grid.theta)
      lp.rows.push_back(RowRef{RowKind::FixedCap, 0, th, -1});
  lp.rows.push_back(RowRef{RowKind::BetaCap, -1, 0.0, -1});
  for (int v = 0; v < sys.num_free; ++v)
    lp.rows.push_back(RowRef{RowKind::BoxLo, -1, 0.0, v});
  for (int v = 0; v < sys.num_free; ++v)
    lp.rows.push_back(RowRef{RowKind::BoxHi, -1, 0.0, v});
  return lp;
}

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "write_lp_text: to_chars failed");
  return std::string(buf, ptr);
}

// Human-readable variable names.  Explicit systems expose one variable per
// interior coefficient (a_t_j); eliminated systems expose their block
// variables (a_t_j for coefficient blocks, s1_i for the slack block).
std::string var_name(const ConstraintSystem& sys, int v) {
  for (const FreeBlock& blk : sys.blocks) {
    if (v >= blk.offset && v < blk.offset + blk.dim) {
      const int local = v - blk.offset;
      if (blk.slack) return fmt::format("s1_{}", local + 1);
      const int j = sys.eliminated ? local + 1 : local;
      return fmt::format("a_{}_{}", blk.t, j);
    }
  }
  throw Error("var_name: variable outside every block");
}

void append_terms(std::string& line, const ConstraintSystem& sys,
                  const Eigen::VectorXd& a, bool& first) {
  for (int v = 0; v < a.size(); ++v) {
    const double c = a(v);
    if (c == 0.0) continue;
    if (first) {
      line += fmt::format("{} {}", num(c), var_name(sys, v));
      first = false;
    } else {
      line += fmt::format(" {} {} {}", c < 0 ? '-' : '+', num(std::abs(c)),
                          var_name(sys, v));
    }
  }
}

}  // namespace

void write_lp_text(const LpInstance& lp, const std::string& path) {
  const ConstraintSystem& sys = *lp.sys;
  std::ofstream out(path);
  require(out.good(), fmt::format("write_lp_text: cannot open '{}'", path));
  out << fmt::format("\\ feasibility-margin LP, n={}, k={}, grid={} angles\n",
                     sys.n, sys.k, lp.grid->size());
  out << "\\ b = worst margin over the grid; maximize it\n";
  out << "Maximize\n obj: b\nSubject To\n";

  // Equality rows exist only in the explicit formulation.
  for (size_t i = 0; i < sys.eq_rows.size(); ++i) {
    std::string line = fmt::format(" {}: ", sys.eq_names[i]);
    bool first = true;
    Eigen::VectorXd dense = Eigen::VectorXd(sys.eq_rows[i]);
    append_terms(line, sys, dense, first);
    if (first) line += "0 b";  // degenerate all-zero row; keep it parseable
    line += fmt::format(" = {}\n", num(sys.eq_rhs[i]));
    out << line;
  }

  int counter = 0;
  Eigen::VectorXd a(sys.num_free);
  for (const RowRef& r : lp.rows) {
    double gamma = 0.0, d = 0.0;
    switch (r.kind) {
      case RowKind::Interior: {
        lp.row_data(r, a, gamma, d);
        std::string line = fmt::format(" g_t{}_{}: ", r.t, counter++);
        bool first = true;
        append_terms(line, sys, a, first);
        line += first ? "- b" : " - b";
        line += fmt::format(" >= {}\n", num(-d));
        out << line;
        break;
      }
      case RowKind::FixedCap:
        out << fmt::format(" cap_t{}_{}: b <= {}\n", r.t, counter++,
                           num(lp.fixed_value(r.t, r.theta)));
        break;
      case RowKind::BetaCap:
      case RowKind::BoxLo:
      case RowKind::BoxHi:
        break;  // emitted in the Bounds section
    }
  }

  out << "Bounds\n";
  for (int v = 0; v < sys.num_free; ++v)
    out << fmt::format(" {} <= {} <= {}\n", num(-lp.opt.var_bound),
                       var_name(sys, v), num(lp.opt.var_bound));
  out << " b <= 1\n";
  out << "End\n";
  out.close();
  require(out.good(), fmt::format("write_lp_text: write to '{}' failed", path));
}

}  // namespace osearch
