// Command-line front end: synthesize, certify, execute, and export exact
// translation-invariant query algorithms for ordered search.
//
// Exit codes: 0 success / feasible, 2 infeasible, 3 inconclusive, 1 error.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "osearch/cert_io.hpp"
#include "osearch/kernels.hpp"
#include "osearch/refine.hpp"
#include "osearch/simulate.hpp"
#include "osearch/spectral.hpp"

using namespace osearch;

namespace {

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return 0;
    case Verdict::Infeasible: return 2;
    case Verdict::Inconclusive: return 3;
  }
  return 1;
}

const char* verdict_word(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

void print_progress(const IterationLog& l) {
  std::cout << fmt::format("iter={} beta={:.12g} |G|={} new_pts={}\n", l.iter,
                           l.beta, l.grid_size, l.new_points);
  std::cout.flush();
}

struct CommonArgs {
  std::string solver = "embedded";
  int max_iters = -1;
  double time_limit = 0.0;
  std::string checkpoint;
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--solver", a.solver,
                  "LP backend: embedded (auto), embedded-simplex, "
                  "embedded-ipm, or scipy")
      ->check(
          CLI::IsMember({"embedded", "embedded-simplex", "embedded-ipm", "scipy"}));
  cmd->add_option("--max-iters", a.max_iters,
                  "cap on refinement iterations (-1 = default)");
  cmd->add_option("--time-limit", a.time_limit,
                  "wall-clock budget in seconds (0 = none)");
  cmd->add_option("--checkpoint", a.checkpoint, "checkpoint file path");
  cmd->add_flag("--resume", a.resume, "continue from --checkpoint");
}

RefineOptions make_options(const CommonArgs& a, LpBackend& backend) {
  RefineOptions opt;
  opt.backend = &backend;
  opt.max_iters = a.max_iters;
  opt.time_limit_sec = a.time_limit;
  opt.checkpoint_path = a.checkpoint;
  opt.resume = a.resume;
  opt.progress = print_progress;
  return opt;
}

// Factor pipeline for a feasible certificate: flat start, interior spectral
// factors, trivial finish.
std::vector<std::vector<cd>> factor_pipeline(const FeasibilityCertificate& feas,
                                             std::vector<FactorRecord>* records) {
  std::vector<std::vector<cd>> p;
  p.push_back(std::vector<cd>(static_cast<size_t>(feas.n),
                              cd(1.0 / std::sqrt(static_cast<double>(feas.n)), 0.0)));
  for (int t = 1; t < feas.k; ++t) {
    double residual = 0.0;
    auto b = spectral_factor(feas.q[static_cast<size_t>(t)], feas.tol, &residual);
    if (records) records->push_back(FactorRecord{t, b, residual});
    p.push_back(std::move(b));
  }
  p.push_back({cd(1.0, 0.0)});
  return p;
}

// Post-synthesis pipeline shared by `feasible` and `maxn --out`: factorize,
// compile, simulate, and (for moderate sizes) verify the Gram tuple.
CertificateFile enrich(const FeasibilityCertificate& feas, double epsilon) {
  CertificateFile cert;
  cert.feas = feas;
  cert.epsilon = epsilon;
  if (feas.verdict != Verdict::Feasible) return cert;

  const auto p = factor_pipeline(feas, &cert.factors);
  double worst_factor = 0.0;
  for (const auto& f : cert.factors) worst_factor = std::max(worst_factor, f.residual);

  BuildReport build_rep;
  // The compile guard sees factor residuals amplified by an O(n) evaluation
  // sum, and the phases are re-normalized to exact unit modulus anyway; the
  // simulated success floor below is the binding check.
  Tolerances build_tol = feas.tol;
  build_tol.eq_residual = std::max(build_tol.eq_residual, 1e-6);
  const AlgorithmSpec alg = build_algorithm(p, feas.n, build_tol, &build_rep);
  const SimulationReport sim = kernels::simulate_all(alg, kernels::Exec::Parallel);
  cert.sim = sim;
  std::cout << fmt::format(
      "factors: max autocorrelation residual {:.3e}; phase mismatch {:.3e}\n",
      worst_factor, build_rep.max_modulus_mismatch);
  std::cout << fmt::format("simulation: min success {:.12f}, max norm drift {:.3e}\n",
                           sim.min_success, sim.max_norm_drift);

  if (feas.n <= 2048) {
    std::vector<Eigen::MatrixXcd> Q;
    Q.push_back(Eigen::MatrixXcd::Constant(feas.n, feas.n, cd(1.0 / feas.n, 0.0)));
    for (int t = 1; t < feas.k; ++t)
      Q.push_back(gram_rank1(p[static_cast<size_t>(t)], feas.n));
    Eigen::MatrixXcd last = Eigen::MatrixXcd::Zero(feas.n, feas.n);
    last(0, 0) = 1.0;
    Q.push_back(std::move(last));
    Tolerances gram_tol = feas.tol;
    gram_tol.eq_residual = std::max(gram_tol.eq_residual, 1e-8);
    const GramCheck gc = verify_gram_tuple(Q, epsilon, gram_tol);
    cert.gram_equality_residual = gc.max_equality_residual;
    cert.gram_min_eigenvalue = gc.min_eigenvalue;
    cert.final_entry = gc.final_entry;
    std::cout << fmt::format(
        "gram tuple: {} (equality residual {:.3e}, min eigenvalue {:.3e})\n",
        gc.ok ? "verified" : gc.detail, gc.max_equality_residual,
        gc.min_eigenvalue);
  } else {
    std::cout << "gram tuple: skipped (n too large; factor residuals cover it)\n";
  }
  return cert;
}

int cmd_feasible(int n, int k, const CommonArgs& args, const std::string& out,
                 double epsilon) {
  auto backend = make_lp_backend(args.solver);
  const RefineOptions opt = make_options(args, *backend);
  const FeasibilityCertificate feas = refine_loop(n, k, opt);
  std::cout << fmt::format("verdict: {} (n={}, k={}, beta={:.12g}, {} pivots, {:.1f}s)\n",
                           verdict_word(feas.verdict), n, k, feas.beta,
                           feas.lp_pivots_total, feas.seconds);
  if (!feas.detail.empty()) std::cout << "detail: " << feas.detail << "\n";

  const CertificateFile cert = enrich(feas, epsilon);
  if (!out.empty()) {
    save_certificate(cert, out);
    std::cout << "certificate written to " << out << "\n";
  }
  return verdict_code(feas.verdict);
}

int cmd_maxn(int k, int lo, int hi, const CommonArgs& args,
             const std::string& out, double epsilon) {
  auto backend = make_lp_backend(args.solver);
  RefineOptions opt = make_options(args, *backend);
  const SearchResult r = max_feasible_n(k, lo, hi, opt);
  for (const auto& [n, v] : r.probes)
    std::cout << fmt::format("probe n={} verdict={}\n", n, verdict_word(v));
  std::cout << fmt::format("n_max={} (k={})\n", r.n_max, k);
  std::cout << fmt::format("rate k/log2(n_max) = {:.6f}\n",
                           k / std::log2(static_cast<double>(r.n_max)));
  if (!out.empty()) {
    save_certificate(enrich(r.at_max, epsilon), out);
    save_certificate(enrich(r.at_max_plus, epsilon), out + ".plus");
    std::cout << "boundary certificates written to " << out << " and " << out
              << ".plus\n";
  }
  return 0;
}

int cmd_verify(const std::string& path, double epsilon) {
  const CertificateFile cert = load_certificate(path);
  const FeasibilityCertificate& feas = cert.feas;
  std::cout << fmt::format("loaded: n={}, k={}, stored verdict {}\n", feas.n,
                           feas.k, verdict_word(feas.verdict));
  bool ok = true;
  auto check = [&](bool cond, const std::string& what) {
    std::cout << fmt::format("  [{}] {}\n", cond ? "ok" : "FAIL", what);
    ok = ok && cond;
  };

  if (feas.verdict == Verdict::Infeasible) {
    if (feas.k == 1) {
      check(build_system(feas.n, 1).contradiction,
            "single-query linking contradiction reproduces");
    } else {
      check(feas.beta < -feas.tol.delta_neg,
            fmt::format("grid optimum {:.6g} is decisively negative", feas.beta));
    }
    std::cout << (ok ? "verification: OK\n" : "verification: FAILED\n");
    return ok ? 0 : 1;
  }
  if (feas.verdict != Verdict::Feasible) {
    std::cout << "nothing to verify for an inconclusive certificate\n";
    return 3;
  }

  check(static_cast<int>(feas.q.size()) == feas.k + 1, "tuple length");
  const SymLaurentPoly fj = fejer_kernel(feas.n);
  double dev0 = 0.0;
  for (int j = 0; j < feas.n; ++j)
    dev0 = std::max(dev0, std::abs(feas.q[0].c[static_cast<size_t>(j)] -
                                   fj.c[static_cast<size_t>(j)]));
  check(dev0 <= 1e-12, "initial polynomial is the mean-one kernel");

  double link = 0.0;
  for (int t = 1; t <= feas.k; ++t) {
    const auto r = forward_residual(feas.q[static_cast<size_t>(t)].c,
                                    feas.q[static_cast<size_t>(t - 1)].c, t);
    for (double v : r) link = std::max(link, std::abs(v));
  }
  check(link <= 1e-9, fmt::format("linking residual {:.3e}", link));

  double worst_min = 1.0;
  for (int t = 1; t <= feas.k; ++t) {
    const CertifyResult cr =
        certify_nonnegative(feas.q[static_cast<size_t>(t)], feas.tol);
    worst_min = std::min(worst_min, cr.min_value);
    if (!cr.nonneg) ok = false;
  }
  check(worst_min > -1e-12,
        fmt::format("re-certified minimum {:.3e}", worst_min));

  double factor_resid = 0.0;
  for (const FactorRecord& f : cert.factors) {
    const SymLaurentPoly back = factor_autocorrelation(f.b, feas.n);
    for (int j = 0; j < feas.n; ++j)
      factor_resid = std::max(
          factor_resid, std::abs(back.c[static_cast<size_t>(j)] -
                                 feas.q[static_cast<size_t>(f.t)].c[static_cast<size_t>(j)]));
  }
  check(factor_resid <= 1e-8,
        fmt::format("stored factors reproduce the tuple ({:.3e})", factor_resid));

  if (feas.n <= 2048) {
    std::vector<FactorRecord> recs;
    const auto p = factor_pipeline(feas, &recs);
    Tolerances build_tol = feas.tol;
    build_tol.eq_residual = std::max(build_tol.eq_residual, 1e-6);
    const AlgorithmSpec alg = build_algorithm(p, feas.n, build_tol);
    const SimulationReport sim = kernels::simulate_all(alg, kernels::Exec::Parallel);
    check(sim.min_success >= 1.0 - 1e-6,
          fmt::format("simulated success {:.9f}", sim.min_success));
    check(sim.max_norm_drift <= 1e-9,
          fmt::format("norm drift {:.3e}", sim.max_norm_drift));
  }
  std::cout << (ok ? "verification: OK\n" : "verification: FAILED\n");
  return ok ? 0 : 1;
}

int cmd_plot(const std::string& cert_path, const std::string& out,
             const std::string& csv) {
  const CertificateFile cert = load_certificate(cert_path);
  const auto& q = cert.feas.q;
  require(!q.empty(), "certificate has no polynomial tuple to plot");

  if (!csv.empty()) {
    std::ofstream c(csv);
    require(c.good(), "cannot open CSV output");
    c << "t,j,c\n";
    for (size_t t = 0; t < q.size(); ++t)
      for (int j = 0; j < q[t].n(); ++j)
        c << t << "," << j << "," << fmt::format("{:.17g}", q[t].c[static_cast<size_t>(j)]) << "\n";
  }

  const int W = 900, H = 520, ml = 60, mr = 20, mt = 30, mb = 40;
  const int samples = 800;
  double lo = 0.0, hi = 1.0;
  std::vector<std::vector<double>> ys(q.size());
  for (size_t t = 0; t < q.size(); ++t) {
    ys[t].resize(samples + 1);
    for (int i = 0; i <= samples; ++i) {
      const double th = M_PI * i / samples;
      const double v = q[t].eval(th);
      ys[t][static_cast<size_t>(i)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double span = (hi - lo) > 1e-12 ? hi - lo : 1.0;
  auto X = [&](double th) { return ml + th / M_PI * (W - ml - mr); };
  auto Y = [&](double v) { return mt + (hi - v) / span * (H - mt - mb); };

  std::ofstream s(out);
  require(s.good(), "cannot open SVG output");
  s << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      W, H, W, H);
  s << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  s << fmt::format(
      "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">"
      "progression polynomials, n={}, k={}</text>\n",
      ml, cert.feas.n, cert.feas.k);
  // Axes and the zero line.
  s << fmt::format(
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
      ml, H - mb, W - mr, H - mb);
  s << fmt::format(
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", ml,
      mt, ml, H - mb);
  if (lo < 0.0 && hi > 0.0)
    s << fmt::format(
        "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" "
        "stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n",
        ml, Y(0.0), W - mr, Y(0.0));
  const char* colors[] = {"#888888", "#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};
  for (size_t t = 0; t < q.size(); ++t) {
    s << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"",
                     colors[t % 8]);
    for (int i = 0; i <= samples; ++i)
      s << fmt::format("{:.2f},{:.2f} ", X(M_PI * i / samples),
                       Y(ys[t][static_cast<size_t>(i)]));
    s << "\"/>\n";
    s << fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
        "fill=\"{}\">q_{}</text>\n",
        W - mr - 40, mt + 16 * (static_cast<int>(t) + 1), colors[t % 8], t);
  }
  s << fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">"
      "theta: 0 .. pi</text>\n",
      (W - ml) / 2, H - 12);
  s << "</svg>\n";
  std::cout << "plot written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "exact translation-invariant ordered-search algorithms: synthesis, "
      "certification, execution, export"};
  app.require_subcommand(1);

  int n = 0, k = 0, lo = 2, hi = 16;
  double epsilon = 1e-9;
  std::string out, csv, cert_path;
  CommonArgs common;

  auto* feasible = app.add_subcommand(
      "feasible", "decide feasibility at (n, k) and synthesize on success");
  feasible->add_option("--n", n, "instance size")->required();
  feasible->add_option("--k", k, "number of queries")->required();
  feasible->add_option("--epsilon", epsilon, "success-floor slack for checks");
  feasible->add_option("--out", out, "write a certificate JSON here");
  add_common(feasible, common);

  auto* maxn = app.add_subcommand(
      "maxn", "largest feasible n for k queries, by bracketed bisection");
  maxn->add_option("--k", k, "number of queries")->required();
  maxn->add_option("--lo", lo, "initial lower bracket");
  maxn->add_option("--hi", hi, "initial upper bracket");
  maxn->add_option("--epsilon", epsilon, "success-floor slack for checks");
  maxn->add_option("--out", out, "write boundary certificates here");
  add_common(maxn, common);

  auto* verify = app.add_subcommand("verify", "re-check a stored certificate");
  verify->add_option("cert", cert_path, "certificate JSON")->required();
  verify->add_option("--epsilon", epsilon, "success-floor slack for checks");

  auto* plot = app.add_subcommand("plot", "render a certificate's tuple as SVG");
  plot->add_option("cert", cert_path, "certificate JSON")->required();
  plot->add_option("--out", out, "SVG output path")->required();
  plot->add_option("--csv", csv, "also dump coefficients as CSV");

  auto* rate = app.add_subcommand("rate", "query rate k / log2(n)");
  rate->add_option("--k", k, "number of queries")->required();
  rate->add_option("--n", n, "instance size")->required();

  auto* sdp = app.add_subcommand("export-sdp",
                                 "write the (n, k) feasibility program in "
                                 "SDPA sparse format");
  sdp->add_option("--n", n, "instance size")->required();
  sdp->add_option("--k", k, "number of queries")->required();
  sdp->add_option("--epsilon", epsilon, "success-floor slack");
  sdp->add_option("--out", out, "output .dat-s path")->required();

  auto* lp = app.add_subcommand("export-lp",
                                "write the grid relaxation in CPLEX LP text "
                                "format (explicit variables)");
  lp->add_option("--n", n, "instance size")->required();
  lp->add_option("--k", k, "number of queries")->required();
  lp->add_option("--out", out, "output .lp path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (feasible->parsed()) return cmd_feasible(n, k, common, out, epsilon);
    if (maxn->parsed()) return cmd_maxn(k, lo, hi, common, out, epsilon);
    if (verify->parsed()) return cmd_verify(cert_path, epsilon);
    if (plot->parsed()) return cmd_plot(cert_path, out, csv);
    if (rate->parsed()) {
      require(n >= 2 && k >= 1, "rate needs n >= 2 and k >= 1");
      std::cout << fmt::format("rate k/log2(n) = {:.6f}\n",
                               k / std::log2(static_cast<double>(n)));
      return 0;
    }
    if (sdp->parsed()) {
      export_sdp(n, k, epsilon, out);
      std::cout << "SDP written to " << out << "\n";
      return 0;
    }
    if (lp->parsed()) {
      const ConstraintSystem sys = build_system(n, k, /*eliminate=*/false);
      const Grid g = Grid::initial(n);
      const LpInstance inst = build_lp(sys, g, {});
      write_lp_text(inst, out);
      std::cout << "LP written to " << out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
