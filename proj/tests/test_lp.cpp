#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "osearch/lp.hpp"

using namespace osearch;

namespace {

Grid grid_of(int n, std::vector<double> theta) {
  Grid g;
  g.n = n;
  g.theta = std::move(theta);
  g.uniform_m.assign(g.theta.size(), -1);
  return g;
}

double solve_beta(const ConstraintSystem& sys, const Grid& g, LpBackend& be,
                  const LpOptions& opt = {}) {
  const LpInstance lp = build_lp(sys, g, opt);
  const LpSolution sol = be.solve(lp, Tolerances{}, nullptr);
  REQUIRE(sol.status == LpStatus::Optimal);
  return sol.beta;
}

}  // namespace

TEST_CASE("single-query caps: the grid decides the optimum") {
  const ConstraintSystem sys = build_system(2, 1);
  REQUIRE_FALSE(sys.contradiction);
  REQUIRE(sys.num_free == 0);
  auto be = make_lp_backend("embedded");

  // beta is capped by q_0 at each grid angle; q_0(pi) = 0, q_0(pi/2) = 1.
  CHECK(std::abs(solve_beta(sys, grid_of(2, {M_PI}), *be) - 0.0) <= 1e-12);
  CHECK(std::abs(solve_beta(sys, grid_of(2, {M_PI / 2}), *be) - 1.0) <= 1e-12);
}

TEST_CASE("no free variables: optimum is the smallest grid value") {
  const int n = 9;
  const ConstraintSystem sys = build_system(n, 2);
  REQUIRE(sys.num_free == 0);
  const auto q = sys.reconstruct_all(Eigen::VectorXd::Zero(0));
  Grid g = Grid::initial(n);

  double expect = 1.0;  // the beta <= 1 cap
  for (double th : g.theta) {
    expect = std::min(expect, oracle::eval_cos_sum(q[1].c, th));
    expect = std::min(expect, oracle::fejer_closed_form(n, th));
  }
  auto be = make_lp_backend("embedded");
  CHECK(std::abs(solve_beta(sys, g, *be) - expect) <= 1e-10);
}

TEST_CASE("interior rows read back the reconstructed polynomials") {
  const ConstraintSystem sys = build_system(8, 4);
  Grid g = Grid::initial(8);
  const LpInstance lp = build_lp(sys, g, {});
  Eigen::VectorXd x(sys.num_free);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < sys.num_free; ++i) x(i) = gauss(oracle::rng());
  const auto q = sys.reconstruct_all(x);

  Eigen::VectorXd a(lp.num_x());
  int interior_rows = 0;
  for (const RowRef& r : lp.rows) {
    if (r.kind != RowKind::Interior) continue;
    ++interior_rows;
    double gamma = 0.0, d = 0.0;
    lp.row_data(r, a, gamma, d);
    CHECK(gamma == 1.0);
    const double beta = 0.25;
    const double slack = a.dot(x) - gamma * beta + d;
    const double direct = oracle::eval_cos_sum(q[static_cast<size_t>(r.t)].c, r.theta) - beta;
    CHECK(std::abs(slack - direct) <= 1e-11);
  }
  CHECK(interior_rows == (sys.k - 1) * g.size());
}

TEST_CASE("embedded simplex agrees with the external reference solver") {
  auto embedded = make_lp_backend("embedded");
  auto scipy = make_lp_backend("scipy");
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{
           {6, 3}, {9, 3}, {8, 4}, {10, 4}, {7, 5}}) {
    const ConstraintSystem sys = build_system(n, k);
    Grid g = Grid::initial(n);
    // A few off-grid angles exercise the non-uniform evaluation path.
    g.add_dedup(std::vector<double>{0.37, 1.234, 2.9}, 1e-9);
    for (bool fixed : {true, false}) {
      LpOptions opt;
      opt.fixed_rows = fixed;
      const LpInstance lp = build_lp(sys, g, opt);
      const LpSolution se = embedded->solve(lp, Tolerances{}, nullptr);
      const LpSolution sp = scipy->solve(lp, Tolerances{}, nullptr);
      REQUIRE(se.status == LpStatus::Optimal);
      REQUIRE(sp.status == LpStatus::Optimal);
      CHECK(std::abs(se.beta - sp.beta) <= 1e-7 * std::max(1.0, std::abs(se.beta)));
      CHECK(se.primal_residual <= 1e-8);
      CHECK(se.gap <= 1e-7);
    }
  }
}

TEST_CASE("interior-point backend agrees with the reference solver") {
  auto ipm = make_lp_backend("embedded-ipm");
  auto scipy = make_lp_backend("scipy");
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{
           {6, 3}, {9, 3}, {8, 4}, {10, 4}, {7, 5}}) {
    const ConstraintSystem sys = build_system(n, k);
    Grid g = Grid::initial(n);
    // Off-family angles exercise the cosine-recurrence accumulation in the
    // normal-equation assembly and the adjoint transform.
    g.add_dedup(std::vector<double>{0.37, 1.234, 2.9}, 1e-9);
    const LpInstance lp = build_lp(sys, g, {});
    const LpSolution si = ipm->solve(lp, Tolerances{}, nullptr);
    const LpSolution sp = scipy->solve(lp, Tolerances{}, nullptr);
    REQUIRE(si.status == LpStatus::Optimal);
    REQUIRE(sp.status == LpStatus::Optimal);
    CHECK(std::abs(si.beta - sp.beta) <= 1e-7 * std::max(1.0, std::abs(si.beta)));
    CHECK(si.primal_residual <= 1e-8);
    CHECK(si.basis.empty());  // interior points carry no warm-start basis
  }
}

TEST_CASE("interior-point and simplex agree on a larger instance") {
  auto ipm = make_lp_backend("embedded-ipm");
  auto simplex = make_lp_backend("embedded-simplex");
  const ConstraintSystem sys = build_system(60, 4);
  Grid g = Grid::initial(60);
  g.add_dedup(std::vector<double>{0.071, 0.53, 1.618, 2.4142, 3.05}, 1e-9);
  const LpInstance lp = build_lp(sys, g, {});
  const LpSolution si = ipm->solve(lp, Tolerances{}, nullptr);
  const LpSolution ss = simplex->solve(lp, Tolerances{}, nullptr);
  REQUIRE(si.status == LpStatus::Optimal);
  REQUIRE(ss.status == LpStatus::Optimal);
  CHECK(std::abs(si.beta - ss.beta) <= 1e-7 * std::max(1.0, std::abs(ss.beta)));
}

TEST_CASE("optimum never improves when the grid grows") {
  auto be = make_lp_backend("embedded");
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 6 + static_cast<int>(oracle::rng()() % 6);
    const int k = 3 + static_cast<int>(oracle::rng()() % 2);
    const ConstraintSystem sys = build_system(n, k);
    Grid g = Grid::initial(n);
    double prev = solve_beta(sys, g, *be);
    for (int round = 0; round < 4; ++round) {
      std::vector<double> extra;
      for (int i = 0; i < 3; ++i)
        extra.push_back(M_PI * static_cast<double>(oracle::rng()() % 100000) / 99999.0);
      g.add_dedup(extra, 1e-9);
      const double next = solve_beta(sys, g, *be);
      CHECK(next <= prev + 1e-9);
      prev = next;
    }
  }
}

TEST_CASE("warm start reproduces the cold optimum after grid growth") {
  auto be = make_lp_backend("embedded");
  const ConstraintSystem sys = build_system(10, 4);
  Grid g = Grid::initial(10);
  const LpInstance lp0 = build_lp(sys, g, {});
  const LpSolution cold0 = be->solve(lp0, Tolerances{}, nullptr);
  REQUIRE(cold0.status == LpStatus::Optimal);
  REQUIRE(static_cast<int>(cold0.basis.size()) == lp0.dim());

  g.add_dedup(std::vector<double>{0.5, 1.1, 1.9, 2.6, 3.0}, 1e-9);
  const LpInstance lp1 = build_lp(sys, g, {});
  const LpSolution warm = be->solve(lp1, Tolerances{}, &cold0.basis);
  const LpSolution cold1 = be->solve(lp1, Tolerances{}, nullptr);
  REQUIRE(warm.status == LpStatus::Optimal);
  REQUIRE(cold1.status == LpStatus::Optimal);
  CHECK(std::abs(warm.beta - cold1.beta) <= 1e-9);
}

TEST_CASE("box rows keep a rank-deficient instance bounded") {
  const ConstraintSystem sys = build_system(6, 4);
  REQUIRE(sys.num_free == 5);
  Grid g = grid_of(6, {2.0});  // far fewer rows than variables
  auto be = make_lp_backend("embedded");
  const LpInstance lp = build_lp(sys, g, {});
  const LpSolution sol = be->solve(lp, Tolerances{}, nullptr);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x.cwiseAbs().maxCoeff() <= 8.0 + 1e-9);
  CHECK(sol.beta <= 1.0 + 1e-9);
}

TEST_CASE("text export emits the explicit formulation") {
  const ConstraintSystem sys = build_system(5, 3, /*eliminate=*/false);
  Grid g = Grid::initial(5);
  const LpInstance lp = build_lp(sys, g, {});
  const std::string path =
      (std::filesystem::temp_directory_path() / "osearch_test.lp").string();
  write_lp_text(lp, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("norm_t1") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("grid utilities: initial layout and deduplicated insertion") {
  Grid g = Grid::initial(4);
  REQUIRE(g.size() == 9);  // m = 0..2n
  for (int m = 0; m <= 8; ++m) {
    CHECK(g.theta[static_cast<size_t>(m)] == doctest::Approx(M_PI * m / 8.0).epsilon(1e-16));
    CHECK(g.uniform_m[static_cast<size_t>(m)] == m);
  }
  const int added = g.add_dedup(std::vector<double>{g.theta[3], g.theta[3] + 5e-10, 0.6, 0.6 + 1e-12, 3.1}, 1e-9);
  CHECK(added == 2);  // 0.6 and 3.1; the rest collide
  CHECK(g.size() == 11);
  CHECK(std::is_sorted(g.theta.begin(), g.theta.end()));
  for (int i = 0; i < g.size(); ++i)
    if (g.uniform_m[static_cast<size_t>(i)] >= 0)
      CHECK(g.theta[static_cast<size_t>(i)] ==
            doctest::Approx(M_PI * g.uniform_m[static_cast<size_t>(i)] / 8.0).epsilon(1e-16));
}
