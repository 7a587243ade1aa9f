#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "osearch/cert_io.hpp"

using namespace osearch;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

CertificateFile sample_certificate(bool with_sim) {
  CertificateFile c;
  c.feas.n = 8;
  c.feas.k = 3;
  c.feas.verdict = Verdict::Feasible;
  c.feas.detail = "all interior polynomials certified";
  c.feas.beta = 0.12345678901234567;
  c.feas.grid = {0.0, 0.1 + 0.2, M_PI / 3.0, M_PI};
  c.feas.q = {fejer_kernel(8), SymLaurentPoly{{1.0, -1e-17, 5e300, -0.25}}};
  c.feas.margins = {1e-3, 0.999999999999};
  c.feas.log = {{1, 0.5, 17, 4}, {2, 0.25, 21, 0}};
  c.feas.tol.lp_feas = 1e-11;
  c.feas.lp_pivots_total = 123456;
  c.feas.seconds = 9.75;
  c.factors = {{1, {cd(0.5, -0.25), cd(1e-300, 3.125)}, 1e-12}};
  if (with_sim) {
    SimulationReport s;
    s.success = {1.0, 1.0 - 1e-16};
    s.min_success = 1.0 - 1e-16;
    s.max_norm_drift = 2.5e-16;
    c.sim = s;
  }
  c.gram_equality_residual = 3e-10;
  c.gram_min_eigenvalue = -1e-12;
  c.final_entry = 1.0;
  c.epsilon = 1e-9;
  return c;
}

}  // namespace

TEST_CASE("certificates round trip bit-for-bit") {
  for (bool with_sim : {true, false}) {
    const CertificateFile c = sample_certificate(with_sim);
    const std::string path = temp_path("osearch_test_cert.json");
    save_certificate(c, path);
    const CertificateFile b = load_certificate(path);

    CHECK(b.feas.n == c.feas.n);
    CHECK(b.feas.k == c.feas.k);
    CHECK(b.feas.verdict == c.feas.verdict);
    CHECK(b.feas.detail == c.feas.detail);
    CHECK(b.feas.beta == c.feas.beta);
    CHECK(b.feas.grid == c.feas.grid);
    REQUIRE(b.feas.q.size() == c.feas.q.size());
    for (size_t i = 0; i < c.feas.q.size(); ++i) CHECK(b.feas.q[i] == c.feas.q[i]);
    CHECK(b.feas.margins == c.feas.margins);
    REQUIRE(b.feas.log.size() == c.feas.log.size());
    for (size_t i = 0; i < c.feas.log.size(); ++i) {
      CHECK(b.feas.log[i].iter == c.feas.log[i].iter);
      CHECK(b.feas.log[i].beta == c.feas.log[i].beta);
      CHECK(b.feas.log[i].grid_size == c.feas.log[i].grid_size);
      CHECK(b.feas.log[i].new_points == c.feas.log[i].new_points);
    }
    CHECK(b.feas.tol.lp_feas == c.feas.tol.lp_feas);
    CHECK(b.feas.lp_pivots_total == c.feas.lp_pivots_total);
    CHECK(b.feas.seconds == c.feas.seconds);
    REQUIRE(b.factors.size() == 1);
    CHECK(b.factors[0].t == 1);
    CHECK(b.factors[0].b == c.factors[0].b);
    CHECK(b.factors[0].residual == c.factors[0].residual);
    CHECK(b.sim.has_value() == with_sim);
    if (with_sim) {
      CHECK(b.sim->success == c.sim->success);
      CHECK(b.sim->min_success == c.sim->min_success);
      CHECK(b.sim->max_norm_drift == c.sim->max_norm_drift);
    }
    CHECK(b.gram_equality_residual == c.gram_equality_residual);
    CHECK(b.gram_min_eigenvalue == c.gram_min_eigenvalue);
    CHECK(b.final_entry == c.final_entry);
    CHECK(b.epsilon == c.epsilon);
    std::filesystem::remove(path);
  }
}

TEST_CASE("checkpoints round trip bit-for-bit") {
  Checkpoint c;
  c.n = 7265;
  c.k = 5;
  c.grid = Grid::initial(16);
  c.grid.add_dedup(std::vector<double>{0.123456789012345678, 2.9999999999999996}, 1e-9);
  c.basis = {
      RowRef{RowKind::Interior, 2, 1.7320508075688772, -1},
      RowRef{RowKind::FixedCap, 0, M_PI / 7.0, -1},
      RowRef{RowKind::BetaCap, -1, 0.0, -1},
      RowRef{RowKind::BoxLo, -1, 0.0, 3},
      RowRef{RowKind::BoxHi, -1, 0.0, 0},
  };
  c.log = {{1, -0.007, 33, 12}};
  c.seconds_so_far = 123.625;
  c.tol.lp_gap = 1e-11;

  const std::string path = temp_path("osearch_test_ckpt.json");
  save_checkpoint(c, path);
  const Checkpoint b = load_checkpoint(path);
  CHECK(b.n == c.n);
  CHECK(b.k == c.k);
  CHECK(b.grid.n == c.grid.n);
  CHECK(b.grid.theta == c.grid.theta);
  CHECK(b.grid.uniform_m == c.grid.uniform_m);
  REQUIRE(b.basis.size() == c.basis.size());
  for (size_t i = 0; i < c.basis.size(); ++i) CHECK(b.basis[i] == c.basis[i]);
  REQUIRE(b.log.size() == 1);
  CHECK(b.log[0].beta == c.log[0].beta);
  CHECK(b.seconds_so_far == c.seconds_so_far);
  CHECK(b.tol.lp_gap == c.tol.lp_gap);
  std::filesystem::remove(path);
}

TEST_CASE("malformed inputs are refused with diagnostics") {
  const std::string path = temp_path("osearch_test_bad.json");
  {
    std::ofstream out(path);
    out << "{not json";
  }
  CHECK_THROWS_AS(load_certificate(path), Error);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  {
    std::ofstream out(path);
    out << R"({"format": "osearch-checkpoint", "version": 99})";
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  {
    std::ofstream out(path);
    out << R"({"format": "elsewhere", "version": 1})";
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  CHECK_THROWS_AS(load_certificate("/nonexistent/dir/file.json"), Error);

  // Cross-loading the two formats must fail cleanly.
  Checkpoint c;
  c.n = 4;
  c.k = 2;
  c.grid = Grid::initial(4);
  save_checkpoint(c, path);
  CHECK_THROWS_AS(load_certificate(path), Error);
  std::filesystem::remove(path);
}
