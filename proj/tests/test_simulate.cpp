#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "osearch/kernels.hpp"
#include "osearch/refine.hpp"
#include "osearch/simulate.hpp"
#include "osearch/spectral.hpp"

using namespace osearch;

namespace {

std::vector<cd> flat_start(int n) {
  return std::vector<cd>(static_cast<size_t>(n),
                         cd(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
}

// Factor pipeline for a feasible instance: p_0 flat, interior factors from
// the certified tuple, p_k = (1).
std::vector<std::vector<cd>> factor_pipeline(const FeasibilityCertificate& cert) {
  std::vector<std::vector<cd>> p;
  p.push_back(flat_start(cert.n));
  for (int t = 1; t < cert.k; ++t)
    p.push_back(spectral_factor(cert.q[static_cast<size_t>(t)], Tolerances{}));
  p.push_back({cd(1.0, 0.0)});
  return p;
}

std::vector<cd> random_phases(int N) {
  std::vector<cd> d(static_cast<size_t>(N));
  for (cd& v : d)
    v = std::polar(1.0, 2.0 * M_PI * static_cast<double>(oracle::rng()() % 1000000) / 1e6);
  return d;
}

}  // namespace

TEST_CASE("the one-query instance compiles to the known phases and succeeds") {
  const std::vector<std::vector<cd>> p{flat_start(2), {cd(1.0, 0.0)}};
  BuildReport rep;
  const AlgorithmSpec alg = build_algorithm(p, 2, Tolerances{}, &rep);
  REQUIRE(alg.k == 1);
  REQUIRE(alg.d.size() == 1);
  REQUIRE(alg.d[0].size() == 4);
  CHECK(rep.max_modulus_mismatch <= 1e-12);
  CHECK(rep.zero_denominators == 0);

  CHECK(std::abs(alg.d[0][0] - cd(1.0, 0.0)) <= 1e-14);  // even momenta idle
  CHECK(std::abs(alg.d[0][2] - cd(1.0, 0.0)) <= 1e-14);
  CHECK(std::abs(alg.d[0][1] - std::polar(1.0, -M_PI / 4)) <= 1e-12);
  CHECK(std::abs(alg.d[0][3] - std::polar(1.0, +M_PI / 4)) <= 1e-12);

  for (int shift = 0; shift < 4; ++shift) {
    const RunResult r = run_algorithm(alg, shift);
    CHECK(r.success >= 1.0 - 1e-12);
    CHECK(r.norm_drift <= 1e-12);
  }
}

TEST_CASE("mismatched moduli are rejected with a report") {
  const std::vector<std::vector<cd>> p{flat_start(2), {cd(0.9, 0.0)}};
  BuildReport rep;
  CHECK_THROWS_AS(build_algorithm(p, 2, Tolerances{}, &rep), Error);
  CHECK(rep.max_modulus_mismatch > 0.1);
}

TEST_CASE("compiled phases: unit modulus everywhere, identity off parity") {
  auto be = make_lp_backend("embedded");
  RefineOptions opt;
  opt.backend = be.get();
  const auto cert = refine_loop(6, 2, opt);
  REQUIRE(cert.verdict == Verdict::Feasible);
  const auto p = factor_pipeline(cert);
  const AlgorithmSpec alg = build_algorithm(p, 6, Tolerances{});
  for (int t = 1; t <= alg.k; ++t)
    for (int m = 0; m < 12; ++m) {
      const cd v = alg.d[static_cast<size_t>(t - 1)][static_cast<size_t>(m)];
      CHECK(std::abs(std::abs(v) - 1.0) <= 1e-14);
      if (m % 2 != t % 2) CHECK(v == cd(1.0, 0.0));
    }
}

TEST_CASE("fast transform pipeline matches the explicit matrix simulation") {
  // 600 random step configurations, compared state-by-state at 1e-10.
  int cases = 0;
  while (cases < 600) {
    const int n = 1 + static_cast<int>(oracle::rng()() % 20);
    const int k = 1 + static_cast<int>(oracle::rng()() % 3);
    const int shift = static_cast<int>(oracle::rng()() % static_cast<uint64_t>(2 * n));
    AlgorithmSpec alg;
    alg.n = n;
    alg.k = k;
    for (int t = 0; t < k; ++t) alg.d.push_back(random_phases(2 * n));

    const RunResult fast = run_algorithm(alg, shift);
    Eigen::VectorXcd ref_state;
    double ref_drift = 0.0;
    const double ref_success =
        oracle::run_matrix_oracle(alg.d, n, shift, &ref_drift, &ref_state);
    REQUIRE(fast.state.size() == ref_state.size());
    for (int i = 0; i < fast.state.size(); ++i)
      CHECK(std::abs(fast.state(i) - ref_state(i)) <= 1e-10);
    CHECK(std::abs(fast.success - ref_success) <= 1e-10);
    CHECK(std::abs(fast.norm_drift - ref_drift) <= 1e-10);
    ++cases;
  }
}

TEST_CASE("compiled algorithms preserve the norm and ignore rotation") {
  auto be = make_lp_backend("embedded");
  RefineOptions opt;
  opt.backend = be.get();
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{{2, 1}, {6, 2}, {8, 3}}) {
    const auto cert = refine_loop(n, k, opt);
    REQUIRE(cert.verdict == Verdict::Feasible);
    const AlgorithmSpec alg = build_algorithm(factor_pipeline(cert), n, Tolerances{});
    double lo = 2.0, hi = -1.0, drift = 0.0;
    for (int shift = 0; shift < 2 * n; ++shift) {
      const RunResult r = run_algorithm(alg, shift);
      lo = std::min(lo, r.success);
      hi = std::max(hi, r.success);
      drift = std::max(drift, r.norm_drift);
    }
    CHECK(drift <= 1e-12);          // unitarity
    CHECK(hi - lo <= 1e-12);        // translation invariance
    CHECK(lo >= 1.0 - 1e-9);        // exactness of the synthesized algorithm
  }
}

TEST_CASE("whole-instance simulation summarizes per-shift results") {
  auto be = make_lp_backend("embedded");
  RefineOptions opt;
  opt.backend = be.get();
  const auto cert = refine_loop(6, 2, opt);
  REQUIRE(cert.verdict == Verdict::Feasible);
  const AlgorithmSpec alg = build_algorithm(factor_pipeline(cert), 6, Tolerances{});
  const SimulationReport rep = kernels::simulate_all(alg, kernels::Exec::Serial);
  REQUIRE(static_cast<int>(rep.success.size()) == 12);
  double mn = 2.0;
  for (int shift = 0; shift < 12; ++shift) {
    const RunResult r = run_algorithm(alg, shift);
    CHECK(std::abs(rep.success[static_cast<size_t>(shift)] - r.success) <= 1e-15);
    mn = std::min(mn, r.success);
  }
  CHECK(std::abs(rep.min_success - mn) <= 1e-15);
}
