#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "osearch/constraint.hpp"

using namespace osearch;

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Eigen::VectorXd random_free(const ConstraintSystem& sys, double scale = 1.0) {
  Eigen::VectorXd x(sys.num_free);
  std::normal_distribution<double> g(0.0, scale);
  for (int i = 0; i < sys.num_free; ++i) x(i) = g(oracle::rng());
  return x;
}

}  // namespace

TEST_CASE("the coefficient involution fixes 0, swaps mirror pairs, squares to I") {
  const std::vector<double> a{3.0, 1.0, 2.0, 5.0, 7.0};
  const std::vector<double> va = apply_v(a);
  CHECK(va == std::vector<double>{3.0, 7.0, 5.0, 2.0, 1.0});
  CHECK(apply_v(va) == a);
}

TEST_CASE("eliminating a middle vector satisfies both adjacent constraints") {
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + static_cast<int>(oracle::rng()() % 16);
    const auto before = oracle::random_real_vector(n);
    const auto after = oracle::random_real_vector(n);
    for (int t = 1; t <= 4; ++t) {
      const auto mid = eliminate_middle(before, after, t);
      CHECK(max_abs(forward_residual(mid, before, t)) <= 1e-12);
      CHECK(max_abs(forward_residual(after, mid, t + 1)) <= 1e-12);
    }
  }
}

TEST_CASE("eliminated parametrization: every x yields an admissible tuple") {
  for (int k = 1; k <= 6; ++k) {
    for (int n : {1, 2, 3, 4, 7, 8, 12}) {
      const ConstraintSystem sys = build_system(n, k);
      if (sys.contradiction) continue;  // k = 1, n >= 3
      for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd x = random_free(sys, 2.0);
        const auto q = sys.reconstruct_all(x);
        REQUIRE(static_cast<int>(q.size()) == k + 1);

        // Endpoints and means.
        const SymLaurentPoly fj = fejer_kernel(n);
        for (int j = 0; j < n; ++j)
          CHECK(std::abs(q[0].c[static_cast<size_t>(j)] - fj.c[static_cast<size_t>(j)]) <= 1e-15);
        CHECK(std::abs(q[static_cast<size_t>(k)].c[0] - 1.0) <= 1e-15);
        for (int j = 1; j < n; ++j)
          CHECK(std::abs(q[static_cast<size_t>(k)].c[static_cast<size_t>(j)]) <= 1e-15);
        for (int t = 0; t <= k; ++t) CHECK(std::abs(q[static_cast<size_t>(t)].c[0] - 1.0) <= 1e-12);

        // Every linking constraint, at every step.
        for (int t = 1; t <= k; ++t) {
          const auto r = forward_residual(q[static_cast<size_t>(t)].c, q[static_cast<size_t>(t - 1)].c, t);
          CHECK(max_abs(r) <= 1e-11);
        }
      }
    }
  }
}

TEST_CASE("free dimension count matches the block structure") {
  for (int n : {1, 2, 3, 4, 5, 8, 11, 12}) {
    for (int k = 1; k <= 8; ++k) {
      const ConstraintSystem sys = build_system(n, k);
      if (sys.contradiction) continue;
      int expect = 0;
      if (k % 2 == 0) {
        expect = (k / 2 - 1) * std::max(0, n - 1);
      } else if (k >= 3) {
        expect = n / 2 + ((k - 3) / 2) * std::max(0, n - 1);
      }
      CHECK(sys.num_free == expect);
    }
  }
}

TEST_CASE("a single query tolerates only the two smallest sizes") {
  CHECK_FALSE(build_system(1, 1).contradiction);
  CHECK_FALSE(build_system(2, 1).contradiction);
  for (int n : {3, 4, 5, 9}) {
    const ConstraintSystem sys = build_system(n, 1);
    CHECK(sys.contradiction);
    CHECK(sys.contradiction_residual > 1e-3);
  }
}

TEST_CASE("two queries leave no freedom and force the known middle") {
  for (int n : {2, 3, 6, 7, 10}) {
    const ConstraintSystem sys = build_system(n, 2);
    CHECK(sys.num_free == 0);
    const auto q = sys.reconstruct_all(Eigen::VectorXd::Zero(0));
    CHECK(std::abs(q[1].c[0] - 1.0) <= 1e-15);
    for (int j = 1; j < n; ++j)
      CHECK(std::abs(q[1].c[static_cast<size_t>(j)] - (0.5 - static_cast<double>(j) / n)) <= 1e-14);
  }
}

TEST_CASE("evaluation rows agree with reconstruction") {
  for (int k : {3, 4, 5}) {
    const int n = 9;
    const ConstraintSystem sys = build_system(n, k);
    Eigen::VectorXd grad(sys.num_free);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd x = random_free(sys);
      const auto q = sys.reconstruct_all(x);
      for (int t = 0; t <= k; ++t) {
        const double theta = M_PI * static_cast<double>(oracle::rng()() % 100000) / 99999.0;
        double constant = 0.0;
        sys.eval_row(t, theta, grad, constant);
        const double via_row = grad.dot(x) + constant;
        CHECK(std::abs(via_row - oracle::eval_cos_sum(q[static_cast<size_t>(t)].c, theta)) <= 1e-11);
      }
    }
  }
}

TEST_CASE("coefficient directions are the linear part of reconstruction") {
  const ConstraintSystem sys = build_system(7, 5);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd x = random_free(sys);
    const Eigen::VectorXd dx = random_free(sys);
    for (int t = 0; t <= sys.k; ++t) {
      const auto q0 = sys.reconstruct(t, x);
      const auto q1 = sys.reconstruct(t, x + dx);
      const Eigen::VectorXd dc = sys.coeff_direction(t, dx);
      REQUIRE(dc.size() == sys.n);
      for (int j = 0; j < sys.n; ++j)
        CHECK(std::abs((q1.c[static_cast<size_t>(j)] - q0.c[static_cast<size_t>(j)]) - dc(j)) <= 1e-12);
    }
  }
}

TEST_CASE("explicit form keeps the linking equations as rows") {
  for (int k : {2, 3, 4}) {
    const int n = 6;
    const ConstraintSystem ex = build_system(n, k, /*eliminate=*/false);
    CHECK_FALSE(ex.eliminated);
    CHECK(ex.num_free == (k - 1) * n);
    REQUIRE(ex.eq_rows.size() == ex.eq_rhs.size());
    REQUIRE(ex.eq_rows.size() == ex.eq_names.size());

    // Fill the explicit variables from an admissible tuple produced by the
    // eliminated form; every explicit equality row must then be satisfied.
    const ConstraintSystem el = build_system(n, k);
    const Eigen::VectorXd xe = random_free(el);
    const auto q = el.reconstruct_all(xe);
    Eigen::VectorXd x(ex.num_free);
    for (int t = 1; t < k; ++t)
      for (int j = 0; j < n; ++j)
        x((t - 1) * n + j) = q[static_cast<size_t>(t)].c[static_cast<size_t>(j)];
    for (size_t r = 0; r < ex.eq_rows.size(); ++r) {
      const double lhs = ex.eq_rows[r].dot(x);
      CHECK(std::abs(lhs - ex.eq_rhs[r]) <= 1e-11);
    }

    // And a random (inadmissible) assignment must violate at least one row.
    if (k >= 2 && n >= 3) {
      Eigen::VectorXd bad = x;
      bad(ex.num_free / 2) += 0.37;
      double worst = 0.0;
      for (size_t r = 0; r < ex.eq_rows.size(); ++r)
        worst = std::max(worst, std::abs(ex.eq_rows[r].dot(bad) - ex.eq_rhs[r]));
      CHECK(worst > 1e-6);
    }
  }
}
