// LP backend that shells out to a SciPy (HiGHS) solver script.  Used to
// cross-check the embedded dual simplex on small instances; it rebuilds the
// row data densely and performs no warm starting.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include "osearch/lp.hpp"

#ifndef OSEARCH_LP_SOLVE_SCRIPT
#define OSEARCH_LP_SOLVE_SCRIPT "tools/lp_solve.py"
#endif

namespace osearch {
namespace detail {

namespace {

using nlohmann::json;

std::string solver_script() {
  if (const char* env = std::getenv("OSEARCH_LP_SOLVE")) return env;
  return OSEARCH_LP_SOLVE_SCRIPT;
}

class TempFile {
 public:
  explicit TempFile(const char* tag) {
    const auto dir = std::filesystem::temp_directory_path();
    path_ = (dir / fmt::format("osearch_{}_{}_XXXXXX", tag, ::getpid())).string();
    const int fd = ::mkstemp(path_.data());
    require(fd >= 0, "scipy backend: cannot create temporary file");
    ::close(fd);
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ScipyBackend final : public LpBackend {
 public:
  std::string name() const override { return "scipy"; }

  LpSolution solve(const LpInstance& lp, const Tolerances& tol,
                   const std::vector<RowRef>* /*warm_basis*/) override {
    const int F = lp.num_x();
    const int R = static_cast<int>(lp.rows.size());
    require(static_cast<long long>(F) * R <= 40'000'000,
            "scipy backend: instance too large for dense export");

    json rows = json::array();
    Eigen::VectorXd a(F);
    for (const RowRef& r : lp.rows) {
      double gamma = 0.0, d = 0.0;
      lp.row_data(r, a, gamma, d);
      json ja = json::array();
      for (int v = 0; v < F; ++v) ja.push_back(a(v));
      rows.push_back(json{{"a", std::move(ja)}, {"gamma", gamma}, {"d", d}});
    }
    const json in{{"num_x", F}, {"rows", std::move(rows)}};

    TempFile fin("lp_in"), fout("lp_out");
    {
      std::ofstream out(fin.path());
      require(out.good(), "scipy backend: cannot write problem file");
      out << in.dump();
      out.close();
      require(out.good(), "scipy backend: problem file write failed");
    }

    const std::string cmd = fmt::format("python3 '{}' '{}' '{}'",
                                        solver_script(), fin.path(), fout.path());
    const int rc = std::system(cmd.c_str());
    require(rc == 0, fmt::format("scipy backend: solver exited with {}", rc));

    json out;
    {
      std::ifstream res(fout.path());
      require(res.good(), "scipy backend: missing result file");
      try {
        res >> out;
      } catch (const json::exception& e) {
        throw Error(fmt::format("scipy backend: bad result JSON: {}", e.what()));
      }
    }

    LpSolution sol;
    const std::string status = out.at("status").get<std::string>();
    if (status == "optimal")
      sol.status = LpStatus::Optimal;
    else if (status == "iteration_limit")
      sol.status = LpStatus::IterationLimit;
    else
      sol.status = LpStatus::NumericalTrouble;
    sol.beta = out.at("beta").get<double>();
    const auto xs = out.at("x").get<std::vector<double>>();
    require(static_cast<int>(xs.size()) == F,
            "scipy backend: solution length mismatch");
    sol.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), F);

    // Residual check done locally so a miscommunicating script cannot
    // report clean numbers.
    double worst = 0.0;
    for (const RowRef& r : lp.rows) {
      double gamma = 0.0, d = 0.0;
      lp.row_data(r, a, gamma, d);
      const double slack = a.dot(sol.x) - gamma * sol.beta + d;
      const double scale = std::max(1.0, std::hypot(a.norm(), gamma));
      worst = std::max(worst, -slack / scale);
    }
    sol.primal_residual = worst;
    if (sol.status == LpStatus::Optimal && worst > 100.0 * tol.lp_feas)
      sol.status = LpStatus::NumericalTrouble;
    return sol;
  }
};

}  // namespace

std::unique_ptr<LpBackend> make_scipy_backend() {
  return std::make_unique<ScipyBackend>();
}

}  // namespace detail
}  // namespace osearch
