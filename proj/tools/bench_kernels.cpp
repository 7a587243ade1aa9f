// Benchmarks for the serial reference kernels versus their OpenMP forms.
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "osearch/kernels.hpp"

using namespace osearch;
using kernels::Exec;

namespace {

SymLaurentPoly make_poly(int n) {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> g(0.0, 0.2);
  std::vector<double> c(static_cast<size_t>(n));
  c[0] = 1.0;
  for (size_t j = 1; j < c.size(); ++j) c[j] = g(gen);
  return SymLaurentPoly{c};
}

AlgorithmSpec make_algorithm(int n, int k) {
  std::mt19937_64 gen(999);
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  AlgorithmSpec alg;
  alg.n = n;
  alg.k = k;
  for (int t = 0; t < k; ++t) {
    std::vector<cd> d(static_cast<size_t>(2 * n));
    for (cd& v : d) v = std::polar(1.0, u(gen));
    alg.d.push_back(std::move(d));
  }
  return alg;
}

void bench_eval_many(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const SymLaurentPoly p = make_poly(n);
  std::vector<double> theta(20000), out(theta.size());
  for (size_t i = 0; i < theta.size(); ++i)
    theta[i] = M_PI * static_cast<double>(i) / (theta.size() - 1);
  for (auto _ : state) {
    kernels::eval_many(p, theta, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(theta.size()));
}

void bench_min_grid(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const SymLaurentPoly p = make_poly(n);
  for (auto _ : state) {
    const double v = kernels::min_on_dense_grid(p, 50001, exec);
    benchmark::DoNotOptimize(v);
  }
}

void bench_simulate(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const AlgorithmSpec alg = make_algorithm(n, 4);
  for (auto _ : state) {
    const SimulationReport r = kernels::simulate_all(alg, exec);
    benchmark::DoNotOptimize(r.min_success);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bench_eval_many, serial, Exec::Serial)->Arg(56)->Arg(605);
BENCHMARK_CAPTURE(bench_eval_many, parallel, Exec::Parallel)->Arg(56)->Arg(605);
BENCHMARK_CAPTURE(bench_min_grid, serial, Exec::Serial)->Arg(56)->Arg(605);
BENCHMARK_CAPTURE(bench_min_grid, parallel, Exec::Parallel)->Arg(56)->Arg(605);
BENCHMARK_CAPTURE(bench_simulate, serial, Exec::Serial)->Arg(56)->Arg(256);
BENCHMARK_CAPTURE(bench_simulate, parallel, Exec::Parallel)->Arg(56)->Arg(256);

BENCHMARK_MAIN();
