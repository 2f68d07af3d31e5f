#include <benchmark/benchmark.h>

#include <random>

#include "pidopt/extractable.hpp"
#include "pidopt/pid.hpp"

using namespace pidopt;

namespace {

JointDistribution random_instance(std::uint64_t seed, int ns, int ny, int nz) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::size_t n = std::size_t(ns) * ny * nz;
  std::vector<double> pmf(n);
  double sum = 0.0;
  for (double& v : pmf) {
    v = expo(rng);
    sum += v;
  }
  for (double& v : pmf) v = 0.98 * v / sum + 0.02 / double(n);
  Labels labels;
  for (int i = 0; i < ns; ++i) labels.s.push_back(std::to_string(i));
  for (int i = 0; i < ny; ++i) labels.y.push_back(std::to_string(i));
  for (int i = 0; i < nz; ++i) labels.z.push_back(std::to_string(i));
  return JointDistribution::from_pmf(std::move(labels), std::move(pmf));
}

void BM_solve_xor(benchmark::State& state) {
  auto p = JointDistribution::xor_gate();
  for (auto _ : state) benchmark::DoNotOptimize(solve(p).M);
}
BENCHMARK(BM_solve_xor);

void BM_solve_and(benchmark::State& state) {
  auto p = JointDistribution::and_gate();
  for (auto _ : state) benchmark::DoNotOptimize(solve(p).M);
}
BENCHMARK(BM_solve_and);

void BM_solve_random(benchmark::State& state) {
  int n = int(state.range(0));
  auto p = random_instance(7, n, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(solve(p).M);
}
BENCHMARK(BM_solve_random)->Arg(2)->Arg(3)->Arg(4)->Arg(6);

void BM_pid_full(benchmark::State& state) {
  auto p = random_instance(11, 3, 3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pid(p).SI);
}
BENCHMARK(BM_pid_full);

void BM_gradient_bundle(benchmark::State& state) {
  auto p = random_instance(13, 2, 2, 2);
  auto rep = solve(p);
  for (auto _ : state) benchmark::DoNotOptimize(pid_gradients(p, rep).grad_SI);
}
BENCHMARK(BM_gradient_bundle);

void BM_si_club_rdn(benchmark::State& state) {
  auto p = JointDistribution::rdn_gate();
  ClubOptions opts;
  opts.restarts = 3;
  for (auto _ : state) benchmark::DoNotOptimize(si_club(p, 2, opts).value);
}
BENCHMARK(BM_si_club_rdn);

void BM_bruteforce_222(benchmark::State& state) {
  auto p = random_instance(17, 2, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(bruteforce_M(p));
}
BENCHMARK(BM_bruteforce_222);

}  // namespace

BENCHMARK_MAIN();
