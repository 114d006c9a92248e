#include <benchmark/benchmark.h>

#include "gradpush/costs.hpp"
#include "gradpush/digraph.hpp"
#include "gradpush/engine.hpp"
#include "gradpush/harness.hpp"
#include "gradpush/mixing.hpp"
#include "gradpush/theory.hpp"

namespace {

gradpush::MixingMatrix make_mix(int n) {
  return gradpush::build_mixing(
      gradpush::generate_connected_digraph(n, 0.7, 1));
}

void BM_BuildMixing(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = gradpush::generate_connected_digraph(n, 0.7, 1);
  for (auto _ : state) {
    auto mix = gradpush::build_mixing(g);
    benchmark::DoNotOptimize(mix.sigma_w);
  }
}
BENCHMARK(BM_BuildMixing)->Arg(10)->Arg(30)->Arg(60);

void BM_PerronVector(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mix = make_mix(n);
  for (auto _ : state) {
    auto pi = gradpush::perron_vector(mix.w);
    benchmark::DoNotOptimize(pi);
  }
}
BENCHMARK(BM_PerronVector)->Arg(10)->Arg(50);

void BM_PiMatrixNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mix = make_mix(n);
  const Eigen::MatrixXd a = mix.w - mix.w_limit;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradpush::pi_matrix_norm(a, mix.pi));
  }
}
BENCHMARK(BM_PiMatrixNorm)->Arg(10)->Arg(50);

void BM_Step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mix = make_mix(n);
  const auto ens = gradpush::least_squares_ensemble(n, 5, 3, 2);
  auto s = gradpush::init_state(
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n) * 5), n, 5);
  for (auto _ : state) {
    s = gradpush::step(s, mix, ens, 1e-3);
    benchmark::DoNotOptimize(s.x);
  }
}
BENCHMARK(BM_Step)->Arg(10)->Arg(50);

void BM_Run1000(benchmark::State& state) {
  const int n = 10;
  const auto mix = make_mix(n);
  const auto ens = gradpush::least_squares_ensemble(n, 5, 3, 2);
  const Eigen::VectorXd x0 =
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n) * 5);
  for (auto _ : state) {
    auto rec = gradpush::run(mix, ens, 1e-3, 1000, x0);
    benchmark::DoNotOptimize(rec.sum_sq_err.back());
  }
}
BENCHMARK(BM_Run1000);

void BM_MonitorPass(benchmark::State& state) {
  const int n = 10;
  const auto mix = make_mix(n);
  const auto ens = gradpush::least_squares_ensemble(n, 5, 3, 2);
  const Eigen::VectorXd x0 =
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n) * 5);
  const double alpha = 1e-3;
  const auto rec = gradpush::run(mix, ens, alpha, 500, x0);
  const double delta =
      std::max(rec.delta_running.back(), 1.0 / (n * mix.pi.minCoeff()));
  const auto consts = gradpush::compute_constants(mix, ens, alpha, delta);
  for (auto _ : state) {
    auto report =
        gradpush::monitor_inequalities(rec, consts, mix, ens, alpha, x0);
    benchmark::DoNotOptimize(report.violations.size());
  }
}
BENCHMARK(BM_MonitorPass);

}  // namespace

BENCHMARK_MAIN();
