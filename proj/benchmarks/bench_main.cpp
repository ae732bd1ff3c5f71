// Micro benchmarks for the assimilation hot paths: OT solves, Sinkhorn
// iterations, the LETKF node update and whole SLETPF assimilation steps.

#include <benchmark/benchmark.h>

#include <algorithm>

#include "otlpf/filters.hpp"
#include "otlpf/harness.hpp"
#include "otlpf/metrics.hpp"
#include "otlpf/ot.hpp"
#include "otlpf/rng.hpp"
#include "otlpf/thread_pool.hpp"

namespace {

otlpf::TransportProblem random_problem(int p, std::uint64_t seed) {
  otlpf::RngStream stream(seed);
  otlpf::TransportProblem problem;
  problem.cost.resize(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) problem.cost(i, j) = stream.next_unit_halfopen();
  }
  problem.target_weights.resize(p);
  for (int i = 0; i < p; ++i) problem.target_weights[i] = std::exp(stream.next_normal());
  problem.target_weights /= problem.target_weights.sum();
  return problem;
}

void BM_SolveExact(benchmark::State& state) {
  const auto problem = random_problem(static_cast<int>(state.range(0)), 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(otlpf::solve_exact(problem));
  }
}
BENCHMARK(BM_SolveExact)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SolveEntropic(benchmark::State& state) {
  const auto problem = random_problem(100, 42);
  const double lambda = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(otlpf::solve_entropic(problem, lambda));
  }
}
BENCHMARK(BM_SolveEntropic)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_RealDft(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  otlpf::RealDft dft(m);
  otlpf::RealDft::Workspace ws;
  std::vector<double> x(m);
  otlpf::RngStream stream(7);
  for (auto& v : x) v = stream.next_normal();
  std::vector<std::complex<double>> xt(dft.num_modes());
  for (auto _ : state) {
    dft.forward(x.data(), xt.data(), ws);
    dft.inverse(xt.data(), x.data(), ws);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_RealDft)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_LetkfStep(benchmark::State& state) {
  otlpf::StParams params;
  const otlpf::StochasticTurbulenceModel model(params);
  Eigen::MatrixXd particles(100, params.state_dim);
  model.init_ensemble(particles, 3);
  const otlpf::Simulation sim = model.simulate_truth(1, 5);
  const otlpf::LocalisationSpec loc{0.03, otlpf::LocKind::GaspariCohn};
  for (auto _ : state) {
    Eigen::MatrixXd work = particles;
    otlpf::letkf_assimilate(work, model.observation(), sim.observations.row(0).transpose(),
                            loc);
    benchmark::DoNotOptimize(work.data());
  }
}
BENCHMARK(BM_LetkfStep)->Unit(benchmark::kMillisecond);

void BM_SletpfStep(benchmark::State& state) {
  otlpf::StParams params;
  const otlpf::StochasticTurbulenceModel model(params);
  Eigen::MatrixXd particles(100, params.state_dim);
  model.init_ensemble(particles, 3);
  const otlpf::Simulation sim = model.simulate_truth(1, 5);
  const otlpf::PeriodicMesh mesh(params.state_dim);
  const int b = static_cast<int>(state.range(0));
  const double w = std::max(1.0 / (2.0 * b), 1.0 / params.state_dim);
  const otlpf::PartitionOfUnity pou =
      otlpf::build_pou(otlpf::build_equal_partition(mesh, b), mesh, w);
  const otlpf::LocalisationSpec loc{0.01, otlpf::LocKind::GaspariCohn};
  for (auto _ : state) {
    Eigen::MatrixXd work = particles;
    otlpf::sletpf_assimilate(work, pou, model.observation(),
                             sim.observations.row(0).transpose(), loc);
    benchmark::DoNotOptimize(work.data());
  }
}
BENCHMARK(BM_SletpfStep)->Arg(64)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
