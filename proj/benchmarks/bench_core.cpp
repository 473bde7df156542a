#include <vector>

#include <benchmark/benchmark.h>

#include <auxlab/augment.hpp>
#include <auxlab/fixtures.hpp>
#include <auxlab/optimize.hpp>
#include <auxlab/oracles.hpp>
#include <auxlab/random.hpp>

namespace {

using namespace auxlab;

Problem mlp_problem(std::size_t hidden, std::size_t samples) {
  Rng rng(7);
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> ys;
  for (std::size_t i = 0; i < samples; ++i) {
    xs.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    ys.push_back({rng.uniform(-1.0, 1.0)});
  }
  return Problem(Model::mlp({2, hidden, 1}, Activation::Tanh), LossCriterion::squared(), Dataset(xs, ys));
}

void BM_AugmentedGradient(benchmark::State& state) {
  const Problem p = mlp_problem(static_cast<std::size_t>(state.range(0)), 32);
  const GradientProgram f = augmented_objective(p);
  Rng rng(1);
  std::vector<double> x(p.augmented_layout().size());
  for (double& v : x) v = rng.uniform(-0.5, 0.5);
  std::vector<double> g(x.size());
  for (auto _ : state) benchmark::DoNotOptimize(f.value_and_gradient(x, g));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_AugmentedGradient)->Arg(4)->Arg(16)->Arg(64);

void BM_OriginalValue(benchmark::State& state) {
  const Problem p = mlp_problem(16, 32);
  const GradientProgram f = original_objective(p);
  Rng rng(2);
  const std::vector<double> theta = p.model().initial_parameters(rng);
  for (auto _ : state) benchmark::DoNotOptimize(f.evaluate(theta));
}
BENCHMARK(BM_OriginalValue);

void BM_GridMin2D(benchmark::State& state) {
  const ExampleFixture f = example_fixture("squared-two-sample");
  const GradientProgram L = original_objective(f.problem);
  const std::vector<double> lo{-3.0, -3.0};
  const std::vector<double> hi{3.0, 3.0};
  for (auto _ : state) benchmark::DoNotOptimize(grid_global_min(L, lo, hi, 0.02).min_value);
}
BENCHMARK(BM_GridMin2D)->Unit(benchmark::kMillisecond);

void BM_LandscapeCell(benchmark::State& state) {
  const Problem p = bump_problem();
  const LandscapeConfig cfg;
  double b = -5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(landscape_inner(p, 0.3, b, cfg).value);
    b = b > 15.0 ? -5.0 : b + 0.1;
  }
}
BENCHMARK(BM_LandscapeCell)->Unit(benchmark::kMicrosecond);

void BM_PgbCheck(benchmark::State& state) {
  const Problem p = bump_problem();
  const std::vector<double> theta{bump_stationary_point()};
  const AuxParams z = AuxParams::zeros(1, 1, p.lambda());
  for (auto _ : state) benchmark::DoNotOptimize(pgb_check(p, theta, z).refuted);
}
BENCHMARK(BM_PgbCheck)->Unit(benchmark::kMillisecond);

void BM_GradientDescent(benchmark::State& state) {
  const Problem p = bump_problem(10.0);
  OptimizerConfig opt;
  opt.method = Method::AdaGrad;
  opt.lr = 0.5;
  opt.max_iterations = 1000;
  opt.grad_tol = 0.0;
  opt.sample_every = 1000;
  const ParamVector init = pack_augmented(std::vector<double>{0.3}, AuxParams::zeros(1, 1, 10.0));
  const GradientProgram f = augmented_objective(p);
  for (auto _ : state) benchmark::DoNotOptimize(minimize(f, init, opt).final_objective);
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_GradientDescent)->Unit(benchmark::kMillisecond);

void BM_ExpInterp(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<std::vector<double>> pts;
  std::vector<ExpDirection> dirs;
  std::vector<double> targets;
  for (std::size_t i = 0; i < m; ++i) {
    pts.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    dirs.push_back({rng.uniform(-1.0, 1.0), {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}});
    targets.push_back(rng.uniform(-1.0, 1.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(exp_interp(pts, dirs, 1.0, targets).rank);
}
BENCHMARK(BM_ExpInterp)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
