#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <auxlab/errors.hpp>
#include <auxlab/fixtures.hpp>
#include <auxlab/optimize.hpp>

#include "generators.hpp"

namespace auxlab {
namespace {

using V = std::vector<double>;

// 0.5 sum_i c_i (p_i - 1)^2
GradientProgram quadratic(V curvature) {
  const std::size_t n = curvature.size();
  return make_program(n, [curvature]<class S>(std::span<const S> p) -> S {
    S acc(0.0);
    for (std::size_t i = 0; i < p.size(); ++i) acc += S(0.5 * curvature[i]) * ad::square(p[i] - S(1.0));
    return acc;
  });
}

TEST(Enums, StringRoundTrips) {
  for (Method m : {Method::GD, Method::AdaGrad}) EXPECT_EQ(method_from_string(to_string(m)), m);
  for (NormKind k : {NormKind::Frobenius, NormKind::Spectral}) EXPECT_EQ(norm_kind_from_string(to_string(k)), k);
  for (MonitorAction a : {MonitorAction::Off, MonitorAction::Halt, MonitorAction::Restart}) {
    EXPECT_EQ(monitor_action_from_string(to_string(a)), a);
  }
  for (Variant v : {Variant::Original, Variant::Augmented, Variant::AugmentedMonitor}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_EQ(to_string(Termination::MonitorHalt), "monitor_halt");
  EXPECT_THROW(method_from_string("adam"), InvalidArgument);
}

TEST(Config, Validation) {
  OptimizerConfig o;
  o.lr = 0.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = OptimizerConfig{};
  o.sample_every = 0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  MonitorConfig m;
  m.threshold = -1.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(Minimize, GradientDescentReachesStationaryPoint) {
  OptimizerConfig opt;
  opt.method = Method::GD;
  opt.lr = 0.1;
  opt.grad_tol = 1e-10;
  const RunRecord r = minimize(quadratic({1.0, 4.0}), ParamVector(V{5.0, -3.0}), opt);
  EXPECT_EQ(r.termination, Termination::Stationary);
  EXPECT_NEAR(r.final_params[0], 1.0, 1e-9);
  EXPECT_NEAR(r.final_params[1], 1.0, 1e-9);
  EXPECT_LE(r.final_grad_norm, 1e-10);
  EXPECT_EQ(r.trajectory.back().iteration, r.iterations);
}

TEST(Minimize, GradientDescentStepByHand) {
  OptimizerConfig opt;
  opt.method = Method::GD;
  opt.lr = 0.25;
  opt.max_iterations = 1;
  const RunRecord r = minimize(quadratic({2.0}), ParamVector(V{3.0}), opt);
  EXPECT_EQ(r.termination, Termination::MaxIter);
  EXPECT_DOUBLE_EQ(r.final_params[0], 3.0 - 0.25 * 4.0);
}

TEST(Minimize, AdaGradStepByHand) {
  OptimizerConfig opt;
  opt.method = Method::AdaGrad;
  opt.lr = 0.5;
  opt.delta = 1e-300;
  opt.max_iterations = 2;
  const RunRecord r = minimize(quadratic({2.0}), ParamVector(V{3.0}), opt);
  // g1 = 4, p1 = 3 - 0.5 * 4 / 4 = 2.5; g2 = 3, p2 = 2.5 - 0.5 * 3 / 5.
  EXPECT_DOUBLE_EQ(r.final_params[0], 2.5 - 0.3);
}

TEST(Minimize, AdaGradConverges) {
  OptimizerConfig opt;
  opt.method = Method::AdaGrad;
  opt.lr = 0.5;
  opt.max_iterations = 200000;
  opt.grad_tol = 1e-8;
  const RunRecord r = minimize(quadratic({1.0, 10.0, 0.1}), ParamVector(V{0.0, 0.0, 0.0}), opt);
  EXPECT_EQ(r.termination, Termination::Stationary);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.final_params[i], 1.0, 1e-6);
}

TEST(Minimize, FrozenSegmentsStayPut) {
  Layout layout;
  layout.add("theta", 1).add("a", 1);
  const ParamVector init(V{4.0, -2.0}, layout);
  OptimizerConfig opt;
  opt.lr = 0.1;
  opt.frozen_segments = {"theta"};
  opt.grad_tol = 1e-10;
  const RunRecord r = minimize(quadratic({1.0, 1.0}), init, opt);
  EXPECT_EQ(r.final_params[0], 4.0);
  EXPECT_NEAR(r.final_params[1], 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.max_frozen_grad_norm, 3.0);
  EXPECT_EQ(r.termination, Termination::Stationary);
}

TEST(Minimize, TrajectorySampling) {
  OptimizerConfig opt;
  opt.lr = 0.01;
  opt.max_iterations = 95;
  opt.sample_every = 10;
  const RunRecord r = minimize(quadratic({1.0}), ParamVector(V{0.0}), opt);
  ASSERT_EQ(r.trajectory.size(), 11u);
  EXPECT_EQ(r.trajectory.front().iteration, 0u);
  EXPECT_EQ(r.trajectory[9].iteration, 90u);
  EXPECT_EQ(r.trajectory.back().iteration, 95u);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    EXPECT_LT(r.trajectory[i].objective, r.trajectory[i - 1].objective);
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "iter,objective,grad_norm,aux_norm");
}

TEST(Minimize, OverflowIsReportedNotThrown) {
  const GradientProgram f = make_program(1, []<class S>(std::span<const S> p) -> S { return -ad::exp(p[0]); });
  OptimizerConfig opt;
  opt.lr = 1.0;
  const RunRecord r = minimize(f, ParamVector(V{0.0}), opt);
  EXPECT_EQ(r.termination, Termination::Overflow);
  EXPECT_FALSE(r.overflow_message.empty());
}

TEST(Minimize, MiniBatchesAreDeterministic) {
  const Problem p(Model::mlp({1, 1}, Activation::Identity), LossCriterion::squared(),
                  Dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {{1.0}, {3.0}, {5.0}, {7.0}}));
  Objective obj{original_objective(p), [p](std::span<const std::size_t> s) { return original_objective(p, s); }, 4};
  OptimizerConfig opt;
  opt.lr = 0.02;
  opt.batch_size = 2;
  opt.max_iterations = 20000;
  opt.seed = 9;
  const RunRecord r1 = minimize(obj, ParamVector(V{0.0, 0.0}), opt);
  const RunRecord r2 = minimize(obj, ParamVector(V{0.0, 0.0}), opt);
  EXPECT_EQ(r1.final_params, r2.final_params);
  EXPECT_NEAR(r1.final_params[0], 2.0, 1e-6);
  EXPECT_NEAR(r1.final_params[1], 1.0, 1e-6);
}

Layout aux_only() {
  Layout l;
  l.add("a", 1).add("b", 1).add("W", 1);
  return l;
}

// Pushes b upward forever; the aux norm crosses any threshold.
GradientProgram runaway() {
  return make_program(3, []<class S>(std::span<const S> p) -> S { return -p[1] + ad::square(p[0]) + ad::square(p[2]); });
}

TEST(Monitor, HaltsAtThreshold) {
  OptimizerConfig opt;
  opt.lr = 0.5;
  MonitorConfig mon;
  mon.action = MonitorAction::Halt;
  mon.threshold = 3.0;
  const RunRecord r = minimize(runaway(), ParamVector(V{0.0, 0.0, 0.0}, aux_only()), opt, mon);
  EXPECT_EQ(r.termination, Termination::MonitorHalt);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].iteration, 6u);
  EXPECT_GE(r.final_aux_norm, 3.0);
}

TEST(Monitor, RestartsThenHalts) {
  OptimizerConfig opt;
  opt.lr = 0.5;
  MonitorConfig mon;
  mon.action = MonitorAction::Restart;
  mon.threshold = 3.0;
  mon.max_restarts = 4;
  const RunRecord r = minimize(runaway(), ParamVector(V{0.0, 0.0, 0.0}, aux_only()), opt, mon);
  EXPECT_EQ(r.restarts, 4u);
  EXPECT_EQ(r.events.size(), 5u);
  EXPECT_EQ(r.events.back().action, MonitorAction::Halt);
  EXPECT_EQ(r.termination, Termination::MonitorHalt);
}

TEST(Monitor, NormKinds) {
  Eigen::MatrixXd W(2, 2);
  W << 3.0, 0.0, 0.0, 4.0;
  const AuxParams aux({0.0, 0.0}, {0.0, 0.0}, W, 0.1);
  EXPECT_DOUBLE_EQ(aux_norm(aux, NormKind::Frobenius), 5.0);
  EXPECT_NEAR(aux_norm(aux, NormKind::Spectral), 4.0, 1e-14);
  MonitorConfig mon;
  mon.threshold = 5.0;
  EXPECT_TRUE(monitor_check(aux, mon));
  mon.norm = NormKind::Spectral;
  EXPECT_FALSE(monitor_check(aux, mon));
  EXPECT_EQ(aux_norm(ParamVector(V{1.0, 2.0})), 0.0);
}

TEST(Experiment, SeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 1000; ++i) seen.insert(experiment_seed(7, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(experiment_seed(7, 3), experiment_seed(7, 3));
  EXPECT_NE(experiment_seed(7, 3), experiment_seed(8, 3));
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.n_seeds = 6;
  cfg.base_seed = 3;
  cfg.opt.method = Method::AdaGrad;
  cfg.opt.lr = 0.5;
  cfg.opt.max_iterations = 3000;
  cfg.opt.sample_every = 500;
  return cfg;
}

TEST(Experiment, BookkeepingAndPairing) {
  const Problem p = bump_problem(10.0);
  const ExperimentResult r = multi_seed_experiment(p, small_experiment());
  ASSERT_EQ(r.runs.size(), 18u);
  ASSERT_EQ(r.summaries.size(), 3u);
  for (std::size_t i = 0; i < 6; ++i) {
    // Every variant starts from the same theta for a given seed index.
    EXPECT_EQ(r.runs[i].seed, r.runs[6 + i].seed);
    EXPECT_EQ(r.runs[i].seed, r.runs[12 + i].seed);
    Rng rng(r.runs[i].seed);
    const V theta = Model::bump_curve().initial_parameters(rng);
    EXPECT_EQ(r.runs[i].record.trajectory.front().objective, original_objective(p).evaluate(theta));
  }
  for (const VariantSummary& s : r.summaries) {
    EXPECT_EQ(s.runs, 6u);
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.max);
    EXPECT_DOUBLE_EQ(s.success_fraction, static_cast<double>(s.successes) / 6.0);
  }
  const Histogram h = loss_histogram(r, {Variant::Original, Variant::Augmented}, 0.0, 10.0, 5);
  ASSERT_EQ(h.edges.size(), 6u);
  std::size_t total = 0;
  for (std::size_t c : h.counts[0]) total += c;
  EXPECT_EQ(total, 6u);
  std::ostringstream csv;
  write_histogram_csv(csv, h, {Variant::Original, Variant::Augmented});
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "bin_lo,bin_hi,original,augmented");
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  const Problem p = bump_problem(10.0);
  ExperimentConfig cfg = small_experiment();
  const ExperimentResult serial = multi_seed_experiment(p, cfg);
  cfg.jobs = 3;
  const ExperimentResult threaded = multi_seed_experiment(p, cfg);
  ASSERT_EQ(serial.runs.size(), threaded.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) {
    EXPECT_EQ(serial.runs[i].record.final_params, threaded.runs[i].record.final_params);
    EXPECT_EQ(serial.runs[i].final_loss, threaded.runs[i].final_loss);
  }
}

TEST(Experiment, FixedInitialTheta) {
  ExperimentConfig cfg = small_experiment();
  cfg.initial_theta = {0.3};
  cfg.variants = {Variant::Original};
  cfg.opt.max_iterations = 1;
  const ExperimentResult r = multi_seed_experiment(bump_problem(10.0), cfg);
  for (const ExperimentRun& run : r.runs) {
    EXPECT_EQ(run.record.trajectory.front().objective, original_objective(bump_problem(10.0)).evaluate(V{0.3}));
  }
  cfg.initial_theta = {0.3, 0.1};
  EXPECT_THROW(multi_seed_experiment(bump_problem(10.0), cfg), DimensionError);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (std::size_t jobs : {1u, 2u, 5u}) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(parallel_for(4, 2, [](std::size_t i) {
                 if (i == 2) throw InvalidArgument("boom");
               }),
               InvalidArgument);
}

}  // namespace
}  // namespace auxlab
