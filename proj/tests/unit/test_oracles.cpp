#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <auxlab/errors.hpp>
#include <auxlab/fixtures.hpp>
#include <auxlab/oracles.hpp>

#include "generators.hpp"

namespace auxlab {
namespace {

using V = std::vector<double>;

GradientProgram bowl(double cx, double cy) {
  return make_program(2, [cx, cy]<class S>(std::span<const S> p) -> S {
    return ad::square(p[0] - S(cx)) + S(2.0) * ad::square(p[1] - S(cy));
  });
}

TEST(Grid, FindsQuadraticMinimum) {
  const V lo{-1.0, -1.0};
  const V hi{1.0, 1.0};
  const GridResult r = grid_global_min(bowl(0.25, -0.5), lo, hi, 0.05);
  EXPECT_EQ(r.evaluations, 41u * 41u);
  EXPECT_NEAR(r.argmin[0], 0.25, 1e-12);
  EXPECT_NEAR(r.argmin[1], -0.5, 1e-12);
  EXPECT_NEAR(r.min_value, 0.0, 1e-24);
}

TEST(Grid, TiesGoToTheLexicographicallySmallestPoint) {
  const GradientProgram even = make_program(1, []<class S>(std::span<const S> p) -> S { return ad::square(ad::square(p[0]) - S(1.0)); });
  const V lo{-2.0};
  const V hi{2.0};
  const GridResult r = grid_global_min(even, lo, hi, 0.5);
  EXPECT_DOUBLE_EQ(r.argmin[0], -1.0);
}

TEST(Grid, RefineImprovesCoarseResult) {
  const V lo{-1.0, -1.0};
  const V hi{1.0, 1.0};
  const GradientProgram f = bowl(0.123, 0.456);
  const GridResult coarse = grid_global_min(f, lo, hi, 0.1);
  const GridResult fine = grid_refine(f, coarse, lo, hi, 0.1, 1e-3);
  EXPECT_NEAR(fine.argmin[0], 0.123, 1e-9);
  EXPECT_NEAR(fine.argmin[1], 0.456, 1e-9);
  EXPECT_LE(fine.min_value, coarse.min_value);
}

TEST(Grid, BudgetAndDimensionLimits) {
  const GradientProgram f4 = make_program(4, []<class S>(std::span<const S> p) -> S { return p[0]; });
  const V lo4(4, 0.0);
  const V hi4(4, 1.0);
  EXPECT_THROW(grid_global_min(f4, lo4, hi4, 0.5), InvalidArgument);
  const V lo{0.0, 0.0};
  const V hi{1.0, 1.0};
  EXPECT_THROW(grid_global_min(bowl(0, 0), lo, hi, 1e-5), BudgetError);
}

TEST(Grid, OverflowCountsAsInfinity) {
  const GradientProgram f = make_program(1, []<class S>(std::span<const S> p) -> S { return -ad::exp(p[0]); });
  const V lo{0.0};
  const V hi{1000.0};
  const GridResult r = grid_global_min(f, lo, hi, 100.0);
  EXPECT_EQ(r.overflows, 5u);
  EXPECT_DOUBLE_EQ(r.argmin[0], 500.0);
}

TEST(LocalMin, PassesAtMinimumFailsAtSaddle) {
  const V center{0.25, -0.5};
  const OracleVerdict ok = verify_local_min(bowl(0.25, -0.5), center, 1e-2, 2000, 1);
  EXPECT_TRUE(ok.pass);
  EXPECT_LE(ok.residual("max_decrease"), 0.0);
  const GradientProgram saddle = make_program(2, []<class S>(std::span<const S> p) -> S { return ad::square(p[0]) - ad::square(p[1]); });
  const V origin{0.0, 0.0};
  const OracleVerdict bad = verify_local_min(saddle, origin, 1e-2, 2000, 1);
  EXPECT_FALSE(bad.pass);
  ASSERT_TRUE(bad.witness.has_value());
  EXPECT_LT(saddle.evaluate(*bad.witness), 0.0);
  EXPECT_LE(std::hypot((*bad.witness)[0], (*bad.witness)[1]), 1e-2 + 1e-15);
}

TEST(LocalMin, DeterministicInSeed) {
  const GradientProgram f = bowl(0.0, 0.0);
  const V p{0.001, 0.0};
  EXPECT_EQ(verify_local_min(f, p, 1e-2, 500, 4).residuals[1].value,
            verify_local_min(f, p, 1e-2, 500, 4).residuals[1].value);
}

TEST(GradientCheck, CatchesAWrongGradient) {
  const GradientProgram right = bowl(0.1, 0.2);
  const GradientProgram wrong(
      2, [](std::span<const double> p) { return p[0] * p[0] + p[1]; },
      [](std::span<const ad::Var> p) { return p[0] * p[0] + p[1] * ad::Var(1.5); });
  const std::vector<V> points{{0.1, 0.2}, {0.5, -0.3}};
  EXPECT_TRUE(gradient_check(right, points).pass);
  const OracleVerdict v = gradient_check(wrong, points);
  EXPECT_FALSE(v.pass);
  EXPECT_TRUE(v.witness.has_value());
}

TEST(Realizable, PerSampleGradients) {
  const Model m = Model::mlp({1, 1}, Activation::Identity);
  const Dataset d({{0.0}, {1.0}}, {{1.0}, {3.0}});
  EXPECT_TRUE(per_sample_gradient_check(m, LossCriterion::squared(), d, V{2.0, 1.0}).pass);
  EXPECT_FALSE(per_sample_gradient_check(m, LossCriterion::squared(), d, V{2.0, 1.1}).pass);
}

TEST(Interp, MonomialOrder) {
  const auto e = monomial_exponents(2, 2);
  const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(e, expected);
  EXPECT_EQ(monomial_count(3, 4), 35u);
  EXPECT_EQ(monomial_count(1, 0), 1u);
}

TEST(Interp, PolynomialVandermondeIsExact) {
  const std::vector<V> pts{{-1.0}, {0.0}, {0.5}, {2.0}};
  V targets;
  for (const V& p : pts) targets.push_back(1.0 - 2.0 * p[0] + 0.5 * p[0] * p[0] * p[0]);
  const InterpResult r = poly_interp(pts, 3, targets);
  EXPECT_EQ(r.rank, 4u);
  EXPECT_FALSE(r.rank_deficient);
  EXPECT_NEAR(r.coefficients(0), 1.0, 1e-12);
  EXPECT_NEAR(r.coefficients(1), -2.0, 1e-12);
  EXPECT_NEAR(r.coefficients(2), 0.0, 1e-12);
  EXPECT_NEAR(r.coefficients(3), 0.5, 1e-12);
  EXPECT_LT(r.residual, 1e-12);
}

TEST(Interp, RepeatedPointsAreRankDeficient) {
  const std::vector<V> pts{{0.3}, {0.3}};
  const std::vector<ExpDirection> dirs{{0.0, {1.0}}, {1.0, {-1.0}}};
  const InterpResult r = exp_interp(pts, dirs, 1.0, V{1.0, 2.0});
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_THROW(exp_interp(pts, {dirs[0]}, 1.0, V{1.0, 2.0}), InvalidArgument);
}

TEST(Interp, PolyBudget) { EXPECT_THROW(poly_interp({{0.0, 0.0, 0.0}}, 400, V{1.0}), BudgetError); }

// Property: distinct points with as many random directions give a full-rank
// exponential system that interpolates any targets.
TEST(InterpProperty, ExpFullRankOnDistinctPoints) {
  const std::uint64_t seed = 61;
  gen::Gen g(seed);
  for (std::size_t c = 0; c < 100; ++c) {
    SCOPED_TRACE(gen::trace(seed, c));
    const std::size_t dim = g.size(1, 3);
    const std::size_t m = g.size(1, 6);
    std::vector<V> pts;
    for (std::size_t i = 0; i < m; ++i) pts.push_back(g.vec(dim, -1.0, 1.0));
    std::vector<ExpDirection> dirs;
    for (std::size_t t = 0; t < m; ++t) dirs.push_back({g.uniform(-1.0, 1.0), g.vec(dim, -2.0, 2.0)});
    const V targets = g.vec(m, -1.0, 1.0);
    const InterpResult r = exp_interp(pts, dirs, 1.0, targets);
    EXPECT_EQ(r.rank, m);
    // Allowance grows with the condition number.
    const double cond = r.singular_values(0) / r.singular_values(r.singular_values.size() - 1);
    EXPECT_LT(r.residual, 1e-8 * std::max(1.0, cond * 1e-8));
  }
}

TEST(Pgb, RefutesSquaredOneSample) {
  const ExampleFixture f = example_fixture("squared-one-sample");
  const AuxParams z = AuxParams::zeros(1, 1, f.problem.lambda());
  const PgbReport r = pgb_check(f.problem, f.theta, z);
  EXPECT_TRUE(r.refuted);
  EXPECT_FALSE(r.verdict.pass);
  EXPECT_DOUBLE_EQ(r.q_z, 1.0);
  for (const PgbEpsilon& e : r.per_eps) EXPECT_LE(e.inner_min, 1e-8);
  EXPECT_TRUE(r.witness_verified);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_LT(augmented_objective_fixed_theta(f.problem, f.theta).evaluate(*r.witness), 1.0);
}

TEST(Pgb, ConsistentAtDuplicateInputMinimum) {
  const ExampleFixture f = example_fixture("squared-duplicate-input");
  Eigen::MatrixXd W(1, 1);
  W(0, 0) = 0.4;
  const AuxParams z({0.0}, {-0.3}, W, f.problem.lambda());
  const PgbReport r = pgb_check(f.problem, f.theta, z);
  EXPECT_FALSE(r.refuted);
  EXPECT_TRUE(r.verdict.pass);
  EXPECT_DOUBLE_EQ(r.q_z, 2.0);
}

TEST(Pgb, HingeRefutedAtSuboptimalBump) {
  const Problem p = bump_problem();
  const V theta{bump_stationary_point()};
  const PgbReport r = pgb_check(p, theta, AuxParams::zeros(1, 1, p.lambda()));
  EXPECT_TRUE(r.refuted);
  EXPECT_TRUE(r.witness_verified);
}

TEST(Pgb, RejectsNonzeroA) {
  const ExampleFixture f = example_fixture("squared-one-sample");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_THROW(pgb_check(f.problem, f.theta, AuxParams({0.1}, {0.0}, W, 0.01)), InvalidArgument);
}

// Property: A r reproduces the gradient of the mean-reduced objective.
TEST(FactorizationProperty, ReproducesGradient) {
  const std::uint64_t seed = 62;
  gen::Gen g(seed);
  for (std::size_t c = 0; c < 150; ++c) {
    SCOPED_TRACE(gen::trace(seed, c));
    const Problem p = g.problem().with_reduction(Reduction::Mean);
    const V theta = g.theta(p.model());
    const Factorization fac = gradient_factorization(p.model(), p.loss(), p.data(), theta);
    const V grad = original_objective(p).gradient(theta);
    const Eigen::VectorXd ar = fac.A * fac.r;
    for (std::size_t j = 0; j < grad.size(); ++j) {
      EXPECT_NEAR(ar(static_cast<Eigen::Index>(j)), grad[j], 1e-10 * (1.0 + std::abs(grad[j])));
    }
    EXPECT_NEAR(fac.null_norm, ar.norm(), 1e-15);
  }
}

}  // namespace
}  // namespace auxlab
