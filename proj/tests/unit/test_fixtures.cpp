#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <auxlab/errors.hpp>
#include <auxlab/fixtures.hpp>

#include "generators.hpp"

namespace auxlab {
namespace {

using V = std::vector<double>;

TEST(Examples, AllPass) {
  ASSERT_EQ(example_names().size(), 5u);
  for (const std::string& name : example_names()) {
    const ExampleReport r = run_example(name);
    EXPECT_TRUE(r.pass) << name;
    EXPECT_TRUE(r.agreement) << name;
    EXPECT_TRUE(r.monotone) << name;
    EXPECT_LE(r.max_difference, 1e-10) << name;
    ASSERT_EQ(r.points.size(), 5u);
    for (std::size_t i = 1; i < r.points.size(); ++i) EXPECT_LT(r.points[i].eps, r.points[i - 1].eps);
  }
  EXPECT_THROW(example_fixture("nope"), UnknownFixture);
  EXPECT_THROW(run_example("nope"), UnknownFixture);
}

TEST(Examples, ReferenceValues) {
  const double lambda = 0.01;
  const ExampleReport one = run_example("squared-one-sample", {0.5});
  EXPECT_NEAR(one.points[0].general, lambda * std::exp(-4.0), 1e-15);
  EXPECT_NEAR(one.points[0].general, 1.83156e-4, 1e-9);
  const ExampleReport two = run_example("squared-two-sample", {0.25});
  const double t = std::exp(-4.0) + 1.0;
  EXPECT_NEAR(two.points[0].general, t * t + lambda * std::exp(-8.0), 1e-14);
  EXPECT_NEAR(two.points[0].general, 1.0369700, 1e-6);
  const ExampleReport dup = run_example("squared-duplicate-input", {1.0});
  EXPECT_NEAR(dup.points[0].general, 2.0 + (2.0 + lambda) * std::exp(-2.0), 1e-14);
  EXPECT_EQ(dup.limit, 2.0);
}

TEST(Examples, HingeDiscrepanciesRecorded) {
  const ExampleReport one = run_example("hinge-one-sample", {1.0, 0.1});
  EXPECT_EQ(one.limit, 0.0);
  EXPECT_EQ(one.discrepancies.size(), 2u);
  // The printed sign moves the output to -3, where the cubed hinge is 64.
  EXPECT_NEAR(one.points[1].printed_path_value, 64.0, 1e-2);
  const ExampleReport two = run_example("hinge-two-sample", {0.05});
  EXPECT_EQ(two.limit, 8.0);
  EXPECT_NEAR(two.points[0].general, 8.0, 1e-6);
  EXPECT_FALSE(two.discrepancies.empty());
}

TEST(Bump, ProblemShape) {
  const Problem p = bump_problem();
  EXPECT_EQ(p.reduction(), Reduction::Mean);
  EXPECT_EQ(p.lambda(), kDefaultLambda);
  EXPECT_EQ(p.loss().power(), 3);
  EXPECT_EQ(bump_problem(0.1, true).model().parameter_count(), 2u);
  const double l = original_objective(p).evaluate(V{bump_stationary_point()});
  EXPECT_NEAR(l, 7.9995827452, 1e-9);
}

LandscapeConfig small_grid() {
  LandscapeConfig c;
  c.theta_steps = 10;
  c.b_steps = 8;
  return c;
}

TEST(Landscape, KnownCells) {
  const Problem p = bump_problem();
  const LandscapeConfig c;
  EXPECT_NEAR(landscape_inner(p, 0.8, 0.0, c).value, 0.0, 1e-6);
  EXPECT_NEAR(landscape_inner(p, 0.2, -10.0, c).value, 7.999575548, 1e-8);
  EXPECT_LT(landscape_inner(p, 0.2, 10.0, c).value, 1e-9);
}

TEST(Landscape, GridShapeAndCsv) {
  const LandscapeResult r = landscape_grid(bump_problem(), small_grid());
  ASSERT_EQ(r.cells.size(), 80u);
  EXPECT_EQ(r.failures, 0u);
  EXPECT_DOUBLE_EQ(r.cells[0].theta, 0.0);
  EXPECT_DOUBLE_EQ(r.cells[0].b, -5.0);
  EXPECT_DOUBLE_EQ(r.cells[9].b, -5.0 + 20.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.cells[8].theta, 0.1);
  std::ostringstream csv;
  write_landscape_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "theta,b,value");
  LandscapeConfig bad = small_grid();
  bad.b_steps = 0;
  EXPECT_THROW(landscape_grid(bump_problem(), bad), InvalidArgument);
}

TEST(Landscape, ThreadCountDoesNotChangeResults) {
  LandscapeConfig c = small_grid();
  const LandscapeResult serial = landscape_grid(bump_problem(), c);
  c.jobs = 3;
  const LandscapeResult threaded = landscape_grid(bump_problem(), c);
  for (std::size_t i = 0; i < serial.cells.size(); ++i) EXPECT_EQ(serial.cells[i].value, threaded.cells[i].value);
}

// Independent inner minimum at x = 0: only u = a e^b reaches the output, so
// min_a l(f + a e^b) + lambda a^2 = min_u l(f + u) + lambda e^{-2b} u^2. Solved
// here by bisection on the derivative in u.
double inner_reference(double f, double lambda, double b) {
  const double c = lambda * std::exp(-2.0 * b);
  auto deriv = [&](double u) {
    const double m = std::max(0.0, 1.0 + (f + u));  // hinge with y = -1
    return 3.0 * m * m + 2.0 * c * u;
  };
  auto value = [&](double u) {
    const double m = std::max(0.0, 1.0 + (f + u));
    return m * m * m + c * u * u;
  };
  // deriv is increasing; the root lies in [-(1 + f) - 1, 0] when 1 + f > 0.
  double lo = -std::abs(1.0 + f) - 1.0;
  double hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? hi : lo) = mid;
  }
  return value(0.5 * (lo + hi));
}

// Property: inner values match the reparametrized 1-D reference, never exceed
// L(theta), and do not increase with b.
TEST(LandscapeProperty, MatchesReparametrizedReference) {
  const std::uint64_t seed = 71;
  gen::Gen g(seed);
  const Problem p = bump_problem();
  const GaussianCurve curve = GaussianCurve::bump();
  const LandscapeConfig cfg;
  for (std::size_t c = 0; c < 60; ++c) {
    SCOPED_TRACE(gen::trace(seed, c));
    const double theta = g.uniform(0.0, 1.0);
    const double b1 = g.uniform(-5.0, 15.0);
    const double b2 = g.uniform(-5.0, 15.0);
    const double v1 = landscape_inner(p, theta, b1, cfg).value;
    const double v2 = landscape_inner(p, theta, b2, cfg).value;
    EXPECT_NEAR(v1, inner_reference(curve(theta), p.lambda(), b1), 1e-9 * (1.0 + v1));
    EXPECT_LE(v1, original_objective(p).evaluate(V{theta}) + 1e-12);
    if (b1 < b2) {
      EXPECT_GE(v1, v2 - 1e-9);
    } else {
      EXPECT_LE(v1, v2 + 1e-9);
    }
  }
}

TEST(NullSpace, FixturePasses) {
  const NullSpaceReport r = null_space_fixture();
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.zero_max_theta_grad, 1e-10);
  EXPECT_LE(r.offset_stationary_norm, 1e-10);
  EXPECT_GT(r.offset_loss, r.offset_grid_min + 1.0);
  EXPECT_GT(r.offset_min_perturbed_norm, 1e-3);
}

}  // namespace
}  // namespace auxlab
