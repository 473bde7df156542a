#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <auxlab/criteria.hpp>
#include <auxlab/errors.hpp>

#include "generators.hpp"

namespace auxlab {
namespace {

using V = std::vector<double>;

TEST(Squared, Value) {
  const LossCriterion l = LossCriterion::squared(2);
  EXPECT_DOUBLE_EQ(l.value(V{1.0, 2.0}, V{0.0, 0.5}), 1.0 + 2.25);
  EXPECT_EQ(l.gradient(V{1.0, 2.0}, V{0.0, 0.5}), (V{2.0, 3.0}));
}

TEST(SquaredMargin, Value) {
  const LossCriterion l = LossCriterion::squared_margin();
  EXPECT_DOUBLE_EQ(l.value(V{0.25}, V{-1.0}), 1.5625);
  EXPECT_DOUBLE_EQ(l.gradient(V{0.25}, V{-1.0})[0], 2.5);
}

TEST(SmoothedHinge, ValueAndKink) {
  const LossCriterion l = LossCriterion::smoothed_hinge(3);
  EXPECT_DOUBLE_EQ(l.value(V{-1.0}, V{1.0}), 8.0);
  EXPECT_DOUBLE_EQ(l.gradient(V{-1.0}, V{1.0})[0], -12.0);
  EXPECT_EQ(l.value(V{1.0}, V{1.0}), 0.0);
  EXPECT_EQ(l.gradient(V{1.0}, V{1.0})[0], 0.0);
  EXPECT_EQ(l.value(V{3.0}, V{1.0}), 0.0);
  EXPECT_DOUBLE_EQ(LossCriterion::smoothed_hinge(2).value(V{0.0}, V{-1.0}), 1.0);
}

TEST(CrossEntropy, Value) {
  const LossCriterion l = LossCriterion::cross_entropy(2);
  EXPECT_NEAR(l.value(V{0.0, 0.0}, V{1.0, 0.0}), std::log(2.0), 1e-15);
  const V g = l.gradient(V{0.0, 0.0}, V{1.0, 0.0});
  EXPECT_NEAR(g[0], -0.5, 1e-15);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  // Shifted logits stay finite well past the exponent clamp.
  EXPECT_NEAR(l.value(V{1000.0, 0.0}, V{0.0, 1.0}), 1000.0, 1e-9);
}

TEST(Criteria, Validation) {
  EXPECT_THROW(LossCriterion::smoothed_hinge(1), InvalidArgument);
  EXPECT_THROW(LossCriterion::squared(0), DimensionError);
  EXPECT_THROW(LossCriterion::cross_entropy(2).value(V{0.0, 0.0}, V{0.7, 0.7}), InvalidTarget);
  EXPECT_THROW(LossCriterion::cross_entropy(2).value(V{0.0, 0.0}, V{-0.5, 1.5}), InvalidTarget);
  EXPECT_THROW(LossCriterion::squared(2).value(V{0.0}, V{0.0, 0.0}), DimensionError);
  EXPECT_THROW(LossCriterion::squared(1).value(V{0.0}, V{NAN}), InvalidTarget);
}

TEST(Criteria, AssumptionFlagsAndNames) {
  for (const LossCriterion& l : {LossCriterion::squared(), LossCriterion::squared_margin(),
                                 LossCriterion::cross_entropy(3), LossCriterion::smoothed_hinge(4)}) {
    EXPECT_TRUE(l.assumptions().assumption1) << l.name();
    EXPECT_TRUE(l.assumptions().assumption2) << l.name();
  }
  EXPECT_EQ(LossCriterion::smoothed_hinge().name(), "smoothed_hinge");
}

LossCriterion random_loss(gen::Gen& g, std::size_t& dy) {
  switch (g.rng().below(4)) {
    case 0: dy = g.size(1, 3); return LossCriterion::squared(dy);
    case 1: dy = 1; return LossCriterion::squared_margin();
    case 2: dy = g.size(2, 4); return LossCriterion::cross_entropy(dy);
    default: dy = 1; return LossCriterion::smoothed_hinge(static_cast<int>(g.size(2, 5)));
  }
}

// Property: every criterion is convex in q along random segments.
TEST(CriteriaProperty, ConvexInOutput) {
  const std::uint64_t seed = 21;
  gen::Gen g(seed);
  for (std::size_t c = 0; c < 500; ++c) {
    SCOPED_TRACE(gen::trace(seed, c));
    std::size_t dy = 1;
    const LossCriterion l = random_loss(g, dy);
    const V y = g.target(l, dy);
    const V q1 = g.vec(dy, -3.0, 3.0);
    const V q2 = g.vec(dy, -3.0, 3.0);
    const double t = g.uniform(0.0, 1.0);
    V mid(dy);
    for (std::size_t k = 0; k < dy; ++k) mid[k] = t * q1[k] + (1.0 - t) * q2[k];
    const double chord = t * l.value(q1, y) + (1.0 - t) * l.value(q2, y);
    EXPECT_LE(l.value(mid, y), chord + 1e-12 * (1.0 + std::abs(chord)));
  }
}

// Property: the analytic gradient matches central differences of the value.
TEST(CriteriaProperty, GradientMatchesFiniteDifferences) {
  const std::uint64_t seed = 22;
  gen::Gen g(seed);
  for (std::size_t c = 0; c < 500; ++c) {
    SCOPED_TRACE(gen::trace(seed, c));
    std::size_t dy = 1;
    const LossCriterion l = random_loss(g, dy);
    const V y = g.target(l, dy);
    V q = g.vec(dy, -3.0, 3.0);
    const V grad = l.gradient(q, y);
    for (std::size_t k = 0; k < dy; ++k) {
      const double h = 1e-6;
      V up = q;
      V dn = q;
      up[k] += h;
      dn[k] -= h;
      const double fd = (l.value(up, y) - l.value(dn, y)) / (2.0 * h);
      EXPECT_NEAR(grad[k], fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

// Property: stationary points in q are global minima; for the squared loss the
// unique stationary point is q = y with value 0.
TEST(CriteriaProperty, SquaredStationaryAtTarget) {
  gen::Gen g(23);
  for (std::size_t c = 0; c < 100; ++c) {
    const std::size_t dy = g.size(1, 4);
    const LossCriterion l = LossCriterion::squared(dy);
    const V y = g.vec(dy, -5.0, 5.0);
    EXPECT_EQ(l.value(y, y), 0.0);
    for (double v : l.gradient(y, y)) EXPECT_EQ(v, 0.0);
  }
}

}  // namespace
}  // namespace auxlab
