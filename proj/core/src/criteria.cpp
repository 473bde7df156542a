#include "auxlab/criteria.hpp"

#include <cmath>

namespace auxlab {

LossCriterion::LossCriterion(LossKind kind, std::size_t output_dim, int power)
    : kind_(kind), output_dim_(output_dim), power_(power) {
  if (output_dim_ == 0) throw DimensionError("loss output dimension must be positive");
  switch (kind_) {
    case LossKind::SmoothedHinge:
      if (power_ < 2) throw InvalidArgument("smoothed hinge requires p >= 2");
      [[fallthrough]];
    case LossKind::SquaredMargin:
      if (output_dim_ != 1) throw DimensionError("margin losses require d_y = 1");
      break;
    case LossKind::CrossEntropy:
    case LossKind::Squared:
      break;
  }
  // All four are differentiable and convex in q, and their stationary points
  // are minimizers (for cross entropy: with realizable targets).
  flags_ = AssumptionFlags{true, true};
}

LossCriterion LossCriterion::squared(std::size_t output_dim) {
  return LossCriterion(LossKind::Squared, output_dim, 2);
}
LossCriterion LossCriterion::squared_margin() { return LossCriterion(LossKind::SquaredMargin, 1, 2); }
LossCriterion LossCriterion::cross_entropy(std::size_t output_dim) {
  return LossCriterion(LossKind::CrossEntropy, output_dim, 0);
}
LossCriterion LossCriterion::smoothed_hinge(int power) {
  return LossCriterion(LossKind::SmoothedHinge, 1, power);
}

std::string LossCriterion::name() const {
  switch (kind_) {
    case LossKind::Squared:
      return "squared";
    case LossKind::SquaredMargin:
      return "squared_margin";
    case LossKind::CrossEntropy:
      return "cross_entropy";
    case LossKind::SmoothedHinge:
      return "smoothed_hinge";
  }
  return "unknown";
}

void LossCriterion::validate_target(std::span<const double> y) const {
  if (y.size() != output_dim_) {
    throw DimensionError("target has dimension " + std::to_string(y.size()) + ", loss expects " +
                         std::to_string(output_dim_));
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidTarget("target contains a non-finite value");
  }
  if (kind_ == LossKind::CrossEntropy) {
    double total = 0.0;
    for (double v : y) {
      if (v < 0.0) throw InvalidTarget("cross entropy target has a negative entry");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidTarget("cross entropy target does not sum to 1");
  }
}

void LossCriterion::validate(std::span<const double> q, std::span<const double> y) const {
  if (q.size() != output_dim_) {
    throw DimensionError("output has dimension " + std::to_string(q.size()) + ", loss expects " +
                         std::to_string(output_dim_));
  }
  validate_target(y);
}

double LossCriterion::value(std::span<const double> q, std::span<const double> y) const {
  validate(q, y);
  return evaluate<double>(q, y);
}

std::vector<double> LossCriterion::gradient(std::span<const double> q, std::span<const double> y) const {
  validate(q, y);
  std::vector<double> g(q.size());
  switch (kind_) {
    case LossKind::Squared:
      for (std::size_t k = 0; k < q.size(); ++k) g[k] = 2.0 * (q[k] - y[k]);
      break;
    case LossKind::SquaredMargin:
      g[0] = -2.0 * y[0] * (1.0 - y[0] * q[0]);
      break;
    case LossKind::SmoothedHinge: {
      const double slack = std::max(0.0, 1.0 - y[0] * q[0]);
      g[0] = -static_cast<double>(power_) * y[0] * ad::powi(slack, power_ - 1);
      break;
    }
    case LossKind::CrossEntropy: {
      double shift = q[0];
      for (double v : q) shift = std::max(shift, v);
      double sum = 0.0;
      for (double v : q) sum += std::exp(v - shift);
      double mass = 0.0;
      for (double v : y) mass += v;
      for (std::size_t k = 0; k < q.size(); ++k) g[k] = mass * std::exp(q[k] - shift) / sum - y[k];
      break;
    }
  }
  return g;
}

}  // namespace auxlab
