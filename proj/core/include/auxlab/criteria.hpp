#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "auxlab/diff.hpp"
#include "auxlab/errors.hpp"

namespace auxlab {

enum class LossKind { Squared, SquaredMargin, CrossEntropy, SmoothedHinge };

// Which standing assumptions on the loss this criterion satisfies:
//  assumption1 - q -> l(q, y) is differentiable and convex;
//  assumption2 - every stationary point of q -> l(q, y) is a global minimum.
struct AssumptionFlags {
  bool assumption1 = false;
  bool assumption2 = false;

  bool operator==(const AssumptionFlags&) const = default;
};

// Loss l(q, y) on a single network output q in R^{d_y}.
//   Squared        ||q - y||^2
//   SquaredMargin  (1 - y q)^2                        (d_y = 1)
//   CrossEntropy   -sum_k y_k log softmax(q)_k        (y a probability vector)
//   SmoothedHinge  max(0, 1 - y q)^p, p >= 2          (d_y = 1)
class LossCriterion {
 public:
  static LossCriterion squared(std::size_t output_dim = 1);
  static LossCriterion squared_margin();
  static LossCriterion cross_entropy(std::size_t output_dim);
  static LossCriterion smoothed_hinge(int power = 3);

  LossKind kind() const { return kind_; }
  int power() const { return power_; }
  std::size_t output_dim() const { return output_dim_; }
  std::string name() const;
  AssumptionFlags assumptions() const { return flags_; }

  // Throws DimensionError / InvalidTarget.
  void validate(std::span<const double> q, std::span<const double> y) const;
  void validate_target(std::span<const double> y) const;

  double value(std::span<const double> q, std::span<const double> y) const;
  std::vector<double> gradient(std::span<const double> q, std::span<const double> y) const;

  // Unchecked generic form used inside objectives (S = double or ad::Var).
  template <class S>
  S evaluate(std::span<const S> q, std::span<const double> y) const;

  bool operator==(const LossCriterion&) const = default;

 private:
  LossCriterion(LossKind kind, std::size_t output_dim, int power);

  LossKind kind_ = LossKind::Squared;
  std::size_t output_dim_ = 1;
  int power_ = 2;
  AssumptionFlags flags_;
};

template <class S>
S LossCriterion::evaluate(std::span<const S> q, std::span<const double> y) const {
  switch (kind_) {
    case LossKind::Squared: {
      S acc(0.0);
      for (std::size_t k = 0; k < q.size(); ++k) acc += ad::square(q[k] - S(y[k]));
      return acc;
    }
    case LossKind::SquaredMargin:
      return ad::square(S(1.0) - S(y[0]) * q[0]);
    case LossKind::SmoothedHinge:
      return ad::powi(ad::relu(S(1.0) - S(y[0]) * q[0]), power_);
    case LossKind::CrossEntropy: {
      // Shift by the (constant) max so every exponent is <= 0.
      double shift = ad::value_of(q[0]);
      for (const S& v : q) shift = std::max(shift, ad::value_of(v));
      S sum(0.0);
      for (const S& v : q) sum += ad::exp(v - S(shift));
      const S log_norm = ad::log(sum) + S(shift);
      S acc(0.0);
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (y[k] != 0.0) acc += S(y[k]) * (log_norm - q[k]);
      }
      return acc;
    }
  }
  return S(0.0);
}

}  // namespace auxlab
