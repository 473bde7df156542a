#pragma once

// Seeded generators for property tests. Every case is reproducible from
// (seed, case index); failures report both through SCOPED_TRACE.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <auxlab/augment.hpp>
#include <auxlab/random.hpp>

namespace auxlab::gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }
  double uniform(double lo, double hi) { return rng_.uniform(lo, hi); }
  std::size_t size(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng_.below(hi - lo + 1)); }
  bool coin() { return rng_.uniform() < 0.5; }

  std::vector<double> vec(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng_.uniform(lo, hi);
    return v;
  }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(rng_.below(items.size()))];
  }

  // Target admissible for the criterion: +-1 labels for margin losses, a
  // probability vector for cross entropy, anything for squared.
  std::vector<double> target(const LossCriterion& loss, std::size_t dy) {
    switch (loss.kind()) {
      case LossKind::SquaredMargin:
      case LossKind::SmoothedHinge:
        return {coin() ? 1.0 : -1.0};
      case LossKind::CrossEntropy: {
        std::vector<double> p = vec(dy, 0.05, 1.0);
        double s = 0.0;
        for (double v : p) s += v;
        for (double& v : p) v /= s;
        return p;
      }
      case LossKind::Squared:
        break;
    }
    return vec(dy, -2.0, 2.0);
  }

  Dataset dataset(std::size_t m, std::size_t dx, std::size_t dy, const LossCriterion& loss, double spread = 1.0) {
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> ys;
    for (std::size_t i = 0; i < m; ++i) {
      xs.push_back(vec(dx, -spread, spread));
      ys.push_back(target(loss, dy));
    }
    return Dataset(std::move(xs), std::move(ys));
  }

  // Random model with its matching losses.
  Model model() {
    switch (rng_.below(6)) {
      case 0: return Model::mlp({size(1, 3), size(1, 4), 1}, pick(std::vector{Activation::Tanh, Activation::Identity}));
      case 1: return Model::mlp({size(1, 2), size(2, 3), size(2, 3)}, Activation::Tanh);
      case 2: return Model::bump_curve(size(1, 2), coin());
      case 3: return Model::curve_offset();
      case 4: return Model::constant(size(1, 3), size(1, 3));
      default: return Model::mlp({1, 1}, Activation::Identity);
    }
  }

  LossCriterion loss_for(std::size_t dy) {
    if (dy == 1) {
      switch (rng_.below(4)) {
        case 0: return LossCriterion::squared(1);
        case 1: return LossCriterion::squared_margin();
        case 2: return LossCriterion::smoothed_hinge(static_cast<int>(size(2, 4)));
        default: return LossCriterion::cross_entropy(1);
      }
    }
    return coin() ? LossCriterion::squared(dy) : LossCriterion::cross_entropy(dy);
  }

  Problem problem(std::size_t max_samples = 4) {
    Model m = model();
    LossCriterion l = loss_for(m.output_dim());
    Dataset d = dataset(size(1, max_samples), m.input_dim(), m.output_dim(), l);
    const Reduction r = coin() ? Reduction::Mean : Reduction::Sum;
    return Problem(std::move(m), std::move(l), std::move(d), r, pick(std::vector{1e-3, 1e-2, 1e-1, 1.0}));
  }

  std::vector<double> theta(const Model& model) {
    std::vector<double> t = model.initial_parameters(rng_);
    for (double& v : t) v += rng_.uniform(-0.3, 0.3);
    return t;
  }

  // Packed (theta | a | b | W) with aux entries in [-r, r].
  std::vector<double> augmented_point(const Problem& problem, double r = 1.0) {
    std::vector<double> p = theta(problem.model());
    while (p.size() < problem.augmented_layout().size()) p.push_back(rng_.uniform(-r, r));
    return p;
  }

 private:
  Rng rng_;
};

inline std::string trace(std::uint64_t seed, std::size_t index) {
  return "seed " + std::to_string(seed) + " case " + std::to_string(index);
}

}  // namespace auxlab::gen
