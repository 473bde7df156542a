#pragma once

// The auxiliary-neuron construction: one neuron g_k = a_k exp(w_k . x + b_k)
// added to every output unit of f, and the objectives
//
//   L(theta)           = red_i l(f(x_i; theta), y_i)
//   L~(theta, a, b, W) = red_i l(f(x_i; theta) + g(x_i; a, b, W), y_i) + lambda ||a||^2
//
// where red is the mean (default) or the plain sum over samples.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "auxlab/criteria.hpp"
#include "auxlab/dataset.hpp"
#include "auxlab/diff.hpp"
#include "auxlab/models.hpp"
#include "auxlab/param_vector.hpp"
#include "auxlab/verdict.hpp"

namespace auxlab {

inline constexpr double kDefaultLambda = 0.01;

enum class Reduction { Mean, Sum };

std::string to_string(Reduction r);
Reduction reduction_from_string(const std::string& name);

// Added-neuron parameters. W is d_x x d_y with column k = w_k.
struct AuxParams {
  std::vector<double> a;
  std::vector<double> b;
  Eigen::MatrixXd W;
  double lambda = kDefaultLambda;

  AuxParams() = default;
  // Throws InvalidArgument for lambda <= 0, DimensionError on shape mismatch.
  AuxParams(std::vector<double> a, std::vector<double> b, Eigen::MatrixXd W, double lambda);

  static AuxParams zeros(std::size_t input_dim, std::size_t output_dim, double lambda = kDefaultLambda);

  std::size_t input_dim() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t output_dim() const { return a.size(); }
};

// g(x; a, b, W)_k = a_k exp(w_k . x + b_k). OverflowError past the clamp.
std::vector<double> g_eval(const AuxParams& aux, std::span<const double> x);

// Generic single-sample g (S = double or ad::Var), writing into out.
template <class S>
void g_eval(std::span<const S> a, std::span<const S> b, std::span<const S> w_colmajor,
            std::span<const double> x, std::span<S> out) {
  const std::size_t dx = x.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    S z = b[k];
    for (std::size_t j = 0; j < dx; ++j) z += w_colmajor[k * dx + j] * S(x[j]);
    out[k] = a[k] * ad::exp(z);
  }
}

// Segments "a" (d_y), "b" (d_y), "W" (d_x * d_y, column-major).
Layout aux_layout(std::size_t input_dim, std::size_t output_dim);
// "theta" followed by the aux segments.
Layout augmented_layout(const Model& model);

ParamVector pack_aux(const AuxParams& aux);
ParamVector pack_augmented(std::span<const double> theta, const AuxParams& aux);
// Reads the a/b/W segments of a packed vector (augmented or aux-only).
AuxParams unpack_aux(const ParamVector& packed, double lambda);

// Everything needed to build L / L~ for one training problem. Validates model,
// data, and targets against each other on construction.
class Problem {
 public:
  Problem(Model model, LossCriterion loss, Dataset data, Reduction reduction = Reduction::Mean,
          double lambda = kDefaultLambda);

  const Model& model() const { return model_; }
  const LossCriterion& loss() const { return loss_; }
  const Dataset& data() const { return data_; }
  Reduction reduction() const { return reduction_; }
  double lambda() const { return lambda_; }

  Layout augmented_layout() const { return auxlab::augmented_layout(model_); }
  Layout aux_layout() const { return auxlab::aux_layout(model_.input_dim(), model_.output_dim()); }

  Problem with_lambda(double lambda) const;
  Problem with_reduction(Reduction reduction) const;

  // Combination weight of each sample (1/m or 1) for a batch of `count` samples.
  double sample_weight(std::size_t count) const;

  bool operator==(const Problem&) const = default;

 private:
  Model model_;
  LossCriterion loss_;
  Dataset data_;
  Reduction reduction_;
  double lambda_;
};

// L over theta. A non-empty subset restricts the reduction to those samples.
GradientProgram original_objective(const Problem& problem, std::span<const std::size_t> subset = {});

// L~ over the packed (theta | a | b | W) vector.
GradientProgram augmented_objective(const Problem& problem, std::span<const std::size_t> subset = {});

// L~ restricted to (a | b | W) with theta held fixed.
GradientProgram augmented_objective_fixed_theta(const Problem& problem, std::span<const double> theta);

// f~(x) = f(x) at the probes: passes iff ||a|| <= 1e-8 and the largest
// deviation ||g(x)|| over the probes is <= 1e-6.
OracleVerdict vanish_check(std::span<const double> theta, const AuxParams& aux, const Model& model,
                           const std::vector<std::vector<double>>& probes);

}  // namespace auxlab
