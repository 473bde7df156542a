#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "auxlab/param_vector.hpp"
#include "auxlab/random.hpp"

namespace auxlab {

enum class Activation { Tanh, Relu, Identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

// t -> scale * (sum_j weights_j * exp(-widths_j (t - centers_j)^2) + offset)
struct GaussianCurve {
  double scale = 1.0;
  std::vector<double> centers;
  std::vector<double> weights;
  std::vector<double> widths;
  double offset = 0.0;

  // 5(-0.3 e^{-16(t-0.2)^2} - 0.7 e^{-32(t-0.8)^2} + 0.5): suboptimal basin
  // near t = 0.2, global basin near t = 0.8.
  static GaussianCurve bump();

  template <class S>
  S operator()(const S& t) const;

  double derivative(double t) const;

  bool operator==(const GaussianCurve&) const = default;
};

// Fully connected network; widths = {d_x, hidden..., d_y}. The activation is
// applied after every layer except the last. Parameters per layer: the
// (out x in) weight matrix row-major, then the out-dimensional bias.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::Tanh;

  bool operator==(const MlpSpec&) const = default;
};

// f(x; t) = curve(t), or f(x; t, t') = curve(t + t' x_1) with input_slope.
// With x_1 = 0 the slope parameter never affects the output.
struct CurveSpec {
  GaussianCurve curve;
  std::size_t input_dim = 1;
  bool input_slope = false;

  bool operator==(const CurveSpec&) const = default;
};

// f(x; c, t) = c + curve(t) x_1, d_x = 1.
struct CurveOffsetSpec {
  GaussianCurve curve;

  bool operator==(const CurveOffsetSpec&) const = default;
};

// f(x; theta) = theta, ignoring x. Used to pin network outputs to constants.
struct ConstantSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;

  bool operator==(const ConstantSpec&) const = default;
};

// The original network f(x; theta).
class Model {
 public:
  using Kind = std::variant<MlpSpec, CurveSpec, CurveOffsetSpec, ConstantSpec>;

  explicit Model(Kind kind);

  static Model mlp(std::vector<std::size_t> widths, Activation activation);
  static Model bump_curve(std::size_t input_dim = 1, bool input_slope = false);
  static Model curve(GaussianCurve curve, std::size_t input_dim = 1, bool input_slope = false);
  static Model curve_offset(GaussianCurve curve = GaussianCurve::bump());
  static Model constant(std::size_t input_dim, std::size_t output_dim);

  const Kind& kind() const { return kind_; }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  std::string name() const;

  // Unchecked generic forward pass (S = double or ad::Var).
  template <class S>
  void forward(std::span<const S> theta, std::span<const double> x, std::span<S> out) const;

  std::vector<double> forward(std::span<const double> theta, std::span<const double> x) const;
  std::vector<double> forward(const ParamVector& theta, std::span<const double> x) const {
    return forward(theta.values(), x);
  }

  // d_y x d_theta matrix of output gradients.
  Eigen::MatrixXd parameter_jacobian(std::span<const double> theta, std::span<const double> x) const;
  Eigen::MatrixXd parameter_jacobian(const ParamVector& theta, std::span<const double> x) const {
    return parameter_jacobian(theta.values(), x);
  }

  // MLP weights: uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)), zero
  // biases. Curve position: uniform in [0, 1]; slope and offsets: uniform in
  // [-1, 1]. Constant outputs: uniform in [-1, 1].
  std::vector<double> initial_parameters(Rng& rng) const;

  void check_dimensions(std::size_t theta_size, std::size_t x_size) const;

  bool operator==(const Model&) const = default;

 private:
  Kind kind_;
};

}  // namespace auxlab
