#include "auxlab/models.hpp"

#include <cmath>

#include "auxlab/diff.hpp"
#include "auxlab/errors.hpp"

namespace auxlab {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
    case Activation::Identity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

GaussianCurve GaussianCurve::bump() {
  return GaussianCurve{5.0, {0.2, 0.8}, {-0.3, -0.7}, {16.0, 32.0}, 0.5};
}

template <class S>
S GaussianCurve::operator()(const S& t) const {
  S acc(offset);
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const S d = t - S(centers[j]);
    acc += S(weights[j]) * ad::exp(S(-widths[j]) * d * d);
  }
  return S(scale) * acc;
}

double GaussianCurve::derivative(double t) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = t - centers[j];
    acc += weights[j] * (-2.0 * widths[j] * d) * std::exp(-widths[j] * d * d);
  }
  return scale * acc;
}

template double GaussianCurve::operator()(const double&) const;
template ad::Var GaussianCurve::operator()(const ad::Var&) const;

namespace {

void check_curve(const GaussianCurve& c) {
  if (c.centers.size() != c.weights.size() || c.centers.size() != c.widths.size()) {
    throw InvalidArgument("gaussian curve needs matching centers/weights/widths");
  }
}

template <class S>
S activate(Activation act, const S& z) {
  switch (act) {
    case Activation::Tanh:
      return ad::tanh(z);
    case Activation::Relu:
      return ad::relu(z);
    case Activation::Identity:
      return z;
  }
  return z;
}

template <class S>
void mlp_forward(const MlpSpec& spec, std::span<const S> theta, std::span<const double> x, std::span<S> out) {
  std::vector<S> current(x.begin(), x.end());
  std::size_t offset = 0;
  const std::size_t layers = spec.widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = spec.widths[l];
    const std::size_t n_out = spec.widths[l + 1];
    std::vector<S> next(n_out);
    const std::size_t bias = offset + n_out * in;
    for (std::size_t r = 0; r < n_out; ++r) {
      S z = theta[bias + r];
      for (std::size_t c = 0; c < in; ++c) z += theta[offset + r * in + c] * current[c];
      next[r] = (l + 1 < layers) ? activate(spec.activation, z) : z;
    }
    offset = bias + n_out;
    current = std::move(next);
  }
  std::copy(current.begin(), current.end(), out.begin());
}

}  // namespace

Model::Model(Kind kind) : kind_(std::move(kind)) {
  if (const auto* m = std::get_if<MlpSpec>(&kind_)) {
    if (m->widths.size() < 2) throw InvalidArgument("mlp needs at least input and output widths");
    for (std::size_t w : m->widths) {
      if (w == 0) throw InvalidArgument("mlp widths must be positive");
    }
  } else if (const auto* c = std::get_if<CurveSpec>(&kind_)) {
    check_curve(c->curve);
    if (c->input_slope && c->input_dim == 0) throw InvalidArgument("slope curve needs d_x >= 1");
  } else if (const auto* o = std::get_if<CurveOffsetSpec>(&kind_)) {
    check_curve(o->curve);
  } else if (const auto* k = std::get_if<ConstantSpec>(&kind_)) {
    if (k->output_dim == 0) throw InvalidArgument("constant model needs d_y >= 1");
  }
}

Model Model::mlp(std::vector<std::size_t> widths, Activation activation) {
  return Model(MlpSpec{std::move(widths), activation});
}
Model Model::bump_curve(std::size_t input_dim, bool input_slope) {
  return Model(CurveSpec{GaussianCurve::bump(), input_dim, input_slope});
}
Model Model::curve(GaussianCurve curve, std::size_t input_dim, bool input_slope) {
  return Model(CurveSpec{std::move(curve), input_dim, input_slope});
}
Model Model::curve_offset(GaussianCurve curve) { return Model(CurveOffsetSpec{std::move(curve)}); }
Model Model::constant(std::size_t input_dim, std::size_t output_dim) {
  return Model(ConstantSpec{input_dim, output_dim});
}

std::size_t Model::input_dim() const {
  return std::visit(
      [](const auto& k) -> std::size_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, MlpSpec>) return k.widths.front();
        if constexpr (std::is_same_v<T, CurveSpec>) return k.input_dim;
        if constexpr (std::is_same_v<T, CurveOffsetSpec>) return 1;
        if constexpr (std::is_same_v<T, ConstantSpec>) return k.input_dim;
      },
      kind_);
}

std::size_t Model::output_dim() const {
  if (const auto* m = std::get_if<MlpSpec>(&kind_)) return m->widths.back();
  if (const auto* k = std::get_if<ConstantSpec>(&kind_)) return k->output_dim;
  return 1;
}

std::size_t Model::parameter_count() const {
  if (const auto* m = std::get_if<MlpSpec>(&kind_)) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < m->widths.size(); ++l) n += m->widths[l + 1] * (m->widths[l] + 1);
    return n;
  }
  if (const auto* c = std::get_if<CurveSpec>(&kind_)) return c->input_slope ? 2 : 1;
  if (std::holds_alternative<CurveOffsetSpec>(kind_)) return 2;
  return std::get<ConstantSpec>(kind_).output_dim;
}

std::string Model::name() const {
  if (std::holds_alternative<MlpSpec>(kind_)) return "mlp";
  if (const auto* c = std::get_if<CurveSpec>(&kind_)) {
    if (c->curve == GaussianCurve::bump()) return c->input_slope ? "bump_curve_slope" : "bump_curve";
    return c->input_slope ? "gaussian_curve_slope" : "gaussian_curve";
  }
  if (std::holds_alternative<CurveOffsetSpec>(kind_)) return "curve_offset";
  return "constant";
}

void Model::check_dimensions(std::size_t theta_size, std::size_t x_size) const {
  if (theta_size != parameter_count()) {
    throw DimensionError("model expects " + std::to_string(parameter_count()) + " parameters, got " +
                         std::to_string(theta_size));
  }
  if (x_size != input_dim()) {
    throw DimensionError("model expects inputs of dimension " + std::to_string(input_dim()) + ", got " +
                         std::to_string(x_size));
  }
}

template <class S>
void Model::forward(std::span<const S> theta, std::span<const double> x, std::span<S> out) const {
  if (const auto* m = std::get_if<MlpSpec>(&kind_)) {
    mlp_forward(*m, theta, x, out);
  } else if (const auto* c = std::get_if<CurveSpec>(&kind_)) {
    S position = theta[0];
    if (c->input_slope) position += theta[1] * S(x[0]);
    out[0] = c->curve(position);
  } else if (const auto* o = std::get_if<CurveOffsetSpec>(&kind_)) {
    out[0] = theta[0] + o->curve(theta[1]) * S(x[0]);
  } else {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = theta[k];
  }
}

template void Model::forward<double>(std::span<const double>, std::span<const double>, std::span<double>) const;
template void Model::forward<ad::Var>(std::span<const ad::Var>, std::span<const double>,
                                      std::span<ad::Var>) const;

std::vector<double> Model::forward(std::span<const double> theta, std::span<const double> x) const {
  check_dimensions(theta.size(), x.size());
  std::vector<double> out(output_dim());
  forward<double>(theta, x, out);
  return out;
}

Eigen::MatrixXd Model::parameter_jacobian(std::span<const double> theta, std::span<const double> x) const {
  check_dimensions(theta.size(), x.size());
  const std::size_t dy = output_dim();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(dy), static_cast<Eigen::Index>(theta.size()));
  ad::Tape tape;
  const std::vector<ad::Var> params = tape.variables(theta);
  std::vector<ad::Var> out(dy);
  forward<ad::Var>(params, x, out);
  for (std::size_t k = 0; k < dy; ++k) {
    const std::vector<double> row = tape.gradient(out[k], params);
    for (std::size_t j = 0; j < row.size(); ++j) {
      jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return jac;
}

std::vector<double> Model::initial_parameters(Rng& rng) const {
  std::vector<double> theta(parameter_count(), 0.0);
  if (const auto* m = std::get_if<MlpSpec>(&kind_)) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < m->widths.size(); ++l) {
      const std::size_t in = m->widths[l];
      const std::size_t out = m->widths[l + 1];
      const double r = std::sqrt(6.0 / static_cast<double>(in + out));
      for (std::size_t i = 0; i < in * out; ++i) theta[offset + i] = rng.uniform(-r, r);
      offset += in * out + out;
    }
  } else if (const auto* c = std::get_if<CurveSpec>(&kind_)) {
    theta[0] = rng.uniform();
    if (c->input_slope) theta[1] = rng.uniform(-1.0, 1.0);
  } else if (std::holds_alternative<CurveOffsetSpec>(kind_)) {
    theta[0] = rng.uniform(-1.0, 1.0);
    theta[1] = rng.uniform();
  } else {
    for (double& t : theta) t = rng.uniform(-1.0, 1.0);
  }
  return theta;
}

}  // namespace auxlab
