#include "auxlab/diff.hpp"

#include <atomic>
#include <string>

#include "auxlab/errors.hpp"

namespace auxlab {

namespace {
std::atomic<double> g_exp_clamp{500.0};
}  // namespace

double exp_clamp() { return g_exp_clamp.load(std::memory_order_relaxed); }

void set_exp_clamp(double clamp) {
  if (!(clamp > 0.0)) throw InvalidArgument("exponent clamp must be positive");
  g_exp_clamp.store(clamp, std::memory_order_relaxed);
}

namespace ad {

Var Tape::push(std::int32_t lhs, double dlhs, std::int32_t rhs, double drhs, double value) {
  nodes_.push_back(Node{lhs, rhs, dlhs, drhs});
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), value);
}

Var Tape::variable(double value) { return push(-1, 0.0, -1, 0.0, value); }

std::vector<Var> Tape::variables(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

Var Tape::unary(const Var& x, double value, double dx) { return push(x.index_, dx, -1, 0.0, value); }

Var Tape::apply(const Var& x, double value, double dx) {
  if (x.is_constant()) return Var(value);
  return x.tape_->unary(x, value, dx);
}

Var Tape::apply(const Var& x, const Var& y, double value, double dx, double dy) {
  if (x.is_constant()) return apply(y, value, dy);
  if (y.is_constant()) return apply(x, value, dx);
  if (x.tape_ != y.tape_) throw InvalidArgument("operands recorded on different tapes");
  return x.tape_->push(x.index_, dx, y.index_, dy, value);
}

std::vector<double> Tape::gradient(const Var& output, std::span<const Var> inputs) const {
  std::vector<double> grad(inputs.size(), 0.0);
  if (output.is_constant()) return grad;
  if (output.tape_ != this) throw InvalidArgument("output recorded on a different tape");

  std::vector<double> adjoint(static_cast<std::size_t>(output.index_) + 1, 0.0);
  adjoint[static_cast<std::size_t>(output.index_)] = 1.0;
  for (std::int32_t i = output.index_; i >= 0; --i) {
    const double g = adjoint[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.lhs >= 0) adjoint[static_cast<std::size_t>(n.lhs)] += g * n.dlhs;
    if (n.rhs >= 0) adjoint[static_cast<std::size_t>(n.rhs)] += g * n.drhs;
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Var& in = inputs[k];
    if (in.is_constant()) continue;
    if (in.tape_ != this) throw InvalidArgument("input recorded on a different tape");
    if (in.index_ <= output.index_) grad[k] = adjoint[static_cast<std::size_t>(in.index_)];
  }
  return grad;
}

double exp(double x) {
  if (x > exp_clamp()) {
    throw OverflowError("exponent argument " + std::to_string(x) + " exceeds clamp " +
                        std::to_string(exp_clamp()));
  }
  return std::exp(x);
}

Var exp(const Var& x) {
  const double e = exp(x.value());
  return Tape::apply(x, e, e);
}

double powi(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

Var powi(const Var& x, int n) {
  if (n == 0) return Var(1.0);
  const double lower = powi(x.value(), n - 1);
  return Tape::apply(x, lower * x.value(), static_cast<double>(n) * lower);
}

}  // namespace ad

GradientProgram::GradientProgram(std::size_t dimension, ValueFn value, TapeFn recorded)
    : dimension_(dimension), value_(std::move(value)), recorded_(std::move(recorded)) {}

void GradientProgram::check_dimension(std::size_t n) const {
  if (n != dimension_) {
    throw DimensionError("program expects " + std::to_string(dimension_) + " parameters, got " +
                         std::to_string(n));
  }
}

double GradientProgram::evaluate(std::span<const double> p) const {
  check_dimension(p.size());
  return value_(p);
}

std::vector<double> GradientProgram::gradient(std::span<const double> p) const {
  std::vector<double> grad(p.size());
  value_and_gradient(p, grad);
  return grad;
}

ParamVector GradientProgram::gradient(const ParamVector& p) const {
  return p.with_values(gradient(p.values()));
}

double GradientProgram::value_and_gradient(std::span<const double> p, std::span<double> grad) const {
  check_dimension(p.size());
  if (grad.size() != p.size()) throw DimensionError("gradient buffer size mismatch");
  ad::Tape tape;
  const std::vector<ad::Var> inputs = tape.variables(p);
  const ad::Var out = recorded_(inputs);
  const std::vector<double> g = tape.gradient(out, inputs);
  std::copy(g.begin(), g.end(), grad.begin());
  return out.value();
}

GradientProgram linear_combination(double alpha, const GradientProgram& first, double beta,
                                   const GradientProgram& second) {
  if (first.dimension() != second.dimension()) {
    throw DimensionError("cannot combine programs of different dimension");
  }
  // Gradients add linearly, so the combined program reuses each operand's
  // own reverse pass rather than re-recording.
  const std::size_t dim = first.dimension();
  return GradientProgram(
      dim,
      [=](std::span<const double> p) { return alpha * first.evaluate(p) + beta * second.evaluate(p); },
      [=](std::span<const ad::Var> p) {
        std::vector<double> x(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) x[i] = p[i].value();
        std::vector<double> g1(dim), g2(dim);
        const double v = alpha * first.value_and_gradient(x, g1) + beta * second.value_and_gradient(x, g2);
        // Fold the combined gradient into the caller's tape as a linear node chain.
        ad::Var out(v);
        for (std::size_t i = 0; i < dim; ++i) {
          const double gi = alpha * g1[i] + beta * g2[i];
          out = ad::Tape::apply(out, p[i], v, 1.0, gi);
        }
        return out;
      });
}

std::vector<double> finite_diff_gradient(const GradientProgram& program, std::span<const double> p,
                                         double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite difference step must be positive");
  std::vector<double> x(p.begin(), p.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = program.evaluate(x);
    x[i] = orig - h;
    const double down = program.evaluate(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

ParamVector finite_diff_gradient(const GradientProgram& program, const ParamVector& p, double h) {
  return p.with_values(finite_diff_gradient(program, p.values(), h));
}

}  // namespace auxlab
