#pragma once

// Reverse-mode differentiation over a per-call operation list, plus the
// GradientProgram carrier used for every objective in the library.
//
// Model and loss code is written once as a template over the scalar type and
// instantiated for `double` (plain evaluation) and `ad::Var` (recording).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "auxlab/param_vector.hpp"

namespace auxlab {

// Largest argument accepted by ad::exp before OverflowError is raised.
// Default 500. Process-wide; the CLI sets it from AUXLAB_CLAMP.
double exp_clamp();
void set_exp_clamp(double clamp);

namespace ad {

class Tape;

// Either a constant (no tape) or a handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const { return value_; }
  bool is_constant() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  std::int32_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(double value);
  std::vector<Var> variables(std::span<const double> values);

  // d(output)/d(inputs[i]) for every input.
  std::vector<double> gradient(const Var& output, std::span<const Var> inputs) const;

  std::size_t size() const { return nodes_.size(); }

  // Recording primitives. Constants fold: if no operand is on a tape the
  // result is a constant.
  Var unary(const Var& x, double value, double dx);
  static Var apply(const Var& x, double value, double dx);
  static Var apply(const Var& x, const Var& y, double value, double dx, double dy);

 private:
  struct Node {
    std::int32_t lhs;
    std::int32_t rhs;
    double dlhs;
    double drhs;
  };
  Var push(std::int32_t lhs, double dlhs, std::int32_t rhs, double drhs, double value);

  std::vector<Node> nodes_;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

inline Var operator+(const Var& x, const Var& y) { return Tape::apply(x, y, x.value() + y.value(), 1.0, 1.0); }
inline Var operator-(const Var& x, const Var& y) { return Tape::apply(x, y, x.value() - y.value(), 1.0, -1.0); }
inline Var operator*(const Var& x, const Var& y) {
  return Tape::apply(x, y, x.value() * y.value(), y.value(), x.value());
}
inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.value();
  return Tape::apply(x, y, x.value() * inv, inv, -x.value() * inv * inv);
}
inline Var operator-(const Var& x) { return Tape::apply(x, -x.value(), -1.0); }
inline Var& operator+=(Var& x, const Var& y) { return x = x + y; }
inline Var& operator-=(Var& x, const Var& y) { return x = x - y; }
inline Var& operator*=(Var& x, const Var& y) { return x = x * y; }

// Throws OverflowError when x > exp_clamp().
double exp(double x);
Var exp(const Var& x);

inline double log(double x) { return std::log(x); }
inline Var log(const Var& x) { return Tape::apply(x, std::log(x.value()), 1.0 / x.value()); }

inline double tanh(double x) { return std::tanh(x); }
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return Tape::apply(x, t, 1.0 - t * t);
}

// max(0, x); derivative taken as 0 at x = 0.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline Var relu(const Var& x) { return x.value() > 0.0 ? x : Var(0.0); }

inline double square(double x) { return x * x; }
inline Var square(const Var& x) { return Tape::apply(x, x.value() * x.value(), 2.0 * x.value()); }

// x^n for integer n >= 0.
double powi(double x, int n);
Var powi(const Var& x, int n);

}  // namespace ad

// A differentiable scalar objective over a flat parameter vector. Immutable
// after construction; evaluate/gradient are reentrant.
class GradientProgram {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using TapeFn = std::function<ad::Var(std::span<const ad::Var>)>;

  GradientProgram() = default;
  GradientProgram(std::size_t dimension, ValueFn value, TapeFn recorded);

  std::size_t dimension() const { return dimension_; }

  double evaluate(std::span<const double> p) const;
  double evaluate(const ParamVector& p) const { return evaluate(p.values()); }

  std::vector<double> gradient(std::span<const double> p) const;
  ParamVector gradient(const ParamVector& p) const;

  // Writes the gradient into `grad` and returns the value.
  double value_and_gradient(std::span<const double> p, std::span<double> grad) const;

 private:
  void check_dimension(std::size_t n) const;

  std::size_t dimension_ = 0;
  ValueFn value_;
  TapeFn recorded_;
};

// Builds a program from a generic callable `f(std::span<const S>) -> S` that
// accepts both S = double and S = ad::Var.
template <class F>
GradientProgram make_program(std::size_t dimension, F f) {
  return GradientProgram(
      dimension, [f](std::span<const double> p) { return f(p); },
      [f](std::span<const ad::Var> p) { return f(p); });
}

// alpha * first + beta * second.
GradientProgram linear_combination(double alpha, const GradientProgram& first, double beta,
                                   const GradientProgram& second);

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h.
std::vector<double> finite_diff_gradient(const GradientProgram& program, std::span<const double> p,
                                         double h);
ParamVector finite_diff_gradient(const GradientProgram& program, const ParamVector& p, double h);

}  // namespace auxlab
