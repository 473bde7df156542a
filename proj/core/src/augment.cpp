#include "auxlab/augment.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "auxlab/errors.hpp"

namespace auxlab {

std::string to_string(Reduction r) { return r == Reduction::Mean ? "mean" : "sum"; }

Reduction reduction_from_string(const std::string& name) {
  if (name == "mean") return Reduction::Mean;
  if (name == "sum") return Reduction::Sum;
  throw InvalidArgument("unknown reduction '" + name + "'");
}

AuxParams::AuxParams(std::vector<double> a_in, std::vector<double> b_in, Eigen::MatrixXd W_in, double lambda_in)
    : a(std::move(a_in)), b(std::move(b_in)), W(std::move(W_in)), lambda(lambda_in) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (b.size() != a.size() || static_cast<std::size_t>(W.cols()) != a.size()) {
    throw DimensionError("aux parameters need |a| = |b| = columns(W)");
  }
}

AuxParams AuxParams::zeros(std::size_t input_dim, std::size_t output_dim, double lambda) {
  return AuxParams(std::vector<double>(output_dim, 0.0), std::vector<double>(output_dim, 0.0),
                   Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(input_dim),
                                         static_cast<Eigen::Index>(output_dim)),
                   lambda);
}

std::vector<double> g_eval(const AuxParams& aux, std::span<const double> x) {
  if (x.size() != aux.input_dim()) {
    throw DimensionError("g expects inputs of dimension " + std::to_string(aux.input_dim()));
  }
  std::vector<double> out(aux.output_dim());
  g_eval<double>(aux.a, aux.b, std::span<const double>(aux.W.data(), static_cast<std::size_t>(aux.W.size())), x,
                 out);
  return out;
}

Layout aux_layout(std::size_t input_dim, std::size_t output_dim) {
  Layout layout;
  layout.add("a", output_dim).add("b", output_dim).add("W", input_dim * output_dim);
  return layout;
}

Layout augmented_layout(const Model& model) {
  Layout layout;
  layout.add("theta", model.parameter_count())
      .add("a", model.output_dim())
      .add("b", model.output_dim())
      .add("W", model.input_dim() * model.output_dim());
  return layout;
}

namespace {

void append(std::vector<double>& out, std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); }

std::span<const double> w_span(const AuxParams& aux) {
  return {aux.W.data(), static_cast<std::size_t>(aux.W.size())};
}

}  // namespace

ParamVector pack_aux(const AuxParams& aux) {
  std::vector<double> values;
  append(values, aux.a);
  append(values, aux.b);
  append(values, w_span(aux));
  return ParamVector(std::move(values), aux_layout(aux.input_dim(), aux.output_dim()));
}

ParamVector pack_augmented(std::span<const double> theta, const AuxParams& aux) {
  std::vector<double> values(theta.begin(), theta.end());
  append(values, aux.a);
  append(values, aux.b);
  append(values, w_span(aux));
  Layout layout;
  layout.add("theta", theta.size())
      .add("a", aux.output_dim())
      .add("b", aux.output_dim())
      .add("W", aux.input_dim() * aux.output_dim());
  return ParamVector(std::move(values), std::move(layout));
}

AuxParams unpack_aux(const ParamVector& packed, double lambda) {
  const auto a = packed.segment("a");
  const auto b = packed.segment("b");
  const auto w = packed.segment("W");
  const std::size_t dy = a.size();
  const std::size_t dx = dy == 0 ? 0 : w.size() / dy;
  Eigen::MatrixXd W(static_cast<Eigen::Index>(dx), static_cast<Eigen::Index>(dy));
  std::copy(w.begin(), w.end(), W.data());
  return AuxParams(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()), std::move(W),
                   lambda);
}

Problem::Problem(Model model, LossCriterion loss, Dataset data, Reduction reduction, double lambda)
    : model_(std::move(model)),
      loss_(std::move(loss)),
      data_(std::move(data)),
      reduction_(reduction),
      lambda_(lambda) {
  if (!(lambda_ > 0.0)) throw InvalidArgument("lambda must be positive");
  if (data_.input_dim() != model_.input_dim()) {
    throw DimensionError("dataset inputs have dimension " + std::to_string(data_.input_dim()) +
                         ", model expects " + std::to_string(model_.input_dim()));
  }
  if (model_.output_dim() != loss_.output_dim() || data_.output_dim() != loss_.output_dim()) {
    throw DimensionError("model, loss, and targets disagree on the output dimension");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) loss_.validate_target(data_.target(i));
}

Problem Problem::with_lambda(double lambda) const {
  return Problem(model_, loss_, data_, reduction_, lambda);
}

Problem Problem::with_reduction(Reduction reduction) const {
  return Problem(model_, loss_, data_, reduction, lambda_);
}

double Problem::sample_weight(std::size_t count) const {
  return reduction_ == Reduction::Mean ? 1.0 / static_cast<double>(count) : 1.0;
}

namespace {

std::vector<std::size_t> resolve_subset(const Problem& problem, std::span<const std::size_t> subset) {
  if (subset.empty()) {
    std::vector<std::size_t> all(problem.data().size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  for (std::size_t i : subset) {
    if (i >= problem.data().size()) throw InvalidArgument("sample index out of range");
  }
  return {subset.begin(), subset.end()};
}

struct Prepared {
  Problem problem;
  std::vector<std::size_t> samples;
  double weight;
};

template <class S>
S reduced_loss(const Prepared& prep, std::span<const S> theta, std::span<const S> a, std::span<const S> b,
               std::span<const S> w, bool augmented) {
  const Model& model = prep.problem.model();
  const LossCriterion& loss = prep.problem.loss();
  const Dataset& data = prep.problem.data();
  const std::size_t dy = model.output_dim();
  std::vector<S> out(dy);
  std::vector<S> g(dy);
  S total(0.0);
  for (std::size_t i : prep.samples) {
    const auto x = data.input(i);
    model.forward<S>(theta, x, out);
    if (augmented) {
      g_eval<S>(a, b, w, x, g);
      for (std::size_t k = 0; k < dy; ++k) out[k] += g[k];
    }
    total += loss.evaluate<S>(std::span<const S>(out), data.target(i));
  }
  return total * S(prep.weight);
}

template <class S>
S regularizer(double lambda, std::span<const S> a) {
  S acc(0.0);
  for (const S& v : a) acc += v * v;
  return S(lambda) * acc;
}

}  // namespace

GradientProgram original_objective(const Problem& problem, std::span<const std::size_t> subset) {
  auto samples = resolve_subset(problem, subset);
  const double weight = problem.sample_weight(samples.size());
  auto prep = std::make_shared<const Prepared>(Prepared{problem, std::move(samples), weight});
  const std::size_t dim = problem.model().parameter_count();
  return make_program(dim, [prep]<class S>(std::span<const S> theta) -> S {
    return reduced_loss<S>(*prep, theta, {}, {}, {}, false);
  });
}

GradientProgram augmented_objective(const Problem& problem, std::span<const std::size_t> subset) {
  auto samples = resolve_subset(problem, subset);
  const double weight = problem.sample_weight(samples.size());
  auto prep = std::make_shared<const Prepared>(Prepared{problem, std::move(samples), weight});
  const std::size_t dt = problem.model().parameter_count();
  const std::size_t dy = problem.model().output_dim();
  const std::size_t dx = problem.model().input_dim();
  const double lambda = problem.lambda();
  return make_program(dt + 2 * dy + dx * dy, [prep, dt, dy, dx, lambda]<class S>(std::span<const S> p) -> S {
    const auto theta = p.subspan(0, dt);
    const auto a = p.subspan(dt, dy);
    const auto b = p.subspan(dt + dy, dy);
    const auto w = p.subspan(dt + 2 * dy, dx * dy);
    return reduced_loss<S>(*prep, theta, a, b, w, true) + regularizer<S>(lambda, a);
  });
}

GradientProgram augmented_objective_fixed_theta(const Problem& problem, std::span<const double> theta) {
  problem.model().check_dimensions(theta.size(), problem.model().input_dim());
  auto prep = std::make_shared<const Prepared>(
      Prepared{problem, resolve_subset(problem, {}), problem.sample_weight(problem.data().size())});
  auto fixed = std::make_shared<const std::vector<double>>(theta.begin(), theta.end());
  const std::size_t dy = problem.model().output_dim();
  const std::size_t dx = problem.model().input_dim();
  const double lambda = problem.lambda();
  return make_program(2 * dy + dx * dy, [prep, fixed, dy, dx, lambda]<class S>(std::span<const S> p) -> S {
    const std::vector<S> theta(fixed->begin(), fixed->end());
    const auto a = p.subspan(0, dy);
    const auto b = p.subspan(dy, dy);
    const auto w = p.subspan(2 * dy, dx * dy);
    return reduced_loss<S>(*prep, std::span<const S>(theta), a, b, w, true) + regularizer<S>(lambda, a);
  });
}

OracleVerdict vanish_check(std::span<const double> theta, const AuxParams& aux, const Model& model,
                           const std::vector<std::vector<double>>& probes) {
  OracleVerdict v;
  v.check = "vanish";
  const double a_norm = norm2(aux.a);
  double max_dev = 0.0;
  double bound = 0.0;
  for (const auto& x : probes) {
    const std::vector<double> f = model.forward(theta, x);
    std::vector<double> ft = f;
    const std::vector<double> g = g_eval(aux, x);
    double exp_norm = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      ft[k] += g[k];
      double z = aux.b[k];
      for (std::size_t j = 0; j < x.size(); ++j) z += aux.W(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * x[j];
      exp_norm = std::max(exp_norm, std::exp(z));
    }
    double dev = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) dev += (ft[k] - f[k]) * (ft[k] - f[k]);
    max_dev = std::max(max_dev, std::sqrt(dev));
    bound = std::max(bound, a_norm * exp_norm * std::sqrt(static_cast<double>(g.size())));
  }
  const bool within_bound = max_dev <= bound * (1.0 + 1e-12) + 1e-300;
  v.pass = a_norm <= 1e-8 && max_dev <= 1e-6 && within_bound;
  v.add("max_deviation", max_dev, 1e-6);
  v.add("a_norm", a_norm, 1e-8);
  v.add("deviation_bound", bound);
  if (!v.pass) v.notes = "added neurons still contribute to the network output";
  return v;
}

}  // namespace auxlab
