#include "auxlab/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "auxlab/errors.hpp"
#include "auxlab/format.hpp"
#include "auxlab/optimize.hpp"

namespace auxlab {

namespace {

constexpr double kLambda = 0.01;

AuxParams scalar_aux(double a, double b, double w, double lambda = kLambda) {
  Eigen::MatrixXd W(1, 1);
  W(0, 0) = w;
  return AuxParams({a}, {b}, std::move(W), lambda);
}

// f(x) = w x + c through a single identity layer.
Model affine() { return Model::mlp({1, 1}, Activation::Identity); }

Problem sum_problem(std::vector<double> xs, std::vector<double> ys, const LossCriterion& loss) {
  std::vector<std::vector<double>> in;
  std::vector<std::vector<double>> out;
  for (double x : xs) in.push_back({x});
  for (double y : ys) out.push_back({y});
  return Problem(affine(), loss, Dataset(std::move(in), std::move(out)), Reduction::Sum, kLambda);
}

ExampleFixture squared_one_sample() {
  ExampleFixture f{"squared-one-sample",
                   "one sample, f(x1) = 2, y1 = 1, squared loss; no local minimum, L~ -> 0 along the path",
                   sum_problem({0.0}, {1.0}, LossCriterion::squared()),
                   {0.0, 2.0},
                   {},
                   {},
                   0.0,
                   {},
                   {}};
  f.path = [](double eps) { return scalar_aux(-std::exp(-1.0 / eps), 1.0 / eps, 0.0); };
  f.closed_form = [](double eps) { return kLambda * std::exp(-2.0 / eps); };
  return f;
}

ExampleFixture squared_two_sample() {
  ExampleFixture f{"squared-two-sample",
                   "x = (0, 1), f = 0, y = (1, -1), squared loss; L~ -> 1 along the path",
                   sum_problem({0.0, 1.0}, {1.0, -1.0}, LossCriterion::squared()),
                   {0.0, 0.0},
                   {},
                   {},
                   1.0,
                   {},
                   {}};
  const double dist2 = 1.0;
  f.path = [](double eps) {
    const double w = -(1.0 - 0.0) / eps;
    return scalar_aux(std::exp(-1.0 / eps), 1.0 / eps - w * 0.0, w);
  };
  f.closed_form = [dist2](double eps) {
    const double t = std::exp(-dist2 / eps) + 1.0;
    return t * t + kLambda * std::exp(-2.0 / eps);
  };
  return f;
}

ExampleFixture squared_duplicate_input() {
  ExampleFixture f{"squared-duplicate-input",
                   "x1 = x2 = 0, f = 0, y = (1, -1), squared loss; a = 0 is a local minimum with L~ = 2",
                   sum_problem({0.0, 0.0}, {1.0, -1.0}, LossCriterion::squared()),
                   {0.0, 0.0},
                   {},
                   {},
                   2.0,
                   {},
                   {}};
  f.path = [](double eps) { return scalar_aux(std::exp(-1.0 / eps), 0.0, 0.0); };
  f.closed_form = [](double eps) { return 2.0 + (2.0 + kLambda) * std::exp(-2.0 / eps); };
  return f;
}

ExampleFixture hinge_one_sample() {
  ExampleFixture f{"hinge-one-sample",
                   "one sample, f(x1) = -1, y1 = 1, cubed hinge; L~ -> 0 along the sign-corrected path",
                   sum_problem({0.0}, {1.0}, LossCriterion::smoothed_hinge(3)),
                   {0.0, -1.0},
                   {},
                   {},
                   0.0,
                   {},
                   {"printed path a = -2exp(-1/eps) gives loss 64; the path uses a = +2exp(-1/eps)",
                    "printed regularizer lambda*exp(-2/eps) omits a^2 = 4exp(-2/eps); the path value is "
                    "4*lambda*exp(-2/eps)"}};
  f.path = [](double eps) { return scalar_aux(2.0 * std::exp(-1.0 / eps), 1.0 / eps, 0.0); };
  f.closed_form = [](double eps) { return 4.0 * kLambda * std::exp(-2.0 / eps); };
  f.printed_path = [](double eps) { return scalar_aux(-2.0 * std::exp(-1.0 / eps), 1.0 / eps, 0.0); };
  return f;
}

ExampleFixture hinge_two_sample() {
  ExampleFixture f{"hinge-two-sample",
                   "x = (0, 1), f = (-1, 1), y = (1, -1), cubed hinge; L~ -> 8 along the path",
                   sum_problem({0.0, 1.0}, {1.0, -1.0}, LossCriterion::smoothed_hinge(3)),
                   {2.0, -1.0},
                   {},
                   {},
                   8.0,
                   {},
                   {"printed regularizer lambda*exp(-2/eps) omits a^2 = 4exp(-2/eps); the path value is "
                    "4*lambda*exp(-2/eps)"}};
  f.path = [](double eps) {
    const double w = -1.0 / eps;
    return scalar_aux(2.0 * std::exp(-1.0 / eps), 1.0 / eps, w);
  };
  f.closed_form = [](double eps) {
    const double t = 2.0 + 2.0 * std::exp(-1.0 / eps);
    return t * t * t + 4.0 * kLambda * std::exp(-2.0 / eps);
  };
  return f;
}

}  // namespace

const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names{"squared-one-sample", "squared-two-sample", "squared-duplicate-input",
                                              "hinge-one-sample", "hinge-two-sample"};
  return names;
}

ExampleFixture example_fixture(const std::string& name) {
  if (name == "squared-one-sample") return squared_one_sample();
  if (name == "squared-two-sample") return squared_two_sample();
  if (name == "squared-duplicate-input") return squared_duplicate_input();
  if (name == "hinge-one-sample") return hinge_one_sample();
  if (name == "hinge-two-sample") return hinge_two_sample();
  throw UnknownFixture("unknown fixture '" + name + "'");
}

std::vector<double> default_eps_ladder() { return {1.0, 0.5, 0.25, 0.1, 0.05}; }

ExampleReport run_example(const std::string& name, std::vector<double> eps_ladder) {
  const ExampleFixture fx = example_fixture(name);
  if (eps_ladder.empty()) throw InvalidArgument("epsilon ladder is empty");
  for (double eps : eps_ladder) {
    if (!(eps > 0.0)) throw InvalidArgument("epsilon values must be positive");
  }
  std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<>());
  const GradientProgram objective = augmented_objective(fx.problem);

  ExampleReport rep;
  rep.name = fx.name;
  rep.limit = fx.limit;
  rep.discrepancies = fx.discrepancies;
  for (double eps : eps_ladder) {
    ExamplePoint pt;
    pt.eps = eps;
    const AuxParams aux = fx.path(eps);
    const ParamVector p = pack_augmented(fx.theta, aux);
    pt.general = objective.evaluate(p);
    pt.closed_form = fx.closed_form(eps);
    pt.difference = std::abs(pt.general - pt.closed_form);
    pt.distance_to_limit = std::abs(pt.general - fx.limit);
    pt.aux_norm = aux_norm(aux);
    pt.printed_path_value = fx.printed_path ? objective.evaluate(pack_augmented(fx.theta, fx.printed_path(eps)))
                                            : std::numeric_limits<double>::quiet_NaN();
    rep.max_difference = std::max(rep.max_difference, pt.difference);
    rep.points.push_back(pt);
  }
  rep.agreement = rep.max_difference <= 1e-10;
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    if (rep.points[i].distance_to_limit > rep.points[i - 1].distance_to_limit) rep.monotone = false;
  }
  rep.pass = rep.agreement && rep.monotone;
  return rep;
}

Problem bump_problem(double lambda, bool input_slope) {
  return Problem(Model::bump_curve(1, input_slope), LossCriterion::smoothed_hinge(3), Dataset({{0.0}}, {{-1.0}}),
                 Reduction::Mean, lambda);
}

double bump_stationary_point() {
  const GaussianCurve c = GaussianCurve::bump();
  double lo = 0.1;
  double hi = 0.3;
  double dlo = c.derivative(lo);
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double dm = c.derivative(mid);
    if (dm == 0.0) return mid;
    if ((dm < 0.0) == (dlo < 0.0)) {
      lo = mid;
      dlo = dm;
    } else {
      hi = mid;
    }
  }
  return std::abs(c.derivative(lo)) <= std::abs(c.derivative(hi)) ? lo : hi;
}

void LandscapeConfig::validate() const {
  if (theta_steps < 1 || b_steps < 1) throw InvalidArgument("landscape grid needs at least one step per axis");
  if (!(theta_hi > theta_lo) || !(b_hi > b_lo)) throw InvalidArgument("landscape ranges must satisfy lo < hi");
  if (!(bracket > 0.0)) throw InvalidArgument("inner bracket must be positive");
  if (theta_steps * b_steps > kGridBudget) throw BudgetError("landscape grid exceeds the point budget");
}

namespace {

double golden_section(const std::function<double(double)>& h, double lo, double hi, std::size_t iterations) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = h(c);
  double fd = h(d);
  for (std::size_t i = 0; i < iterations && hi - lo > 1e-300; ++i) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = h(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = h(d);
    }
    if (c >= d) break;
  }
  return fc <= fd ? c : d;
}

bool all_inputs_zero(const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.input(i)) {
      if (v != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

InnerSolution landscape_inner(const Problem& problem, double theta, double b, const LandscapeConfig& config) {
  const Model& model = problem.model();
  if (model.parameter_count() != 1 || model.output_dim() != 1) {
    throw DimensionError("the landscape needs a model with one parameter and one output");
  }
  const std::size_t dx = model.input_dim();
  const double th[1] = {theta};
  const GradientProgram fixed = augmented_objective_fixed_theta(problem, th);

  // Packed (a | b | W).
  std::vector<double> p(2 + dx, 0.0);
  p[1] = b;
  auto value_at = [&](double a) {
    p[0] = a;
    try {
      const double v = fixed.evaluate(p);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const OverflowError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // The output sees a e^b, so the bracket on a widens as b falls.
  const double reach = config.bracket * std::max(1.0, std::exp(-b));
  InnerSolution sol;
  double a = golden_section(value_at, -reach, reach, config.golden_iterations);
  double best = value_at(a);

  std::vector<double> grad(p.size());
  for (std::size_t k = 0; k < config.newton_steps; ++k) {
    p[0] = a;
    double g1 = 0.0;
    try {
      fixed.value_and_gradient(p, grad);
      g1 = grad[0];
      const double h = 1e-6 * (1.0 + std::abs(a));
      p[0] = a + h;
      fixed.value_and_gradient(p, grad);
      const double gp = grad[0];
      p[0] = a - h;
      fixed.value_and_gradient(p, grad);
      const double gm = grad[0];
      const double curvature = (gp - gm) / (2.0 * h);
      if (!(curvature > 0.0) || g1 == 0.0) break;
      const double next = std::clamp(a - g1 / curvature, -reach, reach);
      const double v = value_at(next);
      if (!(v <= best)) break;
      if (next == a) break;
      a = next;
      best = v;
    } catch (const OverflowError&) {
      break;
    }
  }

  sol.a = a;
  sol.w.assign(dx, 0.0);
  if (!all_inputs_zero(problem.data())) {
    // (a, W) jointly by backtracking descent from the 1-D solution.
    std::vector<double> q(1 + dx, 0.0);
    q[0] = a;
    std::vector<double> full(2 + dx);
    auto eval = [&](const std::vector<double>& v, std::vector<double>* g) {
      full[0] = v[0];
      full[1] = b;
      for (std::size_t j = 0; j < dx; ++j) full[2 + j] = v[1 + j];
      if (g == nullptr) return fixed.evaluate(full);
      std::vector<double> fg(full.size());
      const double val = fixed.value_and_gradient(full, fg);
      (*g)[0] = fg[0];
      for (std::size_t j = 0; j < dx; ++j) (*g)[1 + j] = fg[2 + j];
      return val;
    };
    try {
      std::vector<double> g(q.size());
      double val = eval(q, &g);
      double step = 1.0;
      for (std::size_t it = 0; it < 10000; ++it) {
        double gg = 0.0;
        for (double c : g) gg += c * c;
        if (gg <= 1e-28) break;
        std::vector<double> trial(q.size());
        bool accepted = false;
        while (step > 1e-30) {
          for (std::size_t i = 0; i < q.size(); ++i) trial[i] = q[i] - step * g[i];
          double tv = std::numeric_limits<double>::infinity();
          try {
            tv = eval(trial, nullptr);
          } catch (const OverflowError&) {
          }
          if (tv <= val - 1e-4 * step * gg) {
            accepted = true;
            break;
          }
          step *= 0.5;
        }
        if (!accepted) break;
        q = trial;
        val = eval(q, &g);
        step *= 2.0;
      }
      if (val < best) {
        best = val;
        sol.a = q[0];
        sol.w.assign(q.begin() + 1, q.end());
      }
    } catch (const OverflowError&) {
    }
  }
  sol.value = best;
  sol.ok = std::isfinite(best);
  if (!sol.ok) sol.value = std::numeric_limits<double>::quiet_NaN();
  return sol;
}

LandscapeResult landscape_grid(const Problem& problem, const LandscapeConfig& config) {
  config.validate();
  LandscapeResult res;
  const std::size_t n = config.theta_steps * config.b_steps;
  res.cells.resize(n);
  std::vector<char> failed(n, 0);
  parallel_for(n, config.jobs, [&](std::size_t idx) {
    const std::size_t i = idx / config.b_steps;
    const std::size_t j = idx % config.b_steps;
    LandscapeCell& cell = res.cells[idx];
    cell.theta = config.theta_lo +
                 (config.theta_hi - config.theta_lo) * static_cast<double>(i) / static_cast<double>(config.theta_steps);
    cell.b = config.b_lo + (config.b_hi - config.b_lo) * static_cast<double>(j) / static_cast<double>(config.b_steps);
    const InnerSolution sol = landscape_inner(problem, cell.theta, cell.b, config);
    cell.value = sol.value;
    cell.a = sol.a;
    failed[idx] = sol.ok ? 0 : 1;
  });
  for (char f : failed) res.failures += static_cast<std::size_t>(f);
  return res;
}

void write_landscape_csv(std::ostream& out, const LandscapeResult& result) {
  out << "theta,b,value\n";
  for (const LandscapeCell& c : result.cells) {
    out << format_double(c.theta) << ',' << format_double(c.b) << ',' << format_double(c.value) << '\n';
  }
}

NullSpaceReport null_space_fixture(std::uint64_t seed, std::size_t aux_points) {
  const double t_star = bump_stationary_point();
  const GaussianCurve curve = GaussianCurve::bump();

  NullSpaceReport rep{bump_problem(kLambda, true),
                      {t_star, 0.0},
                      0.0,
                      Problem(Model::curve_offset(curve), LossCriterion::squared(),
                              Dataset({{0.0}, {1.0}}, {{1.0}, {-1.0}}), Reduction::Mean, kLambda),
                      {},
                      0.0,
                      0.0,
                      0.0,
                      std::numeric_limits<double>::infinity(),
                      false};

  Rng rng(seed);
  auto random_aux = [&rng](std::size_t dx) {
    Eigen::MatrixXd W(static_cast<Eigen::Index>(dx), 1);
    for (Eigen::Index j = 0; j < W.rows(); ++j) W(j, 0) = rng.uniform(-1.0, 1.0);
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    return AuxParams({a}, {b}, std::move(W), kLambda);
  };

  const GradientProgram zero_obj = augmented_objective(rep.zero_problem);
  for (std::size_t s = 0; s < aux_points; ++s) {
    const AuxParams aux = random_aux(1);
    const ParamVector p = pack_augmented(rep.zero_theta, aux);
    const ParamVector g = zero_obj.gradient(p);
    rep.zero_max_theta_grad = std::max(rep.zero_max_theta_grad, norm2(g.segment("theta")));
  }

  const double s = curve(t_star);
  rep.offset_theta = {-s / 2.0, t_star};
  const Problem& op = rep.offset_problem;
  rep.offset_stationary_norm =
      gradient_factorization(op.model(), op.loss(), op.data(), rep.offset_theta).null_norm;
  const GradientProgram offset_loss = original_objective(op);
  rep.offset_loss = offset_loss.evaluate(rep.offset_theta);
  const std::vector<double> lo{-3.0, 0.0};
  const std::vector<double> hi{3.0, 1.0};
  const GridResult coarse = grid_global_min(offset_loss, lo, hi, 1e-2);
  rep.offset_grid_min = grid_refine(offset_loss, coarse, lo, hi, 2e-2, 1e-4).min_value;
  for (std::size_t k = 0; k < aux_points; ++k) {
    const AuxParams aux = random_aux(1);
    rep.offset_min_perturbed_norm =
        std::min(rep.offset_min_perturbed_norm,
                 gradient_factorization(op.model(), op.loss(), op.data(), rep.offset_theta, &aux).null_norm);
  }
  rep.pass = rep.zero_max_theta_grad <= 1e-10 && rep.offset_stationary_norm <= 1e-10 &&
             rep.offset_loss > rep.offset_grid_min + 1e-6 && rep.offset_min_perturbed_norm > 1e-6;
  return rep;
}

}  // namespace auxlab
