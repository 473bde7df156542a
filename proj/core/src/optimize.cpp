#include "auxlab/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <Eigen/SVD>

#include "auxlab/errors.hpp"
#include "auxlab/format.hpp"

namespace auxlab {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
  if (!(delta > 0.0)) throw InvalidArgument("AdaGrad delta must be positive");
  if (!(grad_tol >= 0.0)) throw InvalidArgument("gradient tolerance must be nonnegative");
  if (sample_every < 1) throw InvalidArgument("sample_every must be at least 1");
}

void MonitorConfig::validate() const {
  if (!(threshold > 0.0)) throw InvalidArgument("monitor threshold must be positive");
  if (!(init_radius >= 0.0)) throw InvalidArgument("restart radius must be nonnegative");
}

std::string to_string(Method m) { return m == Method::GD ? "gd" : "adagrad"; }

Method method_from_string(const std::string& name) {
  if (name == "gd") return Method::GD;
  if (name == "adagrad") return Method::AdaGrad;
  throw InvalidArgument("unknown optimizer method '" + name + "'");
}

std::string to_string(NormKind n) { return n == NormKind::Frobenius ? "frobenius" : "spectral"; }

NormKind norm_kind_from_string(const std::string& name) {
  if (name == "frobenius") return NormKind::Frobenius;
  if (name == "spectral") return NormKind::Spectral;
  throw InvalidArgument("unknown norm '" + name + "'");
}

std::string to_string(MonitorAction a) {
  switch (a) {
    case MonitorAction::Off: return "off";
    case MonitorAction::Halt: return "halt";
    case MonitorAction::Restart: return "restart";
  }
  return "off";
}

MonitorAction monitor_action_from_string(const std::string& name) {
  if (name == "off") return MonitorAction::Off;
  if (name == "halt") return MonitorAction::Halt;
  if (name == "restart") return MonitorAction::Restart;
  throw InvalidArgument("unknown monitor action '" + name + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Stationary: return "stationary";
    case Termination::MaxIter: return "max_iter";
    case Termination::MonitorHalt: return "monitor_halt";
    case Termination::Overflow: return "overflow";
  }
  return "max_iter";
}

namespace {

double matrix_norm(std::span<const double> w, std::size_t rows, std::size_t cols, NormKind kind) {
  if (w.empty()) return 0.0;
  if (kind == NormKind::Frobenius) return norm2(w);
  Eigen::Map<const Eigen::MatrixXd> m(w.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double aux_norm_in(std::span<const double> p, const Layout& layout, NormKind kind) {
  const Segment* a = layout.find("a");
  const Segment* b = layout.find("b");
  const Segment* w = layout.find("W");
  if (a == nullptr || b == nullptr || w == nullptr) return 0.0;
  const std::size_t cols = a->length;
  const std::size_t rows = cols == 0 ? 0 : w->length / cols;
  return norm2(p.subspan(a->offset, a->length)) + norm2(p.subspan(b->offset, b->length)) +
         matrix_norm(p.subspan(w->offset, w->length), rows, cols, kind);
}

}  // namespace

double aux_norm(const ParamVector& p, NormKind kind) { return aux_norm_in(p.values(), p.layout(), kind); }

double aux_norm(const AuxParams& aux, NormKind kind) {
  return norm2(aux.a) + norm2(aux.b) +
         matrix_norm({aux.W.data(), static_cast<std::size_t>(aux.W.size())}, aux.input_dim(), aux.output_dim(),
                     kind);
}

bool monitor_check(const AuxParams& aux, const MonitorConfig& mon) { return aux_norm(aux, mon.norm) >= mon.threshold; }

RunRecord minimize(const GradientProgram& objective, const ParamVector& init, const OptimizerConfig& opt,
                   const MonitorConfig& mon, const ThetaSampler& sampler) {
  return minimize(Objective{objective, {}, 0}, init, opt, mon, sampler);
}

namespace {

std::vector<bool> frozen_mask(const Layout& layout, const std::vector<std::string>& frozen) {
  std::vector<bool> mask(layout.size(), false);
  for (const std::string& name : frozen) {
    const Segment& seg = layout.at(name);
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(seg.offset), seg.length, true);
  }
  return mask;
}

// Splits the gradient into its trainable part (returned norm) and zeroes the
// frozen coordinates, reporting their norm through `frozen_norm`.
double mask_gradient(std::vector<double>& grad, const std::vector<bool>& mask, double& frozen_norm) {
  double trainable = 0.0;
  double frozen = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (mask[i]) {
      frozen += grad[i] * grad[i];
      grad[i] = 0.0;
    } else {
      trainable += grad[i] * grad[i];
    }
  }
  frozen_norm = std::sqrt(frozen);
  return std::sqrt(trainable);
}

void redraw(std::vector<double>& p, const Layout& layout, const MonitorConfig& mon, const ThetaSampler& sampler,
            Rng& rng) {
  for (const char* name : {"a", "b", "W"}) {
    const Segment* seg = layout.find(name);
    if (seg == nullptr) continue;
    for (std::size_t i = 0; i < seg->length; ++i) p[seg->offset + i] = rng.uniform(-mon.init_radius, mon.init_radius);
  }
  if (mon.redraw_theta && sampler) {
    const Segment* seg = layout.find("theta");
    if (seg != nullptr) {
      const std::vector<double> theta = sampler(rng);
      if (theta.size() != seg->length) throw DimensionError("theta sampler returned the wrong dimension");
      std::copy(theta.begin(), theta.end(), p.begin() + static_cast<std::ptrdiff_t>(seg->offset));
    }
  }
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

RunRecord minimize(const Objective& objective, const ParamVector& init, const OptimizerConfig& opt,
                   const MonitorConfig& mon, const ThetaSampler& sampler) {
  opt.validate();
  mon.validate();
  if (init.size() != objective.full.dimension()) {
    throw DimensionError("initial point has dimension " + std::to_string(init.size()) + ", objective expects " +
                         std::to_string(objective.full.dimension()));
  }
  const bool batched = opt.batch_size > 0 && objective.batch && opt.batch_size < objective.samples;
  const auto start = std::chrono::steady_clock::now();

  const Layout& layout = init.layout();
  const std::vector<bool> mask = frozen_mask(layout, opt.frozen_segments);
  std::vector<double> p(init.values().begin(), init.values().end());
  std::vector<double> grad(p.size());
  std::vector<double> accum(p.size(), 0.0);
  Rng restart_rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng shuffle_rng(opt.seed);
  std::vector<std::size_t> order(objective.samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  RunRecord rec;
  auto aux_of = [&](const std::vector<double>& v) { return aux_norm_in(v, layout, mon.norm); };

  double value = 0.0;
  double gnorm = 0.0;
  double anorm = 0.0;
  bool done = false;
  std::size_t it = 0;
  for (; it < opt.max_iterations && !done; ++it) {
    double frozen_norm = 0.0;
    try {
      value = objective.full.value_and_gradient(p, grad);
    } catch (const OverflowError& e) {
      rec.termination = Termination::Overflow;
      rec.overflow_message = e.what();
      done = true;
      break;
    }
    gnorm = mask_gradient(grad, mask, frozen_norm);
    rec.max_frozen_grad_norm = std::max(rec.max_frozen_grad_norm, frozen_norm);
    anorm = aux_of(p);
    if (it % opt.sample_every == 0) rec.trajectory.push_back({it, value, gnorm, anorm});

    if (gnorm <= opt.grad_tol) {
      rec.termination = Termination::Stationary;
      done = true;
      break;
    }
    if (mon.action != MonitorAction::Off && anorm >= mon.threshold) {
      const bool can_restart = mon.action == MonitorAction::Restart && rec.restarts < mon.max_restarts;
      rec.events.push_back({it, anorm, can_restart ? MonitorAction::Restart : MonitorAction::Halt});
      if (!can_restart) {
        rec.termination = Termination::MonitorHalt;
        done = true;
        break;
      }
      redraw(p, layout, mon, sampler, restart_rng);
      std::fill(accum.begin(), accum.end(), 0.0);
      ++rec.restarts;
      continue;
    }

    if (batched) {
      if (cursor + opt.batch_size > order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        cursor = 0;
      }
      const std::span<const std::size_t> batch(order.data() + cursor, opt.batch_size);
      cursor += opt.batch_size;
      try {
        objective.batch(batch).value_and_gradient(p, grad);
      } catch (const OverflowError& e) {
        rec.termination = Termination::Overflow;
        rec.overflow_message = e.what();
        done = true;
        break;
      }
      mask_gradient(grad, mask, frozen_norm);
    }

    for (std::size_t i = 0; i < p.size(); ++i) {
      if (opt.method == Method::GD) {
        p[i] -= opt.lr * grad[i];
      } else {
        accum[i] += grad[i] * grad[i];
        p[i] -= opt.lr * grad[i] / (std::sqrt(accum[i]) + opt.delta);
      }
    }
    if (!all_finite(p)) {
      rec.termination = Termination::Overflow;
      rec.overflow_message = "iterate became non-finite";
      done = true;
      break;
    }
  }
  if (!done) {
    rec.termination = Termination::MaxIter;
    try {
      double frozen_norm = 0.0;
      value = objective.full.value_and_gradient(p, grad);
      gnorm = mask_gradient(grad, mask, frozen_norm);
      rec.max_frozen_grad_norm = std::max(rec.max_frozen_grad_norm, frozen_norm);
      anorm = aux_of(p);
    } catch (const OverflowError& e) {
      rec.termination = Termination::Overflow;
      rec.overflow_message = e.what();
    }
  }
  if (rec.termination != Termination::Overflow &&
      (rec.trajectory.empty() || rec.trajectory.back().iteration != it)) {
    rec.trajectory.push_back({it, value, gnorm, anorm});
  }
  rec.iterations = it;
  rec.final_params = init.with_values(p);
  rec.final_objective = value;
  rec.final_grad_norm = gnorm;
  rec.final_aux_norm = aux_of(p);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void write_trajectory_csv(std::ostream& out, const RunRecord& record) {
  out << "iter,objective,grad_norm,aux_norm\n";
  for (const TrajectorySample& s : record.trajectory) {
    out << s.iteration << ',' << format_double(s.objective) << ',' << format_double(s.grad_norm) << ','
        << format_double(s.aux_norm) << '\n';
  }
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Original: return "original";
    case Variant::Augmented: return "augmented";
    case Variant::AugmentedMonitor: return "augmented+monitor";
  }
  return "original";
}

Variant variant_from_string(const std::string& name) {
  if (name == "original") return Variant::Original;
  if (name == "augmented") return Variant::Augmented;
  if (name == "augmented+monitor") return Variant::AugmentedMonitor;
  throw InvalidArgument("unknown variant '" + name + "'");
}

std::uint64_t experiment_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 of base + index.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

ExperimentRun run_variant(const Problem& problem, const ExperimentConfig& config, Variant variant,
                          std::size_t index) {
  ExperimentRun run;
  run.variant = variant;
  run.seed_index = index;
  run.seed = experiment_seed(config.base_seed, index);

  Rng rng(run.seed);
  const Model& model = problem.model();
  const std::vector<double> theta =
      config.initial_theta.empty() ? model.initial_parameters(rng) : config.initial_theta;
  OptimizerConfig opt = config.opt;
  opt.seed = run.seed;

  const GradientProgram loss = original_objective(problem);
  try {
    if (variant == Variant::Original) {
      Layout layout;
      layout.add("theta", theta.size());
      Objective obj{loss, [problem](std::span<const std::size_t> s) { return original_objective(problem, s); },
                    problem.data().size()};
      run.record = minimize(obj, ParamVector(theta, layout), opt, MonitorConfig{});
    } else {
      const Layout layout = problem.augmented_layout();
      std::vector<double> p(theta);
      while (p.size() < layout.size()) p.push_back(rng.uniform(-config.aux_init_radius, config.aux_init_radius));
      Objective obj{augmented_objective(problem),
                    [problem](std::span<const std::size_t> s) { return augmented_objective(problem, s); },
                    problem.data().size()};
      MonitorConfig mon;
      if (variant == Variant::AugmentedMonitor) mon = config.monitor;
      const ThetaSampler sampler = [model](Rng& r) { return model.initial_parameters(r); };
      run.record = minimize(obj, ParamVector(std::move(p), layout), opt, mon, sampler);
    }
    const ParamVector& fin = run.record.final_params;
    const auto final_theta = fin.has_segment("theta") ? fin.segment("theta") : fin.values();
    run.final_loss = loss.evaluate(final_theta);
    if (run.record.termination == Termination::Overflow) run.error = run.record.overflow_message;
  } catch (const Error& e) {
    run.error = e.what();
    run.final_loss = std::nan("");
  }
  return run;
}

VariantSummary summarize(Variant variant, const std::vector<ExperimentRun>& runs, double threshold) {
  VariantSummary s;
  s.variant = variant;
  std::vector<double> finals;
  for (const ExperimentRun& r : runs) {
    if (r.variant != variant) continue;
    ++s.runs;
    s.restarts += r.record.restarts;
    s.monitor_events += r.record.events.size();
    if (!std::isfinite(r.final_loss)) {
      ++s.failures;
      continue;
    }
    if (r.error) ++s.failures;
    finals.push_back(r.final_loss);
    if (r.final_loss <= threshold) ++s.successes;
  }
  if (s.runs > 0) s.success_fraction = static_cast<double>(s.successes) / static_cast<double>(s.runs);
  if (!finals.empty()) {
    std::sort(finals.begin(), finals.end());
    s.min = finals.front();
    s.max = finals.back();
    double sum = 0.0;
    for (double v : finals) sum += v;
    s.mean = sum / static_cast<double>(finals.size());
    const std::size_t mid = finals.size() / 2;
    s.median = finals.size() % 2 == 1 ? finals[mid] : 0.5 * (finals[mid - 1] + finals[mid]);
  }
  return s;
}

}  // namespace

ExperimentResult multi_seed_experiment(const Problem& problem, const ExperimentConfig& config) {
  if (config.n_seeds < 1) throw InvalidArgument("n_seeds must be at least 1");
  config.opt.validate();
  config.monitor.validate();
  if (!config.initial_theta.empty() && config.initial_theta.size() != problem.model().parameter_count()) {
    throw DimensionError("initial theta has " + std::to_string(config.initial_theta.size()) +
                         " entries, the model expects " + std::to_string(problem.model().parameter_count()));
  }
  const std::size_t nv = config.variants.size();
  ExperimentResult result;
  result.runs.resize(nv * config.n_seeds);
  parallel_for(result.runs.size(), config.jobs, [&](std::size_t k) {
    result.runs[k] = run_variant(problem, config, config.variants[k / config.n_seeds], k % config.n_seeds);
  });
  for (Variant v : config.variants) result.summaries.push_back(summarize(v, result.runs, config.success_threshold));
  return result;
}

Histogram loss_histogram(const ExperimentResult& result, const std::vector<Variant>& variants, double lo, double hi,
                         std::size_t bins) {
  if (bins < 1 || !(hi > lo)) throw InvalidArgument("histogram needs bins >= 1 and hi > lo");
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  for (Variant v : variants) {
    std::vector<std::size_t> counts(bins, 0);
    for (const ExperimentRun& r : result.runs) {
      if (r.variant != v || !std::isfinite(r.final_loss)) continue;
      const double t = (r.final_loss - lo) / (hi - lo) * static_cast<double>(bins);
      const auto bin = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(bins - 1)));
      ++counts[bin];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist, const std::vector<Variant>& variants) {
  out << "bin_lo,bin_hi";
  for (Variant v : variants) out << ',' << to_string(v);
  out << '\n';
  for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1]);
    for (const auto& counts : hist.counts) out << ',' << counts[b];
    out << '\n';
  }
}

}  // namespace auxlab
