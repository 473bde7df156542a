#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auxlab/augment.hpp"
#include "auxlab/diff.hpp"
#include "auxlab/param_vector.hpp"
#include "auxlab/random.hpp"

namespace auxlab {

enum class Method { GD, AdaGrad };

struct OptimizerConfig {
  Method method = Method::GD;
  double lr = 0.01;
  double delta = 1e-8;  // AdaGrad denominator offset
  // 0 means full batch.
  std::size_t batch_size = 0;
  std::size_t max_iterations = 10000;
  double grad_tol = 1e-8;
  std::uint64_t seed = 0;
  std::size_t sample_every = 10;
  // Segments held fixed (their gradient is still measured).
  std::vector<std::string> frozen_segments;

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

enum class NormKind { Frobenius, Spectral };
enum class MonitorAction { Off, Halt, Restart };

struct MonitorConfig {
  double threshold = 7.0;
  NormKind norm = NormKind::Frobenius;
  MonitorAction action = MonitorAction::Off;
  std::size_t max_restarts = 10;
  // Restarts redraw (a, b, W) from U[-init_radius, init_radius].
  double init_radius = 0.1;
  bool redraw_theta = false;

  void validate() const;
  bool operator==(const MonitorConfig&) const = default;
};

std::string to_string(Method m);
Method method_from_string(const std::string& name);
std::string to_string(NormKind n);
NormKind norm_kind_from_string(const std::string& name);
std::string to_string(MonitorAction a);
MonitorAction monitor_action_from_string(const std::string& name);

enum class Termination { Stationary, MaxIter, MonitorHalt, Overflow };
std::string to_string(Termination t);

struct TrajectorySample {
  std::size_t iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double aux_norm = 0.0;

  bool operator==(const TrajectorySample&) const = default;
};

struct MonitorEvent {
  std::size_t iteration = 0;
  double aux_norm = 0.0;
  MonitorAction action = MonitorAction::Off;

  bool operator==(const MonitorEvent&) const = default;
};

struct RunRecord {
  std::vector<TrajectorySample> trajectory;
  ParamVector final_params;
  Termination termination = Termination::MaxIter;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  std::vector<MonitorEvent> events;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  double final_aux_norm = 0.0;
  // Largest gradient norm seen on the frozen segments.
  double max_frozen_grad_norm = 0.0;
  std::string overflow_message;
  // Kept out of every serialized output so files stay reproducible.
  double wall_seconds = 0.0;
};

// ||a||_2 + ||b||_2 + ||W|| of a packed vector; 0 if it has no aux segments.
double aux_norm(const ParamVector& p, NormKind kind = NormKind::Frobenius);
double aux_norm(const AuxParams& aux, NormKind kind = NormKind::Frobenius);

// True iff the aux norm reaches the threshold.
bool monitor_check(const AuxParams& aux, const MonitorConfig& mon);

// Draws a fresh theta on restart when MonitorConfig::redraw_theta is set.
using ThetaSampler = std::function<std::vector<double>(Rng&)>;

// Builds the objective restricted to a batch of sample indices.
using BatchObjective = std::function<GradientProgram(std::span<const std::size_t>)>;

struct Objective {
  GradientProgram full;
  BatchObjective batch;      // required when batch_size > 0
  std::size_t samples = 0;  // dataset size for batching
};

RunRecord minimize(const GradientProgram& objective, const ParamVector& init, const OptimizerConfig& opt,
                   const MonitorConfig& mon = {}, const ThetaSampler& sampler = {});
RunRecord minimize(const Objective& objective, const ParamVector& init, const OptimizerConfig& opt,
                   const MonitorConfig& mon = {}, const ThetaSampler& sampler = {});

// Header `iter,objective,grad_norm,aux_norm`.
void write_trajectory_csv(std::ostream& out, const RunRecord& record);

enum class Variant { Original, Augmented, AugmentedMonitor };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ExperimentConfig {
  std::size_t n_seeds = 10;
  std::uint64_t base_seed = 0;
  std::vector<Variant> variants{Variant::Original, Variant::Augmented, Variant::AugmentedMonitor};
  OptimizerConfig opt;
  // Used by the AugmentedMonitor variant; the others run with the monitor off.
  MonitorConfig monitor{7.0, NormKind::Frobenius, MonitorAction::Restart, 10, 0.1, false};
  // Initial (a, b, W) drawn from U[-aux_init_radius, aux_init_radius].
  double aux_init_radius = 0.1;
  double success_threshold = 0.1;
  std::size_t jobs = 1;
  // Starting theta for every seed; empty draws it from the model's init.
  std::vector<double> initial_theta;
};

struct ExperimentRun {
  Variant variant = Variant::Original;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  RunRecord record;
  // The standard objective L at the final theta.
  double final_loss = 0.0;
  std::optional<std::string> error;
};

struct VariantSummary {
  Variant variant = Variant::Original;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t successes = 0;  // final L <= success_threshold
  double success_fraction = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t restarts = 0;
  std::size_t monitor_events = 0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::vector<std::size_t>> counts;  // per variant, per bin
};

struct ExperimentResult {
  std::vector<ExperimentRun> runs;  // ordered by (variant, seed index)
  std::vector<VariantSummary> summaries;
};

// The seed for index i. Each variant starts from the same theta for a given i.
std::uint64_t experiment_seed(std::uint64_t base, std::size_t index);

ExperimentResult multi_seed_experiment(const Problem& problem, const ExperimentConfig& config);

// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
Histogram loss_histogram(const ExperimentResult& result, const std::vector<Variant>& variants, double lo,
                         double hi, std::size_t bins);
void write_histogram_csv(std::ostream& out, const Histogram& hist, const std::vector<Variant>& variants);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace auxlab
