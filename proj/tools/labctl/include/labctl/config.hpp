#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <auxlab/augment.hpp>
#include <auxlab/errors.hpp>
#include <auxlab/fixtures.hpp>
#include <auxlab/oracles.hpp>
#include <auxlab/optimize.hpp>

namespace labctl {

// Malformed config text, unknown keys, or out-of-range values.
class ConfigError : public auxlab::Error {
 public:
  using auxlab::Error::Error;
};

// Everything one invocation needs. Text form:
//
//   # comment
//   [model]
//   kind = "mlp"
//   widths = [2, 16, 1]
//
// Strings may be quoted or bare; lists use brackets.
struct RunConfig {
  // [model]
  std::string model = "bump_curve";
  std::vector<std::size_t> widths{1, 1};
  std::string activation = "tanh";
  // Fixed initial theta for every seed; empty draws it from the model's init.
  std::vector<double> theta;

  // [loss]
  std::string loss = "smoothed_hinge";
  int power = 3;

  // [data]
  std::string fixture = "bump";
  std::string path;

  // [augment]
  double lambda = auxlab::kDefaultLambda;
  auxlab::Reduction reduction = auxlab::Reduction::Mean;

  // [optimizer], [monitor]
  auxlab::OptimizerConfig optimizer;
  auxlab::MonitorConfig monitor;

  // [experiment]
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  std::vector<std::string> variants{"original", "augmented", "augmented+monitor"};
  double aux_init_radius = 0.1;
  double success_threshold = 0.1;
  std::size_t histogram_bins = 20;
  double histogram_lo = 0.0;
  double histogram_hi = 50.0;
  bool write_trajectories = true;

  // [landscape]
  auxlab::LandscapeConfig landscape;

  // [verify]
  double radius = 1e-2;
  std::size_t samples = 2000;
  std::size_t grad_points = 100;
  std::uint64_t verify_seed = 0;
  auxlab::PgbConfig pgb;

  // [oracle]
  std::vector<double> oracle_lo{0.0};
  std::vector<double> oracle_hi{1.0};
  double resolution = 1e-3;

  // [output]
  std::string out = "runs";

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string to_text(const RunConfig& config);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Problem assembled from the model, loss, data and augment sections.
// Dataset read failures raise IoError, unknown data fixtures UnknownFixture.
auxlab::Problem build_problem(const RunConfig& config);

auxlab::ExperimentConfig experiment_config(const RunConfig& config, std::size_t jobs);

}  // namespace labctl
