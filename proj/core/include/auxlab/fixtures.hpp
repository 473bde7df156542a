#pragma once

// Closed-form divergence-path examples, the (theta, b) landscape of the bump
// curve, and the two null-space fixtures.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "auxlab/augment.hpp"
#include "auxlab/oracles.hpp"

namespace auxlab {

struct ExampleFixture {
  std::string name;
  std::string description;
  Problem problem;
  std::vector<double> theta;
  std::function<AuxParams(double)> path;
  std::function<double(double)> closed_form;
  double limit = 0.0;
  // Path with the constants as originally printed, where they differ.
  std::function<AuxParams(double)> printed_path;
  std::vector<std::string> discrepancies;
};

const std::vector<std::string>& example_names();
// Throws UnknownFixture.
ExampleFixture example_fixture(const std::string& name);

std::vector<double> default_eps_ladder();  // {1, 0.5, 0.25, 0.1, 0.05}

struct ExamplePoint {
  double eps = 0.0;
  double general = 0.0;      // L~ through the generic evaluator
  double closed_form = 0.0;
  double difference = 0.0;
  double distance_to_limit = 0.0;
  double aux_norm = 0.0;
  double printed_path_value = 0.0;  // NaN when no printed path is stored
};

struct ExampleReport {
  std::string name;
  double limit = 0.0;
  std::vector<ExamplePoint> points;  // ordered by decreasing eps
  double max_difference = 0.0;
  bool agreement = false;  // max_difference <= 1e-10
  bool monotone = false;   // |value - limit| non-increasing as eps shrinks
  bool pass = false;
  std::vector<std::string> discrepancies;
};

ExampleReport run_example(const std::string& name, std::vector<double> eps_ladder = default_eps_ladder());

// Bump curve at x = 0 with target -1 under the cubed hinge, mean reduction.
Problem bump_problem(double lambda = kDefaultLambda, bool input_slope = false);

// The stationary point of the bump curve near t = 0.2 (bisection on curve').
double bump_stationary_point();

struct LandscapeConfig {
  double theta_lo = 0.0;
  double theta_hi = 1.0;
  std::size_t theta_steps = 200;
  double b_lo = -5.0;
  double b_hi = 15.0;
  std::size_t b_steps = 200;
  double bracket = 10.0;
  std::size_t golden_iterations = 200;
  std::size_t newton_steps = 20;
  std::size_t jobs = 1;

  void validate() const;
  bool operator==(const LandscapeConfig&) const = default;
};

struct InnerSolution {
  double value = 0.0;
  double a = 0.0;
  std::vector<double> w;
  bool ok = true;
};

// min over (a, W) of L~(theta, a, b, W) for a d_theta = d_y = 1 problem.
// When every input is zero W is inert and the search is one-dimensional.
InnerSolution landscape_inner(const Problem& problem, double theta, double b, const LandscapeConfig& config);

struct LandscapeCell {
  double theta = 0.0;
  double b = 0.0;
  double value = 0.0;
  double a = 0.0;
};

struct LandscapeResult {
  // Row-major over the half-open grids theta_i = lo + (hi - lo) i / steps.
  std::vector<LandscapeCell> cells;
  std::size_t failures = 0;
};

LandscapeResult landscape_grid(const Problem& problem, const LandscapeConfig& config);
void write_landscape_csv(std::ostream& out, const LandscapeResult& result);

struct NullSpaceReport {
  // f = curve(t + t' x_1) at x_1 = 0: A[theta] = 0 at the stationary t.
  Problem zero_problem;
  std::vector<double> zero_theta;
  double zero_max_theta_grad = 0.0;  // over random aux points

  // f = c + curve(t) x_1 on x = (0, 1), y = (1, -1), squared loss.
  Problem offset_problem;
  std::vector<double> offset_theta;
  double offset_stationary_norm = 0.0;  // ||A r[f]||
  double offset_loss = 0.0;
  double offset_grid_min = 0.0;
  double offset_min_perturbed_norm = 0.0;  // min over random aux of ||A r[f + g]||

  bool pass = false;
};

NullSpaceReport null_space_fixture(std::uint64_t seed = 0, std::size_t aux_points = 20);

}  // namespace auxlab
