#pragma once

// Independent verification machinery: brute-force grids, sampling-based
// local-minimum checks, the interpolation solvers, the perturbable-gradient-
// basis bound for L~ at fixed theta, and the A[theta] r factorization.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "auxlab/augment.hpp"
#include "auxlab/diff.hpp"
#include "auxlab/verdict.hpp"

namespace auxlab {

inline constexpr std::size_t kGridBudget = 100'000'000;
inline constexpr std::size_t kPolyFeatureBudget = 1'000'000;

struct GridResult {
  std::vector<double> argmin;
  double min_value = 0.0;
  std::size_t evaluations = 0;
  std::size_t overflows = 0;  // points scored as +inf
};

// Closed box [lo, hi] sampled with spacing `resolution` per axis
// (round((hi - lo) / resolution) + 1 points). Dimension <= 3. Among values
// within 1e-12 of the minimum, the lexicographically smallest point wins.
GridResult grid_global_min(const GradientProgram& objective, std::span<const double> lo,
                           std::span<const double> hi, double resolution);

// Same, with an explicit point count per axis.
GridResult grid_global_min_points(const GradientProgram& objective, std::span<const double> lo,
                                  std::span<const double> hi, std::span<const std::size_t> points);

// Re-grids a box of half-width `radius` around the coarse argmin (clipped to
// [lo, hi]) at spacing `resolution` and keeps the better of the two results.
GridResult grid_refine(const GradientProgram& objective, const GridResult& coarse, std::span<const double> lo,
                       std::span<const double> hi, double radius, double resolution);

// n uniform samples in the ball of the given radius around `point`. Passes iff
// objective(point) <= objective(sample) + 1e-9 for every sample; the lowest
// violating sample is the witness.
OracleVerdict verify_local_min(const GradientProgram& objective, std::span<const double> point, double radius,
                               std::size_t n_samples, std::uint64_t seed);

// Reverse-mode gradient against central differences at each point. The error
// ||g - g_fd|| is scaled by max(||g_fd||, 1e-3) and must stay below 1e-4.
OracleVerdict gradient_check(const GradientProgram& objective, const std::vector<std::vector<double>>& points,
                             double step = 1e-6);

// max_i ||grad l_{y_i}(f(x_i; theta))|| <= 1e-5.
OracleVerdict per_sample_gradient_check(const Model& model, const LossCriterion& loss, const Dataset& data,
                                        std::span<const double> theta);

struct ExpDirection {
  double b = 0.0;
  std::vector<double> w;
};

struct InterpResult {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd singular_values;
  std::size_t rank = 0;
  bool rank_deficient = false;
  Eigen::VectorXd coefficients;
  double residual = 0.0;
};

inline constexpr double kRankThreshold = 1e-10;

// M_{j,t} = exp(eps (w_t . x_j + b_t)); rank counts singular values above
// 1e-10 sigma_max; coefficients are the minimum-norm least-squares solution.
InterpResult exp_interp(const std::vector<std::vector<double>>& points, const std::vector<ExpDirection>& directions,
                        double eps, std::span<const double> targets);

// All monomials of total degree <= degree, graded then lexicographic
// (1, x1, x2, x1^2, x1 x2, x2^2, ...).
std::vector<std::vector<int>> monomial_exponents(std::size_t dim, int degree);
std::size_t monomial_count(std::size_t dim, int degree);

InterpResult poly_interp(const std::vector<std::vector<double>>& points, int degree, std::span<const double> targets);

struct PgbConfig {
  std::vector<double> eps_ladder{1e-1, 1e-2, 1e-3};
  // Random unit directions per epsilon, in addition to the zero direction.
  std::size_t directions = 8;
  std::uint64_t seed = 0;
  std::size_t inner_max_iterations = 10000;
  double tolerance = 1e-7;

  bool operator==(const PgbConfig&) const = default;
};

struct PgbEpsilon {
  double eps = 0.0;
  double inner_min = 0.0;
  double bound = 0.0;
  bool refuted = false;
};

struct PgbReport {
  OracleVerdict verdict;  // pass == CONSISTENT
  double q_z = 0.0;
  double correction = 0.0;
  std::vector<PgbEpsilon> per_eps;
  bool refuted = false;
  // A nearby (a | b | W) with strictly smaller L~, confirmed by direct evaluation.
  std::optional<std::vector<double>> witness;
  bool witness_verified = false;
};

// Bound for L~(theta, .) at z = (a, b, W) with ||a|| <= 1e-6. For each eps,
// features d/da_k g_k(x_i; z + eps S_t) over the zero direction and
// `directions` random unit directions with zero a-segment are combined
// linearly into the outputs, and the loss is minimized over the coefficients.
// bound = min - lambda ||a||^2; REFUTED iff bound < Q(z) - tolerance.
PgbReport pgb_check(const Problem& problem, std::span<const double> theta, const AuxParams& z,
                    const PgbConfig& config = {});

struct Factorization {
  Eigen::MatrixXd A;  // d_theta x (m d_y), (1/m)[J_1^T ... J_m^T]
  Eigen::VectorXd r;  // stacked loss gradients
  double null_norm = 0.0;
  double relative = 0.0;
};

// r is evaluated at f(x_i), or at f(x_i) + g(x_i) when aux is given.
Factorization gradient_factorization(const Model& model, const LossCriterion& loss, const Dataset& data,
                                     std::span<const double> theta, const AuxParams* aux = nullptr);

}  // namespace auxlab
