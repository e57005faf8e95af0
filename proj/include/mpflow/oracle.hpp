#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mpflow/problem.hpp"

namespace mpflow {

enum class OracleMethod { Grid, Subgradient };

std::string_view to_string(OracleMethod method);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct OracleCertificate {
  double feasibility_gap = 0.0;  ///< ‖Σ x_i − Σ d_i‖ at x_star
  bool no_feasible_point = false;
  std::size_t evaluations = 0;
  // grid
  double spacing = 0.0;
  std::size_t ties = 0;                    ///< grid points attaining F_star
  std::optional<double> best_neighbor_gap;  ///< min over axis neighbours of F − F_star
  // subgradient
  std::size_t iterations = 0;
  double last_step_norm = 0.0;
  std::vector<double> best_history;  ///< best objective at evenly spaced checkpoints
};

struct OracleResult {
  Eigen::MatrixXd x_star;  ///< n×q
  double F_star = 0.0;
  OracleMethod method = OracleMethod::Grid;
  OracleCertificate certificate;
};

inline constexpr std::size_t kGridMaxFreeDims = 6;
inline constexpr std::size_t kGridMaxResolution = 200;
inline constexpr double kGridMaxPoints = 5e7;

/// Exhaustive search over the free coordinates of agents 0..n−2 (each axis
/// split into `resolution` intervals of `bounds[k]`, the same interval for
/// every agent's k-th coordinate); the last agent absorbs Σd − Σ_{i<n} x_i.
/// The lexicographically smallest minimizer wins ties. Throws ScaleTooLarge
/// past the dimension, resolution or total-point caps.
OracleResult solve_grid(const NetworkProblem& p, const std::vector<Interval>& bounds, std::size_t resolution);

struct SubgradientOptions {
  std::size_t iters = 100000;
  std::optional<double> step_scale;  ///< a in a/(k+b); default 2/c
  double step_offset = 10.0;         ///< b
  std::size_t checkpoints = 100;
};

/// Projected subgradient descent on F over {Σ x_i = Σ d_i} ∩ (indicator sets),
/// steps a/(k + b). Projection onto the intersection uses Dykstra's method
/// with the affine set last, so iterates satisfy the resource constraint to
/// roundoff. Returns the best iterate.
OracleResult solve_subgradient(const NetworkProblem& p, const Eigen::MatrixXd& x0,
                               const SubgradientOptions& options = {});

/// Euclidean projection onto {Σ x_i = Σ d_i} ∩ (indicator sets).
Eigen::MatrixXd project_feasible(const NetworkProblem& p, const Eigen::MatrixXd& x);

}  // namespace mpflow
