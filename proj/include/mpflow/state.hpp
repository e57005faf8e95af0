#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mpflow {

/// Full state of either flow at one instant. Block matrices hold one agent
/// per row: x, v, w are n×q, each z[j] is n×q (j = 0..m−2), y is n×n with
/// row i the estimate agent i keeps of the left eigenvector.
struct FlowState {
  Eigen::MatrixXd x;
  std::vector<Eigen::MatrixXd> z;
  Eigen::MatrixXd v;
  Eigen::MatrixXd w;
  std::optional<Eigen::MatrixXd> y;

  std::size_t agents() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(x.cols()); }

  bool all_finite() const;

  /// Row-major flattening of x, the nq-vector [x_1; …; x_n].
  Eigen::VectorXd stacked_x() const;

  bool operator==(const FlowState& other) const;
};

/// Zero z, v, w; y = I when `with_estimator`.
FlowState initial_state(const Eigen::MatrixXd& x0, std::size_t m, bool with_estimator);

/// nq-vector ↔ n×q conversions (row i is agent i).
Eigen::VectorXd stack_rows(const Eigen::MatrixXd& blocks);
Eigen::MatrixXd unstack_rows(const Eigen::VectorXd& stacked, std::size_t n, std::size_t q);

}  // namespace mpflow
