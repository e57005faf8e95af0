#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mpflow/graph.hpp"
#include "mpflow/problem.hpp"
#include "mpflow/state.hpp"

namespace mpflow {

enum class FlowMode {
  KnownH,     ///< agents know their entry h_i of the left eigenvector
  Estimator,  ///< agents run ẏ = −L y and use y_i^i in place of h_i
};

std::string_view to_string(FlowMode mode);

struct RhsOutput {
  Eigen::MatrixXd dx;
  std::vector<Eigen::MatrixXd> dz;
  Eigen::MatrixXd dv;
  Eigen::MatrixXd dw;
  std::optional<Eigen::MatrixXd> dy;
  double sup_norm = 0.0;  ///< max |entry| over all derivative blocks
};

/// y_i^i at or below this is reported as EstimatorSingular.
inline constexpr double kEstimatorFloor = 1e-12;

/// Right-hand side of the flow with known left eigenvector h:
///   ẋ_i   = prox_{f_i^m}[x_i − ∇f_i⁰(x_i) + v_i + γ Σ_j z_i^j] − x_i
///   ż_i^j = prox_{f_i^j}[x_i − γ z_i^j] − x_i
///   v̇_i   = −(x_i − d_i)/h_i − α Σ_k a_ik (v_i − v_k) − w_i
///   ẇ_i   = α Σ_k a_ik (v_i − v_k)
RhsOutput rhs_known_h(const NetworkProblem& p, const FlowParams& params, const FlowState& s);

/// Same as rhs_known_h with h_i replaced by y_i^i, plus ẏ = −L y.
RhsOutput rhs_estimator(const NetworkProblem& p, const FlowParams& params, const FlowState& s,
                        double floor = kEstimatorFloor);

RhsOutput rhs(const NetworkProblem& p, const FlowParams& params, const FlowState& s, FlowMode mode);

/// e^{−L t}, the estimator trajectory from y(0) = I.
Eigen::MatrixXd estimator_closed_form(const Digraph& g, double t);

}  // namespace mpflow
