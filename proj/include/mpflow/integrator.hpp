#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mpflow/dynamics.hpp"
#include "mpflow/problem.hpp"
#include "mpflow/state.hpp"

namespace mpflow {

enum class Method { Euler, Rk4 };

std::string_view to_string(Method method);

struct IntegratorConfig {
  Method method = Method::Euler;
  double step = 1e-3;
  double t_end = 50.0;
  double stop_tol = 1e-6;         ///< stop once the RHS sup-norm drops below this
  std::size_t record_every = 1;   ///< sample stride in steps
  bool lyapunov = true;           ///< post-hoc Lyapunov pass against the final state

  /// Throws InvalidArgument unless step > 0, t_end ≥ step, record_every ≥ 1.
  void validate() const;
};

struct Monitor {
  double F = 0.0;
  double r_x = 0.0;
  double r_z = 0.0;
  double r_feas = 0.0;
  double r_cons = 0.0;
  double conservation = 0.0;  ///< ‖Σ_i h_i w_i‖
  double sup_norm = 0.0;
  std::optional<double> lyapunov;
  std::optional<double> y_error;  ///< ‖y − 1 hᵀ‖_F, estimator mode only
};

enum class Termination { StopTolerance, Horizon, NonFiniteState };

std::string_view to_string(Termination termination);

struct Trajectory {
  FlowMode mode = FlowMode::KnownH;
  IntegratorConfig config;
  std::vector<double> times;
  std::vector<FlowState> states;
  std::vector<Monitor> monitors;
  Termination termination = Termination::Horizon;
  std::size_t steps = 0;
  std::string diagnostic;

  bool empty() const noexcept { return times.empty(); }
  bool has_lyapunov() const { return !monitors.empty() && monitors.front().lyapunov.has_value(); }
};

/// Fixed-step explicit integration of either flow. Samples are recorded at
/// t = 0, every `record_every` steps and at termination. A non-finite state
/// ends the run with Termination::NonFiniteState; the trajectory then ends at
/// the last finite state. EstimatorSingular and module errors propagate.
Trajectory integrate(const NetworkProblem& p, const FlowParams& params, const FlowState& s0,
                     const IntegratorConfig& cfg, FlowMode mode);

/// V = V₁ + V₂ + V₃ with deviations taken against `ref`:
///   V₁ = (η+1)[½‖x̄‖² + ½γ Σ_j (‖z̄ʲ‖² − 2 x̄ᵀz̄ʲ)]
///   V₂ = (η+1)[F⁰(x) − F⁰(x*) − x̄ᵀ∇F⁰(x*)]
///   V₃ = (η/2) v̄ᵀH v̄ + ½ (v̄ + w̄)ᵀH(v̄ + w̄)
double lyapunov_value(const NetworkProblem& p, const FlowParams& params, const FlowState& s, const FlowState& ref);

/// Fills Monitor::lyapunov using the final recorded state as reference.
void attach_lyapunov(const NetworkProblem& p, const FlowParams& params, Trajectory& tr);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};

/// Least-squares line through (t, log value) over samples with t in [t_lo, t_hi]
/// and value > 0. Empty when fewer than three samples qualify.
std::optional<LinearFit> fit_log_decay(const std::vector<double>& times, const std::vector<double>& values,
                                       double t_lo, double t_hi);

struct Summary {
  FlowMode mode = FlowMode::KnownH;
  Termination termination = Termination::Horizon;
  bool diverged = false;
  std::string diagnostic;
  double t_final = 0.0;
  std::size_t steps = 0;
  std::size_t samples = 0;
  KktResidual final_residual;
  double final_F = 0.0;
  double final_sup_norm = 0.0;
  std::optional<double> settling_time;
  double max_conservation = 0.0;        ///< max ‖Σ h_i w_i‖
  double max_conservation_ratio = 0.0;  ///< max ‖Σ h_i w_i‖ / max(1, ‖w‖)
  std::optional<LinearFit> estimator_fit;
  double min_estimator_diagonal = 0.0;  ///< min over samples of min_i y_i^i (estimator mode)
  Eigen::MatrixXd x_final;
  Eigen::VectorXd resource_gap;  ///< Σ x_i − Σ d_i at the final sample
};

Summary summarize(const NetworkProblem& p, const Trajectory& tr, double fit_lo = 1.0, double fit_hi = 10.0);

}  // namespace mpflow
