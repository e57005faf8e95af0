#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpflow/graph.hpp"
#include "mpflow/prox.hpp"
#include "mpflow/state.hpp"

namespace mpflow {

/// One agent: smooth strongly convex f⁰ (gradient handle, optional value
/// handle, declared modulus c), the ordered nonsmooth terms f¹..fᵐ and its
/// resource vector d. The last term is the one whose prox drives the primal
/// update; the others each get an auxiliary state.
struct AgentSpec {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_f0;
  std::function<double(const Eigen::VectorXd&)> f0_value;
  double c = 0.0;
  std::vector<NonsmoothTerm> terms;
  Eigen::VectorXd d;

  std::size_t q() const noexcept { return static_cast<std::size_t>(d.size()); }
  std::size_t m() const noexcept { return terms.size(); }

  /// f⁰(x) = weight·‖x − center‖², so ∇f⁰ = 2·weight·(x − center), c = 2·weight.
  static AgentSpec quadratic(double weight, Eigen::VectorXd center, std::vector<NonsmoothTerm> terms,
                             Eigen::VectorXd d);
};

/// Replaces f⁰ by K·f⁰ (gradient, value and modulus scale together).
AgentSpec scale_smooth_cost(const AgentSpec& agent, double factor);

class NetworkProblem {
 public:
  /// Validates the structure (agent count, uniform q and m, m ≥ 2, term
  /// dimensions). Spectral data is computed only for strongly connected graphs;
  /// the flows and the parameter gate require it.
  NetworkProblem(std::vector<AgentSpec> agents, Digraph graph, double spectral_tol = 1e-9);

  std::size_t n() const noexcept { return agents_.size(); }
  std::size_t q() const noexcept { return agents_.front().q(); }
  std::size_t m() const noexcept { return agents_.front().m(); }

  const std::vector<AgentSpec>& agents() const noexcept { return agents_; }
  const AgentSpec& agent(std::size_t i) const { return agents_.at(i); }
  const Digraph& graph() const noexcept { return graph_; }
  const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }

  bool has_spectral() const noexcept { return spectral_.has_value(); }
  /// Throws NotStronglyConnected when the graph is not strongly connected.
  const SpectralData& spectral() const;

  /// Smallest declared strong-convexity modulus over the agents.
  double min_c() const;

  /// n×q matrix of resource vectors and their column sum Σ d_i.
  const Eigen::MatrixXd& resources() const noexcept { return d_; }
  Eigen::VectorXd total_resource() const { return d_.colwise().sum().transpose(); }

 private:
  std::vector<AgentSpec> agents_;
  Digraph graph_;
  Eigen::MatrixXd laplacian_;
  std::optional<SpectralData> spectral_;
  Eigen::MatrixXd d_;
};

struct AgentAssumptionCheck {
  std::size_t agent = 0;
  double c_declared = 0.0;
  double c_observed = 0.0;  ///< min of the strong-convexity ratio over sampled pairs
  bool modulus_ok = false;  ///< c > m − 1
  bool spot_check_ok = false;
  std::optional<double> scale_lower_bound;  ///< K must exceed this when !modulus_ok
};

struct AssumptionReport {
  bool strongly_connected = false;
  std::vector<AgentAssumptionCheck> agents;
  std::vector<std::string> messages;

  bool passed() const;
};

/// Checks c > m − 1 per agent, strong connectivity, and spot-checks the
/// strong-convexity inequality of grad_f0 on random pairs.
AssumptionReport validate_assumptions(const NetworkProblem& p, std::uint64_t seed = 1, std::size_t pairs = 64);

struct ParamMargins {
  double gamma_lower = 0.0;   ///< γ
  double gamma_upper = 0.0;   ///< 1/(m−1) − γ
  double beta_lower = 0.0;    ///< β − (1+γ)(m−1)/(2c)
  double beta_upper = 0.0;    ///< 2/(1+γ) − β
  double eta = 0.0;           ///< η − max{1/(b₂h*) − 1, 0}
  double alpha = 0.0;         ///< α − (η+1)²/(η λ₂)
};

struct FlowParams {
  double alpha = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double beta = 0.0;
  double b1 = 0.0;  ///< 1 − ½(1+γ)β
  double b2 = 0.0;  ///< c − ½(1+γ)(m−1)/β
  double beta_window_lo = 0.0;
  double beta_window_hi = 0.0;
  double eta_threshold = 0.0;
  double alpha_threshold = 0.0;
  ParamMargins margins;
  /// 0 < γ < 1/(m−1): required by the flows themselves.
  bool gamma_admissible = false;
  /// Every strict inequality of the convergence certificate holds.
  bool feasible = false;
};

/// Evaluates the convergence certificate for the given constants.
FlowParams check_params(const NetworkProblem& p, double alpha, double gamma, double eta, double beta);

/// Picks analysis constants (β, η) by the suggest_params rules for a given
/// (α, γ) and evaluates the certificate.
FlowParams complete_params(const NetworkProblem& p, double alpha, double gamma,
                           std::optional<double> eta = std::nullopt, std::optional<double> beta = std::nullopt);

/// γ = 1/(2(m−1)), β = midpoint of its window, η = 1.1·(η lower bound) or 1,
/// α = 1.1·(η+1)²/(η λ₂). Throws InfeasibleProblem if the β window is empty.
FlowParams suggest_params(const NetworkProblem& p);

struct KktResidual {
  double r_x = 0.0;
  double r_z = 0.0;
  double r_feas = 0.0;
  double r_cons = 0.0;

  double max() const;
};

/// Residuals of the prox fixed-point equations, the resource constraint and
/// multiplier consensus.
KktResidual kkt_residual(const NetworkProblem& p, const FlowState& s, const FlowParams& params);

/// ∇F⁰ as an n×q matrix.
Eigen::MatrixXd smooth_gradient(const NetworkProblem& p, const Eigen::MatrixXd& x);

/// F⁰(x); throws ValueUnavailable when an agent lacks f0_value.
double smooth_value(const NetworkProblem& p, const Eigen::MatrixXd& x);

/// F(x) = Σ_i [f⁰_i + Σ_j f^j_i]; +inf outside an indicator set.
double objective(const NetworkProblem& p, const Eigen::MatrixXd& x);

}  // namespace mpflow
