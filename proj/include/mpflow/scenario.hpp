#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "mpflow/integrator.hpp"
#include "mpflow/oracle.hpp"
#include "mpflow/problem.hpp"
#include "mpflow/prox.hpp"

namespace mpflow {

inline constexpr std::string_view kScenarioSchema = "mpflow.scenario/1";

/// f⁰ᵢ(x) = scale · weight · ‖x − center‖².
struct QuadraticCost {
  double weight = 1.0;
  Eigen::VectorXd center;
  double scale = 1.0;
};

struct AgentConfig {
  QuadraticCost f0;
  std::vector<NonsmoothTerm> terms;
  Eigen::VectorXd d;
  Eigen::VectorXd x0;
};

struct ParamsConfig {
  bool automatic = true;
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<double> eta;
  std::optional<double> beta;
};

enum class ModeSelection { KnownH, Estimator, Both };

std::string_view to_string(ModeSelection mode);
ModeSelection parse_mode(std::string_view text);  ///< throws ConfigError
std::vector<FlowMode> flow_modes(ModeSelection mode);

enum class OracleKind { None, Grid, Subgradient };

std::string_view to_string(OracleKind kind);

struct OracleConfig {
  OracleKind kind = OracleKind::None;
  std::vector<Interval> bounds;  ///< grid: one interval per coordinate
  std::size_t resolution = 200;
  std::size_t iters = 100000;    ///< subgradient
};

struct ScenarioConfig {
  std::string name;
  Eigen::MatrixXd weights;  ///< a_ij, i receives from j
  std::vector<AgentConfig> agents;
  ParamsConfig params;
  IntegratorConfig integrator;
  ModeSelection mode = ModeSelection::Estimator;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  double spectral_tol = 1e-9;
  double agreement_tol = 1e-2;
  OracleConfig oracle;
};

/// Parses a scenario document. Errors are ConfigError with a field path
/// ("agents[1].terms[0].radius: expected a number").
ScenarioConfig parse_scenario(const nlohmann::json& doc);

/// Reads and parses a file; JSON syntax errors report line and column.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical form with every default made explicit; parse_scenario of the
/// result reproduces the same configuration.
nlohmann::json normalized(const ScenarioConfig& cfg);

NetworkProblem build_problem(const ScenarioConfig& cfg);

/// "auto" defers to suggest_params; explicit constants go through complete_params.
FlowParams resolve_params(const ScenarioConfig& cfg, const NetworkProblem& problem);

FlowState scenario_initial_state(const ScenarioConfig& cfg, FlowMode mode);

}  // namespace mpflow
