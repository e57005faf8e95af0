#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mpflow/integrator.hpp"
#include "mpflow/problem.hpp"
#include "mpflow/scenario.hpp"

namespace mpflow {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitNotConverged = 2 };

struct CommandOptions {
  std::filesystem::path config;
  bool force = false;
  std::optional<std::filesystem::path> out_dir;
  std::optional<ModeSelection> mode;
  bool dump_normalized = false;
};

/// Hard failures block a run unless forced; warnings are informational.
struct GateVerdict {
  std::vector<std::string> hard;
  std::vector<std::string> warnings;

  bool blocked() const noexcept { return !hard.empty(); }
};

GateVerdict gate(const NetworkProblem& problem, const FlowParams& params, const AssumptionReport& assumptions);

struct FlowRun {
  FlowMode mode = FlowMode::KnownH;
  Trajectory trajectory;
  Summary summary;
};

/// Integrates each requested mode from the scenario's initial state; with
/// `concurrent` the runs execute on separate threads.
std::vector<FlowRun> run_flows(const ScenarioConfig& cfg, const NetworkProblem& problem, const FlowParams& params,
                               const std::vector<FlowMode>& modes, bool concurrent);

/// Exit 0 when every run reached stop_tol, 2 when a run hit the horizon,
/// 1 on errors, a blocked gate or divergence.
int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Assumptions, spectral data and parameter margins; no simulation.
int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Runs both flows (or one mode twice) plus the configured oracle; exit 0 iff
/// every pairwise agreement check passes.
int cmd_compare(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace mpflow
