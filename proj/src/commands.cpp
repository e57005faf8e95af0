#include "mpflow/commands.hpp"

#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mpflow/error.hpp"
#include "mpflow/report.hpp"

namespace mpflow {

using nlohmann::json;

namespace {

struct Loaded {
  ScenarioConfig cfg;
  NetworkProblem problem;
};

Loaded load(const CommandOptions& o) {
  ScenarioConfig cfg = load_scenario(o.config);
  if (o.mode) cfg.mode = *o.mode;
  if (o.out_dir) cfg.output_dir = o.out_dir->string();
  NetworkProblem problem = build_problem(cfg);
  return {std::move(cfg), std::move(problem)};
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

std::string row_list(const Eigen::MatrixXd& x) {
  std::ostringstream s;
  s << "[";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s << (i ? ", " : "") << "(";
    for (Eigen::Index k = 0; k < x.cols(); ++k) s << (k ? ", " : "") << fmt(x(i, k));
    s << ")";
  }
  s << "]";
  return s.str();
}

std::string vector_list(const Eigen::VectorXd& v) {
  std::ostringstream s;
  s << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << fmt(v(i));
  s << "]";
  return s.str();
}

void print_params(std::ostream& out, const std::string& label, const FlowParams& p) {
  out << label << ": alpha = " << fmt(p.alpha) << ", gamma = " << fmt(p.gamma) << ", eta = " << fmt(p.eta)
      << ", beta = " << fmt(p.beta) << "\n";
  out << "  beta window (" << fmt(p.beta_window_lo) << ", " << fmt(p.beta_window_hi) << "), eta > "
      << fmt(p.eta_threshold) << ", alpha > " << fmt(p.alpha_threshold) << "\n";
  const auto& m = p.margins;
  out << "  margins: gamma " << fmt(m.gamma_lower) << " / " << fmt(m.gamma_upper) << ", beta " << fmt(m.beta_lower)
      << " / " << fmt(m.beta_upper) << ", eta " << fmt(m.eta) << ", alpha " << fmt(m.alpha) << "\n";
  out << "  certificate: " << (p.feasible ? "feasible" : "not satisfied") << "\n";
}

int run_exit_code(const std::vector<FlowRun>& runs) {
  int code = kExitOk;
  for (const auto& r : runs) {
    if (r.summary.diverged) return kExitFailure;
    if (r.summary.termination == Termination::Horizon) code = kExitNotConverged;
  }
  return code;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitFailure;
}

// Shared preamble of run and compare: assumptions, parameters, gate.
std::optional<FlowParams> admitted_params(const Loaded& l, const CommandOptions& o, std::ostream& out,
                                          std::ostream& err) {
  const AssumptionReport assumptions = validate_assumptions(l.problem, l.cfg.seed);
  if (!assumptions.strongly_connected) {
    err << "error: graph is not strongly connected\n";
    return std::nullopt;
  }
  const FlowParams params = resolve_params(l.cfg, l.problem);
  const GateVerdict verdict = gate(l.problem, params, assumptions);
  for (const auto& w : verdict.warnings) err << "warning: " << w << "\n";
  for (const auto& h : verdict.hard) err << (o.force ? "warning: " : "error: ") << h << "\n";
  if (verdict.blocked() && !o.force) {
    err << "refusing to run; pass --force to override\n";
    return std::nullopt;
  }
  print_params(out, l.cfg.params.automatic ? "parameters (auto)" : "parameters", params);
  return params;
}

}  // namespace

GateVerdict gate(const NetworkProblem& problem, const FlowParams& params, const AssumptionReport& assumptions) {
  GateVerdict v;
  for (const auto& msg : assumptions.messages) v.hard.push_back(msg);
  if (!assumptions.passed() && assumptions.messages.empty()) v.hard.push_back("standing assumptions fail");
  if (!params.gamma_admissible)
    v.hard.push_back("gamma = " + fmt(params.gamma) + " is outside (0, 1/(m-1)) = (0, " +
                     fmt(1.0 / (static_cast<double>(problem.m()) - 1.0)) + ")");
  if (params.gamma_admissible && !params.feasible) {
    std::string what;
    const auto& m = params.margins;
    if (!(m.beta_lower > 0.0 && m.beta_upper > 0.0)) what += " beta";
    if (!(m.eta > 0.0)) what += " eta";
    if (!(m.alpha > 0.0)) what += " alpha";
    v.warnings.push_back("convergence certificate not satisfied (" + what.substr(what.empty() ? 0 : 1) +
                         "); alpha > " + fmt(params.alpha_threshold) + " would satisfy it");
  }
  return v;
}

std::vector<FlowRun> run_flows(const ScenarioConfig& cfg, const NetworkProblem& problem, const FlowParams& params,
                               const std::vector<FlowMode>& modes, bool concurrent) {
  const auto one = [&](FlowMode mode) {
    FlowRun r;
    r.mode = mode;
    r.trajectory = integrate(problem, params, scenario_initial_state(cfg, mode), cfg.integrator, mode);
    r.summary = summarize(problem, r.trajectory);
    return r;
  };
  std::vector<FlowRun> runs;
  if (!concurrent || modes.size() < 2) {
    for (FlowMode m : modes) runs.push_back(one(m));
    return runs;
  }
  std::vector<std::future<FlowRun>> jobs;
  for (FlowMode m : modes) jobs.push_back(std::async(std::launch::async, one, m));
  for (auto& j : jobs) runs.push_back(j.get());
  return runs;
}

int cmd_run(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(o);
    const auto params = admitted_params(l, o, out, err);
    if (!params) return static_cast<int>(kExitFailure);

    const auto runs = run_flows(l.cfg, l.problem, *params, flow_modes(l.cfg.mode), false);
    const std::filesystem::path dir = l.cfg.output_dir;
    json summaries = json::array();
    for (const auto& r : runs) {
      const std::string mode(to_string(r.mode));
      write_atomic(dir / ("trajectory_" + mode + ".csv"), trajectory_csv(r.trajectory, l.problem.m()));
      summaries.push_back(to_json(r.summary));
      const auto& s = r.summary;
      out << mode << ": " << to_string(s.termination) << " at t = " << fmt(s.t_final) << ", F = " << fmt(s.final_F)
          << ", max residual = " << fmt(s.final_residual.max()) << "\n";
      out << "  x = " << row_list(s.x_final) << "\n";
      if (!s.diagnostic.empty()) err << "warning: " << mode << ": " << s.diagnostic << "\n";
    }
    const json doc{{"scenario", l.cfg.name},
                   {"params", to_json(*params)},
                   {"spectral", to_json(l.problem.spectral())},
                   {"integrator",
                    {{"method", to_string(l.cfg.integrator.method)},
                     {"step", l.cfg.integrator.step},
                     {"t_end", l.cfg.integrator.t_end},
                     {"stop_tol", l.cfg.integrator.stop_tol},
                     {"record_every", l.cfg.integrator.record_every}}},
                   {"runs", summaries}};
    write_atomic(dir / "summary.json", doc.dump(2) + "\n");
    out << "wrote " << (dir / "summary.json").string() << "\n";
    return run_exit_code(runs);
  });
}

int cmd_check(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(o);
    if (o.dump_normalized) {
      const std::string text = normalized(l.cfg).dump(2) + "\n";
      if (o.out_dir) write_atomic(*o.out_dir / "normalized.json", text);
      out << text;
      return static_cast<int>(kExitOk);
    }

    const AssumptionReport a = validate_assumptions(l.problem, l.cfg.seed);
    out << "agents: " << l.problem.n() << ", q = " << l.problem.q() << ", m = " << l.problem.m() << "\n";
    out << "strongly connected: " << (a.strongly_connected ? "yes" : "no") << "\n";
    for (const auto& c : a.agents)
      out << "agent " << c.agent + 1 << ": c = " << fmt(c.c_declared) << " (sampled " << fmt(c.c_observed) << ")"
          << (c.modulus_ok && c.spot_check_ok ? "" : "  FAIL") << "\n";
    for (const auto& msg : a.messages) out << "  " << msg << "\n";
    if (!a.strongly_connected) return static_cast<int>(kExitFailure);

    const auto& s = l.problem.spectral();
    out << "h = " << vector_list(s.h) << ", h* = " << fmt(s.h_star) << "\n";
    out << "lambda2 = " << fmt(s.lambda2) << "\n";
    out << "balanced = " << (s.balanced ? "true" : "false") << "\n";

    const FlowParams params = resolve_params(l.cfg, l.problem);
    print_params(out, l.cfg.params.automatic ? "parameters (auto)" : "parameters", params);
    if (!l.cfg.params.automatic) {
      try {
        print_params(out, "suggested", suggest_params(l.problem));
      } catch (const Error& e) {
        out << "suggested: unavailable (" << e.what() << ")\n";
      }
    }
    const GateVerdict verdict = gate(l.problem, params, a);
    for (const auto& w : verdict.warnings) out << "warning: " << w << "\n";
    for (const auto& h : verdict.hard) out << "error: " << h << "\n";
    return static_cast<int>(verdict.blocked() ? kExitFailure : kExitOk);
  });
}

int cmd_compare(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(o);
    const auto params = admitted_params(l, o, out, err);
    if (!params) return static_cast<int>(kExitFailure);

    std::vector<FlowMode> modes = flow_modes(l.cfg.mode);
    if (modes.size() == 1) modes.push_back(modes.front());

    // Oracle runs alongside the flows.
    std::optional<std::future<OracleResult>> oracle;
    if (l.cfg.oracle.kind == OracleKind::Grid) {
      oracle = std::async(std::launch::async,
                          [&] { return solve_grid(l.problem, l.cfg.oracle.bounds, l.cfg.oracle.resolution); });
    } else if (l.cfg.oracle.kind == OracleKind::Subgradient) {
      oracle = std::async(std::launch::async, [&] {
        SubgradientOptions so;
        so.iters = l.cfg.oracle.iters;
        return solve_subgradient(l.problem, scenario_initial_state(l.cfg, FlowMode::KnownH).x, so);
      });
    }
    const auto runs = run_flows(l.cfg, l.problem, *params, modes, true);

    bool ok = true;
    json checks = json::array();
    const double tol = l.cfg.agreement_tol;
    for (const auto& r : runs) {
      if (r.summary.diverged) {
        ok = false;
        err << "error: " << to_string(r.mode) << " diverged: " << r.summary.diagnostic << "\n";
      }
    }
    for (std::size_t a = 0; a < runs.size(); ++a) {
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        const double dist = (runs[a].summary.x_final - runs[b].summary.x_final).norm();
        const double gap = std::abs(runs[a].summary.final_F - runs[b].summary.final_F);
        const bool pass = dist <= tol;
        ok = ok && pass;
        const std::string label = std::string(to_string(runs[a].mode)) + " vs " + std::string(to_string(runs[b].mode));
        out << label << ": |dx| = " << fmt(dist) << ", |dF| = " << fmt(gap) << (pass ? "  ok" : "  FAIL") << "\n";
        checks.push_back({{"pair", label}, {"distance", dist}, {"objective_gap", gap}, {"passed", pass}});
      }
    }

    json oracle_json = nullptr;
    if (oracle) {
      const OracleResult r = oracle->get();
      oracle_json = to_json(r);
      out << "oracle (" << to_string(r.method) << "): F* = " << fmt(r.F_star) << ", x* = " << row_list(r.x_star)
          << "\n";
      if (r.certificate.no_feasible_point) {
        ok = false;
        out << "oracle found no feasible point\n";
      }
      for (const auto& run : runs) {
        const std::string label = std::string(to_string(run.mode)) + " vs oracle";
        const double gap = run.summary.final_F - r.F_star;
        bool pass = false;
        json check{{"pair", label}, {"objective_gap", gap}};
        if (r.method == OracleMethod::Grid) {
          const double dev = (run.summary.x_final - r.x_star).cwiseAbs().maxCoeff();
          pass = dev <= r.certificate.spacing * (1.0 + 1e-9);
          check["max_coordinate_deviation"] = dev;
          check["spacing"] = r.certificate.spacing;
          out << label << ": max |dx_k| = " << fmt(dev) << " (spacing " << fmt(r.certificate.spacing) << ")";
        } else {
          pass = std::abs(gap) <= tol;
          out << label << ": F - F* = " << fmt(gap);
        }
        out << (pass ? "  ok" : "  FAIL") << "\n";
        check["passed"] = pass;
        checks.push_back(check);
        ok = ok && pass;
      }
    }

    json summaries = json::array();
    for (const auto& r : runs) summaries.push_back(to_json(r.summary));
    const json doc{{"scenario", l.cfg.name}, {"agreement_tol", tol}, {"checks", checks}, {"oracle", oracle_json},
                   {"runs", summaries}};
    const std::filesystem::path dir = l.cfg.output_dir;
    write_atomic(dir / "compare.json", doc.dump(2) + "\n");
    out << (ok ? "agreement: ok" : "agreement: FAIL") << "\n";
    return static_cast<int>(ok ? kExitOk : kExitFailure);
  });
}

}  // namespace mpflow
