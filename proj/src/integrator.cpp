#include "mpflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FlowState add_scaled(const FlowState& s, const RhsOutput& r, double h) {
  FlowState out;
  out.x = s.x + h * r.dx;
  out.z.reserve(s.z.size());
  for (std::size_t j = 0; j < s.z.size(); ++j) out.z.push_back(s.z[j] + h * r.dz[j]);
  out.v = s.v + h * r.dv;
  out.w = s.w + h * r.dw;
  if (s.y) out.y = *s.y + h * *r.dy;
  return out;
}

// s + h/6 (k1 + 2 k2 + 2 k3 + k4)
FlowState rk4_combine(const FlowState& s, const RhsOutput& k1, const RhsOutput& k2, const RhsOutput& k3,
                      const RhsOutput& k4, double h) {
  const double c = h / 6.0;
  const auto mix = [c](const Eigen::MatrixXd& base, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::MatrixXd& d, const Eigen::MatrixXd& e) -> Eigen::MatrixXd {
    return base + c * (a + 2.0 * b + 2.0 * d + e);
  };
  FlowState out;
  out.x = mix(s.x, k1.dx, k2.dx, k3.dx, k4.dx);
  for (std::size_t j = 0; j < s.z.size(); ++j) out.z.push_back(mix(s.z[j], k1.dz[j], k2.dz[j], k3.dz[j], k4.dz[j]));
  out.v = mix(s.v, k1.dv, k2.dv, k3.dv, k4.dv);
  out.w = mix(s.w, k1.dw, k2.dw, k3.dw, k4.dw);
  if (s.y) out.y = mix(*s.y, *k1.dy, *k2.dy, *k3.dy, *k4.dy);
  return out;
}

class Recorder {
 public:
  Recorder(const NetworkProblem& p, const FlowParams& params, Trajectory& tr)
      : p_(p), params_(params), tr_(tr), h_(p.spectral().h) {
    try {
      (void)objective(p_, p_.resources());
      objective_available_ = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ValueUnavailable) throw;
    }
  }

  bool objective_available() const noexcept { return objective_available_; }

  void record(double t, const FlowState& s, const RhsOutput& r) {
    Monitor m;
    const KktResidual res = kkt_residual(p_, s, params_);
    m.r_x = res.r_x;
    m.r_z = res.r_z;
    m.r_feas = res.r_feas;
    m.r_cons = res.r_cons;
    m.F = objective_available_ ? objective(p_, s.x) : kNaN;
    m.conservation = (h_.transpose() * s.w).norm();
    m.sup_norm = r.sup_norm;
    if (s.y) m.y_error = (*s.y - Eigen::VectorXd::Ones(h_.size()) * h_.transpose()).norm();
    tr_.times.push_back(t);
    tr_.states.push_back(s);
    tr_.monitors.push_back(m);
  }

 private:
  const NetworkProblem& p_;
  const FlowParams& params_;
  Trajectory& tr_;
  Eigen::VectorXd h_;
  bool objective_available_ = false;
};

}  // namespace

std::string_view to_string(Method method) { return method == Method::Euler ? "euler" : "rk4"; }

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::StopTolerance: return "stop_tolerance";
    case Termination::Horizon: return "horizon";
    case Termination::NonFiniteState: return "non_finite_state";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidArgument, "integrator step must be positive");
  if (!(t_end >= step) || !std::isfinite(t_end))
    throw Error(ErrorCode::InvalidArgument, "integrator horizon t_end must be at least one step");
  if (record_every < 1) throw Error(ErrorCode::InvalidArgument, "record_every must be at least 1");
  if (!(stop_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop_tol must be nonnegative");
}

Trajectory integrate(const NetworkProblem& p, const FlowParams& params, const FlowState& s0,
                     const IntegratorConfig& cfg, FlowMode mode) {
  cfg.validate();
  if (!s0.w.isZero(0.0)) throw Error(ErrorCode::InvalidArgument, "integral state w must start at zero");
  FlowState s = s0;
  if (mode == FlowMode::Estimator && !s.y) s.y = Eigen::MatrixXd::Identity(s.x.rows(), s.x.rows());
  if (mode == FlowMode::KnownH) s.y.reset();
  if (!s.all_finite()) throw Error(ErrorCode::NonFiniteState, "initial state is not finite");

  Trajectory tr;
  tr.mode = mode;
  tr.config = cfg;
  Recorder recorder(p, params, tr);

  const auto total_steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.step));
  const double dt = cfg.step;
  std::size_t k = 0;
  RhsOutput r = rhs(p, params, s, mode);
  recorder.record(0.0, s, r);
  bool recorded = true;

  while (true) {
    if (r.sup_norm < cfg.stop_tol) {
      tr.termination = Termination::StopTolerance;
      break;
    }
    if (k >= total_steps) {
      tr.termination = Termination::Horizon;
      break;
    }
    FlowState next;
    if (cfg.method == Method::Euler) {
      next = add_scaled(s, r, dt);
    } else {
      const RhsOutput k2 = rhs(p, params, add_scaled(s, r, 0.5 * dt), mode);
      const RhsOutput k3 = rhs(p, params, add_scaled(s, k2, 0.5 * dt), mode);
      const RhsOutput k4 = rhs(p, params, add_scaled(s, k3, dt), mode);
      next = rk4_combine(s, r, k2, k3, k4, dt);
    }
    if (!next.all_finite()) {
      tr.termination = Termination::NonFiniteState;
      tr.diagnostic = "state became non-finite after step " + std::to_string(k + 1) +
                      "; the step size is too large for these parameters";
      break;
    }
    s = std::move(next);
    ++k;
    r = rhs(p, params, s, mode);
    recorded = k % cfg.record_every == 0;
    if (recorded) recorder.record(static_cast<double>(k) * dt, s, r);
  }
  if (!recorded) recorder.record(static_cast<double>(k) * dt, s, r);
  tr.steps = k;

  if (cfg.lyapunov && recorder.objective_available()) attach_lyapunov(p, params, tr);
  return tr;
}

double lyapunov_value(const NetworkProblem& p, const FlowParams& params, const FlowState& s, const FlowState& ref) {
  if (s.z.size() != ref.z.size()) throw Error(ErrorCode::DimensionMismatch, "reference state has a different shape");
  const Eigen::VectorXd& h = p.spectral().h;
  const double eta = params.eta;
  const double gamma = params.gamma;

  const Eigen::MatrixXd xb = s.x - ref.x;
  double v1 = 0.5 * xb.squaredNorm();
  for (std::size_t j = 0; j < s.z.size(); ++j) {
    const Eigen::MatrixXd zb = s.z[j] - ref.z[j];
    v1 += 0.5 * gamma * (zb.squaredNorm() - 2.0 * (xb.array() * zb.array()).sum());
  }
  v1 *= eta + 1.0;

  const Eigen::MatrixXd grad_ref = smooth_gradient(p, ref.x);
  const double v2 =
      (eta + 1.0) * (smooth_value(p, s.x) - smooth_value(p, ref.x) - (xb.array() * grad_ref.array()).sum());

  const Eigen::MatrixXd vb = s.v - ref.v;
  const Eigen::MatrixXd vw = vb + (s.w - ref.w);
  const double v3 = 0.5 * eta * (h.asDiagonal() * vb.cwiseAbs2()).sum() + 0.5 * (h.asDiagonal() * vw.cwiseAbs2()).sum();
  return v1 + v2 + v3;
}

void attach_lyapunov(const NetworkProblem& p, const FlowParams& params, Trajectory& tr) {
  if (tr.empty()) return;
  const FlowState& ref = tr.states.back();
  for (std::size_t k = 0; k < tr.states.size(); ++k)
    tr.monitors[k].lyapunov = lyapunov_value(p, params, tr.states[k], ref);
}

std::optional<LinearFit> fit_log_decay(const std::vector<double>& times, const std::vector<double>& values,
                                       double t_lo, double t_hi) {
  std::vector<double> ts;
  std::vector<double> ls;
  for (std::size_t k = 0; k < std::min(times.size(), values.size()); ++k) {
    if (times[k] >= t_lo && times[k] <= t_hi && values[k] > 0.0) {
      ts.push_back(times[k]);
      ls.push_back(std::log(values[k]));
    }
  }
  if (ts.size() < 3) return std::nullopt;
  const auto n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    ml += ls[k];
  }
  mt /= n;
  ml /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    stl += (ts[k] - mt) * (ls[k] - ml);
    sll += (ls[k] - ml) * (ls[k] - ml);
  }
  if (stt == 0.0) return std::nullopt;
  LinearFit fit;
  fit.slope = stl / stt;
  fit.intercept = ml - fit.slope * mt;
  fit.r2 = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
  fit.samples = ts.size();
  return fit;
}

Summary summarize(const NetworkProblem& p, const Trajectory& tr, double fit_lo, double fit_hi) {
  if (tr.empty()) throw Error(ErrorCode::InvalidArgument, "cannot summarize an empty trajectory");
  Summary s;
  s.mode = tr.mode;
  s.termination = tr.termination;
  s.diverged = tr.termination == Termination::NonFiniteState;
  s.diagnostic = tr.diagnostic;
  s.t_final = tr.times.back();
  s.steps = tr.steps;
  s.samples = tr.times.size();

  const Monitor& last = tr.monitors.back();
  s.final_residual = {last.r_x, last.r_z, last.r_feas, last.r_cons};
  s.final_F = last.F;
  s.final_sup_norm = last.sup_norm;
  s.x_final = tr.states.back().x;
  s.resource_gap = (s.x_final - p.resources()).colwise().sum().transpose();

  std::vector<double> y_errors;
  s.min_estimator_diagonal = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Monitor& m = tr.monitors[k];
    if (!s.settling_time && m.sup_norm < tr.config.stop_tol) s.settling_time = tr.times[k];
    s.max_conservation = std::max(s.max_conservation, m.conservation);
    s.max_conservation_ratio =
        std::max(s.max_conservation_ratio, m.conservation / std::max(1.0, tr.states[k].w.norm()));
    if (m.y_error) y_errors.push_back(*m.y_error);
    if (tr.states[k].y) s.min_estimator_diagonal = std::min(s.min_estimator_diagonal, tr.states[k].y->diagonal().minCoeff());
  }
  if (y_errors.size() == tr.times.size()) s.estimator_fit = fit_log_decay(tr.times, y_errors, fit_lo, fit_hi);
  if (tr.mode == FlowMode::KnownH) s.min_estimator_diagonal = 0.0;
  return s;
}

}  // namespace mpflow
