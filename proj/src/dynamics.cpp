#include "mpflow/dynamics.hpp"

#include <algorithm>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

void require_state_shape(const NetworkProblem& p, const FlowState& s) {
  const auto n = static_cast<Eigen::Index>(p.n());
  const auto q = static_cast<Eigen::Index>(p.q());
  const auto ok = [&](const Eigen::MatrixXd& b) { return b.rows() == n && b.cols() == q; };
  if (!ok(s.x) || !ok(s.v) || !ok(s.w))
    throw Error(ErrorCode::DimensionMismatch, "state blocks must be " + std::to_string(n) + "x" + std::to_string(q));
  if (s.z.size() != p.m() - 1)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(p.m() - 1) + " auxiliary blocks, got " +
                                                  std::to_string(s.z.size()));
  for (const auto& zj : s.z)
    if (!ok(zj)) throw Error(ErrorCode::DimensionMismatch, "auxiliary block has the wrong shape");
}

// Shared by both flows; `gains` holds h_i or y_i^i.
RhsOutput primal_dual_rhs(const NetworkProblem& p, const FlowParams& params, const FlowState& s,
                          const Eigen::VectorXd& gains) {
  require_state_shape(p, s);
  const std::size_t last = p.m() - 1;
  const double gamma = params.gamma;
  const Eigen::MatrixXd grad = smooth_gradient(p, s.x);

  RhsOutput out;
  out.dx.resize(s.x.rows(), s.x.cols());
  out.dz.assign(last, Eigen::MatrixXd(s.x.rows(), s.x.cols()));

  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto& terms = p.agent(i).terms;
    const Eigen::VectorXd xi = s.x.row(r).transpose();
    Eigen::VectorXd theta = xi - grad.row(r).transpose() + s.v.row(r).transpose();
    for (std::size_t j = 0; j < last; ++j) theta += gamma * s.z[j].row(r).transpose();
    out.dx.row(r) = (terms[last].prox(theta) - xi).transpose();
    for (std::size_t j = 0; j < last; ++j)
      out.dz[j].row(r) = (terms[j].prox(xi - gamma * s.z[j].row(r).transpose()) - xi).transpose();
  }

  const Eigen::MatrixXd coupling = params.alpha * (p.laplacian() * s.v);
  out.dv = -(gains.cwiseInverse().asDiagonal() * (s.x - p.resources())) - coupling - s.w;
  out.dw = coupling;

  double sup = std::max({out.dx.cwiseAbs().maxCoeff(), out.dv.cwiseAbs().maxCoeff(), out.dw.cwiseAbs().maxCoeff()});
  for (const auto& dzj : out.dz) sup = std::max(sup, dzj.cwiseAbs().maxCoeff());
  out.sup_norm = sup;
  return out;
}

}  // namespace

std::string_view to_string(FlowMode mode) {
  switch (mode) {
    case FlowMode::KnownH: return "known_h";
    case FlowMode::Estimator: return "estimator";
  }
  return "unknown";
}

RhsOutput rhs_known_h(const NetworkProblem& p, const FlowParams& params, const FlowState& s) {
  return primal_dual_rhs(p, params, s, p.spectral().h);
}

RhsOutput rhs_estimator(const NetworkProblem& p, const FlowParams& params, const FlowState& s, double floor) {
  if (!s.y) throw Error(ErrorCode::InvalidArgument, "estimator flow needs the y block");
  const auto n = static_cast<Eigen::Index>(p.n());
  if (s.y->rows() != n || s.y->cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "y must be " + std::to_string(n) + "x" + std::to_string(n));
  const Eigen::VectorXd gains = s.y->diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(gains(i) > floor))
      throw Error(ErrorCode::EstimatorSingular,
                  "estimate y_" + std::to_string(i) + "^" + std::to_string(i) + " = " + std::to_string(gains(i)));
  }
  RhsOutput out = primal_dual_rhs(p, params, s, gains);
  out.dy = -(p.laplacian() * *s.y);
  out.sup_norm = std::max(out.sup_norm, out.dy->cwiseAbs().maxCoeff());
  return out;
}

RhsOutput rhs(const NetworkProblem& p, const FlowParams& params, const FlowState& s, FlowMode mode) {
  return mode == FlowMode::KnownH ? rhs_known_h(p, params, s) : rhs_estimator(p, params, s);
}

Eigen::MatrixXd estimator_closed_form(const Digraph& g, double t) {
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "time must be nonnegative");
  const Eigen::MatrixXd generator = -laplacian(g) * t;
  return generator.exp();
}

}  // namespace mpflow
