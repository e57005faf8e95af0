#include "mpflow/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shrink factor applied when a suggested constant lands on an excluded endpoint.
constexpr double kInteriorShrink = 0.9;

Eigen::VectorXd row(const Eigen::MatrixXd& m, std::size_t i) {
  return m.row(static_cast<Eigen::Index>(i)).transpose();
}

void require_shape(const Eigen::MatrixXd& block, const NetworkProblem& p, const char* name) {
  if (static_cast<std::size_t>(block.rows()) != p.n() || static_cast<std::size_t>(block.cols()) != p.q())
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be " + std::to_string(p.n()) + "x" +
                                                  std::to_string(p.q()));
}

}  // namespace

AgentSpec AgentSpec::quadratic(double weight, Eigen::VectorXd center, std::vector<NonsmoothTerm> terms,
                               Eigen::VectorXd d) {
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadratic weight must be positive");
  AgentSpec a;
  a.grad_f0 = [weight, center](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 2.0 * weight * (x - center); };
  a.f0_value = [weight, center](const Eigen::VectorXd& x) { return weight * (x - center).squaredNorm(); };
  a.c = 2.0 * weight;
  a.terms = std::move(terms);
  a.d = std::move(d);
  return a;
}

AgentSpec scale_smooth_cost(const AgentSpec& agent, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "cost scale factor must be positive");
  AgentSpec out = agent;
  out.grad_f0 = [g = agent.grad_f0, factor](const Eigen::VectorXd& x) -> Eigen::VectorXd { return factor * g(x); };
  if (agent.f0_value)
    out.f0_value = [f = agent.f0_value, factor](const Eigen::VectorXd& x) { return factor * f(x); };
  out.c = factor * agent.c;
  return out;
}

NetworkProblem::NetworkProblem(std::vector<AgentSpec> agents, Digraph graph, double spectral_tol)
    : agents_(std::move(agents)), graph_(std::move(graph)) {
  if (agents_.empty()) throw Error(ErrorCode::InvalidArgument, "problem needs at least one agent");
  if (agents_.size() != graph_.size())
    throw Error(ErrorCode::DimensionMismatch, "agent count " + std::to_string(agents_.size()) +
                                                  " does not match graph size " + std::to_string(graph_.size()));
  const std::size_t q = agents_.front().q();
  const std::size_t m = agents_.front().m();
  if (q == 0) throw Error(ErrorCode::DimensionMismatch, "resource vectors must be non-empty");
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "each agent needs at least two nonsmooth terms");
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    const std::string where = "agent " + std::to_string(i);
    if (a.q() != q) throw Error(ErrorCode::DimensionMismatch, where + ": dimension differs from agent 0");
    if (a.m() != m) throw Error(ErrorCode::DimensionMismatch, where + ": term count differs from agent 0");
    if (!a.grad_f0) throw Error(ErrorCode::InvalidArgument, where + ": missing smooth-cost gradient");
    if (!(a.c > 0.0)) throw Error(ErrorCode::InvalidArgument, where + ": strong-convexity modulus must be positive");
    for (std::size_t j = 0; j < a.terms.size(); ++j)
      if (a.terms[j].dim() != q)
        throw Error(ErrorCode::DimensionMismatch, where + ": term " + std::to_string(j) + " has dimension " +
                                                      std::to_string(a.terms[j].dim()));
  }
  d_.resize(static_cast<Eigen::Index>(agents_.size()), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < agents_.size(); ++i) d_.row(static_cast<Eigen::Index>(i)) = agents_[i].d.transpose();
  laplacian_ = mpflow::laplacian(graph_);
  if (is_strongly_connected(graph_)) spectral_ = spectral_data(graph_, spectral_tol);
}

const SpectralData& NetworkProblem::spectral() const {
  if (!spectral_) throw Error(ErrorCode::NotStronglyConnected, "graph is not strongly connected");
  return *spectral_;
}

double NetworkProblem::min_c() const {
  double c = kInf;
  for (const auto& a : agents_) c = std::min(c, a.c);
  return c;
}

bool AssumptionReport::passed() const {
  return strongly_connected &&
         std::all_of(agents.begin(), agents.end(), [](const auto& a) { return a.modulus_ok && a.spot_check_ok; });
}

AssumptionReport validate_assumptions(const NetworkProblem& p, std::uint64_t seed, std::size_t pairs) {
  AssumptionReport report;
  report.strongly_connected = is_strongly_connected(p.graph());
  if (!report.strongly_connected) report.messages.emplace_back("graph is not strongly connected");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  const auto draw = [&] {
    Eigen::VectorXd v(static_cast<Eigen::Index>(p.q()));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = dist(rng);
    return v;
  };
  const double m1 = static_cast<double>(p.m()) - 1.0;

  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& a = p.agent(i);
    AgentAssumptionCheck check;
    check.agent = i;
    check.c_declared = a.c;
    check.c_observed = kInf;
    for (std::size_t k = 0; k < pairs; ++k) {
      const Eigen::VectorXd u = draw();
      const Eigen::VectorXd v = draw();
      const double sq = (u - v).squaredNorm();
      if (sq == 0.0) continue;
      check.c_observed = std::min(check.c_observed, (a.grad_f0(u) - a.grad_f0(v)).dot(u - v) / sq);
    }
    check.spot_check_ok = check.c_observed >= a.c * (1.0 - 1e-9) - 1e-12;
    check.modulus_ok = a.c > m1;
    std::ostringstream msg;
    if (!check.modulus_ok) {
      check.scale_lower_bound = m1 / a.c;
      msg << "agent " << i + 1 << ": c = " << a.c << " does not exceed m - 1 = " << m1 << "; scale f0 by K > "
          << *check.scale_lower_bound;
      report.messages.push_back(msg.str());
      msg.str("");
    }
    if (!check.spot_check_ok) {
      msg << "agent " << i + 1 << ": declared c = " << a.c << " but sampled gradient pairs give " << check.c_observed;
      report.messages.push_back(msg.str());
    }
    report.agents.push_back(check);
  }
  return report;
}

FlowParams check_params(const NetworkProblem& p, double alpha, double gamma, double eta, double beta) {
  const auto& spec = p.spectral();
  const double m1 = static_cast<double>(p.m()) - 1.0;
  const double c = p.min_c();

  FlowParams out;
  out.alpha = alpha;
  out.gamma = gamma;
  out.eta = eta;
  out.beta = beta;
  out.beta_window_lo = (1.0 + gamma) * m1 / (2.0 * c);
  out.beta_window_hi = 2.0 / (1.0 + gamma);
  out.b1 = 1.0 - 0.5 * (1.0 + gamma) * beta;
  out.b2 = beta > 0.0 ? c - 0.5 * (1.0 + gamma) * m1 / beta : -kInf;
  out.eta_threshold = out.b2 > 0.0 ? std::max(1.0 / (out.b2 * spec.h_star) - 1.0, 0.0) : kInf;
  out.alpha_threshold = std::isinf(spec.lambda2) ? 0.0 : (eta + 1.0) * (eta + 1.0) / (eta * spec.lambda2);
  if (!(eta > 0.0)) out.alpha_threshold = kInf;

  auto& mg = out.margins;
  mg.gamma_lower = gamma;
  mg.gamma_upper = 1.0 / m1 - gamma;
  mg.beta_lower = beta - out.beta_window_lo;
  mg.beta_upper = out.beta_window_hi - beta;
  mg.eta = eta - out.eta_threshold;
  mg.alpha = alpha - out.alpha_threshold;

  out.gamma_admissible = mg.gamma_lower > 0.0 && mg.gamma_upper > 0.0;
  out.feasible = out.gamma_admissible && mg.beta_lower > 0.0 && mg.beta_upper > 0.0 && mg.eta > 0.0 &&
                 eta > 0.0 && mg.alpha > 0.0 && alpha > 0.0;
  return out;
}

namespace {

double midpoint_beta(const NetworkProblem& p, double gamma) {
  const double m1 = static_cast<double>(p.m()) - 1.0;
  const double lo = (1.0 + gamma) * m1 / (2.0 * p.min_c());
  const double hi = 2.0 / (1.0 + gamma);
  return 0.5 * (lo + hi);
}

double rule_eta(const NetworkProblem& p, double gamma, double beta) {
  const double m1 = static_cast<double>(p.m()) - 1.0;
  const double b2 = p.min_c() - 0.5 * (1.0 + gamma) * m1 / beta;
  if (!(b2 > 0.0)) return kInf;
  const double lower = std::max(1.0 / (b2 * p.spectral().h_star) - 1.0, 0.0);
  return lower > 0.0 ? 1.1 * lower : 1.0;
}

}  // namespace

FlowParams complete_params(const NetworkProblem& p, double alpha, double gamma, std::optional<double> eta,
                           std::optional<double> beta) {
  const double b = beta.value_or(midpoint_beta(p, gamma));
  const double e = eta.value_or(rule_eta(p, gamma, b));
  return check_params(p, alpha, gamma, e, b);
}

FlowParams suggest_params(const NetworkProblem& p) {
  const double m1 = static_cast<double>(p.m()) - 1.0;
  const double lambda2 = p.spectral().lambda2;
  double gamma = 1.0 / (2.0 * m1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double lo = (1.0 + gamma) * m1 / (2.0 * p.min_c());
    const double hi = 2.0 / (1.0 + gamma);
    if (!(lo < hi))
      throw Error(ErrorCode::InfeasibleProblem, "beta window is empty; the smooth costs are not convex enough");
    const double beta = 0.5 * (lo + hi);
    const double eta = rule_eta(p, gamma, beta);
    if (std::isinf(eta)) throw Error(ErrorCode::InfeasibleProblem, "b2 is not positive inside the beta window");
    const double alpha = std::isinf(lambda2) ? 1.0 : 1.1 * (eta + 1.0) * (eta + 1.0) / (eta * lambda2);
    FlowParams out = check_params(p, alpha, gamma, eta, beta);
    if (out.feasible) return out;
    gamma *= kInteriorShrink;
  }
  throw Error(ErrorCode::InfeasibleProblem, "could not find constants satisfying the convergence certificate");
}

double KktResidual::max() const { return std::max({r_x, r_z, r_feas, r_cons}); }

Eigen::MatrixXd smooth_gradient(const NetworkProblem& p, const Eigen::MatrixXd& x) {
  require_shape(x, p, "x");
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Eigen::VectorXd gi = p.agent(i).grad_f0(row(x, i));
    if (gi.size() != x.cols()) throw Error(ErrorCode::DimensionMismatch, "gradient handle returned wrong size");
    g.row(static_cast<Eigen::Index>(i)) = gi.transpose();
  }
  return g;
}

double smooth_value(const NetworkProblem& p, const Eigen::MatrixXd& x) {
  require_shape(x, p, "x");
  double total = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& a = p.agent(i);
    if (!a.f0_value) throw Error(ErrorCode::ValueUnavailable, "agent " + std::to_string(i) + " has no f0 value");
    total += a.f0_value(row(x, i));
  }
  return total;
}

double objective(const NetworkProblem& p, const Eigen::MatrixXd& x) {
  double total = smooth_value(p, x);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Eigen::VectorXd xi = row(x, i);
    for (const auto& term : p.agent(i).terms) {
      const double v = term.value(xi);
      if (std::isinf(v)) return kInf;
      total += v;
    }
  }
  return total;
}

KktResidual kkt_residual(const NetworkProblem& p, const FlowState& s, const FlowParams& params) {
  require_shape(s.x, p, "x");
  require_shape(s.v, p, "v");
  require_shape(s.w, p, "w");
  if (s.z.size() != p.m() - 1)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(p.m() - 1) + " auxiliary blocks");
  for (const auto& zj : s.z) require_shape(zj, p, "z");

  const Eigen::MatrixXd grad = smooth_gradient(p, s.x);
  const std::size_t last = p.m() - 1;
  double rx_sq = 0.0;
  std::vector<double> rz_sq(last, 0.0);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& a = p.agent(i);
    const Eigen::VectorXd xi = row(s.x, i);
    Eigen::VectorXd theta = xi - row(grad, i) + row(s.v, i);
    for (std::size_t j = 0; j < last; ++j) theta += params.gamma * row(s.z[j], i);
    rx_sq += (xi - a.terms[last].prox(theta)).squaredNorm();
    for (std::size_t j = 0; j < last; ++j)
      rz_sq[j] += (xi - a.terms[j].prox(xi - params.gamma * row(s.z[j], i))).squaredNorm();
  }

  KktResidual r;
  r.r_x = std::sqrt(rx_sq);
  for (double v : rz_sq) r.r_z = std::max(r.r_z, std::sqrt(v));
  r.r_feas = (s.x - p.resources()).colwise().sum().norm();
  r.r_cons = (p.laplacian() * s.v).norm();
  return r;
}

}  // namespace mpflow
