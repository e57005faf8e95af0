#include "mpflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kDykstraMaxCycles = 20000;

Eigen::MatrixXd project_affine(const NetworkProblem& p, const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd excess = (x.colwise().sum() - p.total_resource().transpose()) / static_cast<double>(p.n());
  return x.rowwise() - excess;
}

struct IndicatorRef {
  std::size_t agent;
  std::size_t term;
};

std::vector<IndicatorRef> indicator_terms(const NetworkProblem& p) {
  std::vector<IndicatorRef> out;
  for (std::size_t i = 0; i < p.n(); ++i)
    for (std::size_t j = 0; j < p.m(); ++j)
      if (p.agent(i).terms[j].is_indicator()) out.push_back({i, j});
  return out;
}

}  // namespace

std::string_view to_string(OracleMethod method) { return method == OracleMethod::Grid ? "grid" : "subgradient"; }

Eigen::MatrixXd project_feasible(const NetworkProblem& p, const Eigen::MatrixXd& x) {
  const auto sets = indicator_terms(p);
  if (sets.empty()) return project_affine(p, x);

  Eigen::MatrixXd y = x;
  std::vector<Eigen::VectorXd> inc(sets.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.q())));
  Eigen::MatrixXd inc_affine = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (std::size_t cycle = 0; cycle < kDykstraMaxCycles; ++cycle) {
    const Eigen::MatrixXd prev = y;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const auto r = static_cast<Eigen::Index>(sets[s].agent);
      const Eigen::VectorXd u = y.row(r).transpose() + inc[s];
      const Eigen::VectorXd proj = p.agent(sets[s].agent).terms[sets[s].term].prox(u);
      inc[s] = u - proj;
      y.row(r) = proj.transpose();
    }
    const Eigen::MatrixXd u = y + inc_affine;
    y = project_affine(p, u);
    inc_affine = u - y;
    if ((y - prev).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + y.cwiseAbs().maxCoeff())) break;
  }
  return y;
}

OracleResult solve_grid(const NetworkProblem& p, const std::vector<Interval>& bounds, std::size_t resolution) {
  const std::size_t q = p.q();
  const std::size_t free_dims = (p.n() - 1) * q;
  if (bounds.size() != q)
    throw Error(ErrorCode::DimensionMismatch, "grid needs one interval per coordinate (" + std::to_string(q) + ")");
  for (const auto& b : bounds)
    if (!(b.hi > b.lo)) throw Error(ErrorCode::InvalidArgument, "grid interval must have hi > lo");
  if (resolution == 0) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  if (free_dims > kGridMaxFreeDims)
    throw Error(ErrorCode::ScaleTooLarge, std::to_string(free_dims) + " free coordinates exceed the grid cap of " +
                                              std::to_string(kGridMaxFreeDims));
  if (resolution > kGridMaxResolution)
    throw Error(ErrorCode::ScaleTooLarge, "grid resolution exceeds " + std::to_string(kGridMaxResolution));
  const double points_per_axis = static_cast<double>(resolution + 1);
  if (std::pow(points_per_axis, static_cast<double>(free_dims)) > kGridMaxPoints)
    throw Error(ErrorCode::ScaleTooLarge, "grid would need more than " + std::to_string(kGridMaxPoints) + " points");

  const auto n = static_cast<Eigen::Index>(p.n());
  const Eigen::VectorXd total = p.total_resource();
  std::vector<std::size_t> index(free_dims, 0);

  // Free coordinate k belongs to agent k / q, component k % q.
  const auto coordinate = [&](std::size_t k, std::size_t idx) {
    const Interval& b = bounds[k % q];
    return b.lo + (b.hi - b.lo) * static_cast<double>(idx) / static_cast<double>(resolution);
  };
  const auto point_at = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < free_dims; ++k)
      x(static_cast<Eigen::Index>(k / q), static_cast<Eigen::Index>(k % q)) = coordinate(k, idx[k]);
    x.row(n - 1) = total.transpose() - x.topRows(n - 1).colwise().sum();
    return x;
  };

  OracleResult best;
  best.method = OracleMethod::Grid;
  best.F_star = kInf;
  std::vector<std::size_t> best_index;
  std::size_t evaluations = 0;
  std::vector<double> values;
  bool done = false;
  while (!done) {
    const Eigen::MatrixXd x = point_at(index);
    const double f = objective(p, x);
    ++evaluations;
    if (f < best.F_star) {
      best.F_star = f;
      best.x_star = x;
      best_index = index;
    }
    // Odometer with the last coordinate fastest gives lexicographic order.
    done = true;
    for (std::size_t k = free_dims; k-- > 0;) {
      if (++index[k] <= resolution) {
        done = false;
        break;
      }
      index[k] = 0;
    }
    if (free_dims == 0) done = true;
  }

  auto& cert = best.certificate;
  cert.evaluations = evaluations;
  cert.spacing = (bounds.front().hi - bounds.front().lo) / static_cast<double>(resolution);
  if (std::isinf(best.F_star)) {
    cert.no_feasible_point = true;
    best.x_star = point_at(std::vector<std::size_t>(free_dims, 0));
    cert.feasibility_gap = 0.0;
    return best;
  }
  cert.feasibility_gap = (best.x_star.colwise().sum().transpose() - total).norm();

  // Re-scan for ties and the best axis neighbour.
  const double tie_tol = 1e-12 * std::max(1.0, std::abs(best.F_star));
  std::fill(index.begin(), index.end(), 0);
  done = false;
  while (!done) {
    if (std::abs(objective(p, point_at(index)) - best.F_star) <= tie_tol) ++cert.ties;
    done = true;
    for (std::size_t k = free_dims; k-- > 0;) {
      if (++index[k] <= resolution) {
        done = false;
        break;
      }
      index[k] = 0;
    }
    if (free_dims == 0) done = true;
  }
  double neighbor = kInf;
  for (std::size_t k = 0; k < free_dims; ++k) {
    for (int dir : {-1, 1}) {
      if (dir < 0 && best_index[k] == 0) continue;
      if (dir > 0 && best_index[k] == resolution) continue;
      auto nb = best_index;
      nb[k] = static_cast<std::size_t>(static_cast<long long>(nb[k]) + dir);
      neighbor = std::min(neighbor, objective(p, point_at(nb)) - best.F_star);
    }
  }
  if (std::isfinite(neighbor)) cert.best_neighbor_gap = neighbor;
  return best;
}

OracleResult solve_subgradient(const NetworkProblem& p, const Eigen::MatrixXd& x0, const SubgradientOptions& options) {
  if (static_cast<std::size_t>(x0.rows()) != p.n() || static_cast<std::size_t>(x0.cols()) != p.q())
    throw Error(ErrorCode::DimensionMismatch, "x0 must be n x q");
  if (options.iters == 0) throw Error(ErrorCode::InvalidArgument, "iteration count must be positive");
  const double a = options.step_scale.value_or(2.0 / p.min_c());
  const double b = options.step_offset;

  OracleResult best;
  best.method = OracleMethod::Subgradient;
  Eigen::MatrixXd x = project_feasible(p, x0);
  best.x_star = x;
  best.F_star = objective(p, x);

  auto& cert = best.certificate;
  const std::size_t stride = std::max<std::size_t>(1, options.iters / std::max<std::size_t>(1, options.checkpoints));
  for (std::size_t k = 0; k < options.iters; ++k) {
    Eigen::MatrixXd g = smooth_gradient(p, x);
    for (std::size_t i = 0; i < p.n(); ++i) {
      const Eigen::VectorXd xi = x.row(static_cast<Eigen::Index>(i)).transpose();
      for (const auto& term : p.agent(i).terms)
        if (!term.is_indicator()) g.row(static_cast<Eigen::Index>(i)) += term.subgradient(xi).transpose();
    }
    const double step = a / (static_cast<double>(k) + b);
    const Eigen::MatrixXd next = project_feasible(p, x - step * g);
    cert.last_step_norm = (next - x).norm();
    x = next;
    const double f = objective(p, x);
    if (f < best.F_star) {
      best.F_star = f;
      best.x_star = x;
    }
    if ((k + 1) % stride == 0) cert.best_history.push_back(best.F_star);
  }
  cert.iterations = options.iters;
  cert.evaluations = options.iters + 1;
  cert.feasibility_gap = (best.x_star.colwise().sum().transpose() - p.total_resource()).norm();
  cert.no_feasible_point = std::isinf(best.F_star);
  return best;
}

}  // namespace mpflow
