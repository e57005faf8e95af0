#include "mpflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

// Nodes reachable from `root` following information flow j -> i (a_ij > 0).
// With `reversed`, follows i -> j instead.
std::vector<bool> reachable(const Eigen::MatrixXd& a, std::size_t root, bool reversed) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{root};
  seen[root] = true;
  while (!stack.empty()) {
    const std::size_t j = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < n; ++i) {
      const double w = reversed ? a(j, i) : a(i, j);
      if (w > 0.0 && !seen[i]) {
        seen[i] = true;
        stack.push_back(i);
      }
    }
  }
  return seen;
}

}  // namespace

Digraph::Digraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() == 0 || weights_.rows() != weights_.cols())
    throw Error(ErrorCode::DimensionMismatch, "adjacency matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  "self-loop weight at node " + std::to_string(i) + " must be zero");
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      if (!std::isfinite(weights_(i, j)) || weights_(i, j) < 0.0)
        throw Error(ErrorCode::InvalidArgument, "adjacency weights must be finite and nonnegative");
    }
  }
}

Digraph Digraph::from_edges(std::size_t n, const std::vector<Edge>& edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    if (e.from >= n || e.to >= n)
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    if (e.from == e.to) throw Error(ErrorCode::InvalidArgument, "self-loops are not allowed");
    a(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(e.from)) += e.weight;
  }
  return Digraph(std::move(a));
}

Eigen::MatrixXd laplacian(const Digraph& g) {
  Eigen::MatrixXd l = -g.weights();
  l.diagonal() = g.in_degrees();
  return l;
}

bool is_strongly_connected(const Digraph& g) {
  const auto forward = reachable(g.weights(), 0, false);
  const auto backward = reachable(g.weights(), 0, true);
  return std::all_of(forward.begin(), forward.end(), [](bool b) { return b; }) &&
         std::all_of(backward.begin(), backward.end(), [](bool b) { return b; });
}

bool is_weight_balanced(const Digraph& g, double tol) {
  const Eigen::VectorXd diff = g.in_degrees() - g.out_degrees();
  const double scale = std::max(1.0, g.weights().cwiseAbs().maxCoeff());
  return diff.cwiseAbs().maxCoeff() <= tol * scale;
}

SpectralData spectral_data(const Digraph& g, double tol) {
  if (!is_strongly_connected(g))
    throw Error(ErrorCode::NotStronglyConnected, "graph is not strongly connected");

  const auto n = static_cast<Eigen::Index>(g.size());
  SpectralData out;
  out.laplacian = laplacian(g);
  out.balanced = is_weight_balanced(g);
  const double scale = std::max(1.0, out.laplacian.cwiseAbs().maxCoeff());

  if (n == 1) {
    out.h = Eigen::VectorXd::Ones(1);
    out.h_star = 1.0;
    out.lambda2 = std::numeric_limits<double>::infinity();
    return out;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(out.laplacian.transpose());
  lu.setThreshold(tol);
  if (lu.rank() != n - 1)
    throw Error(ErrorCode::NumericalFailure,
                "left null space of the Laplacian has dimension " + std::to_string(n - lu.rank()));

  // Stack L^T h = 0 with the normalization 1^T h = 1; the system is consistent
  // and has full column rank once the null space is one-dimensional.
  Eigen::MatrixXd system(n + 1, n);
  system.topRows(n) = out.laplacian.transpose();
  system.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  Eigen::VectorXd h = system.colPivHouseholderQr().solve(rhs);
  h /= h.sum();

  if ((out.laplacian.transpose() * h).cwiseAbs().maxCoeff() > tol * scale)
    throw Error(ErrorCode::NumericalFailure, "left eigenvector residual exceeds tolerance");
  if (h.minCoeff() <= 0.0)
    throw Error(ErrorCode::NumericalFailure, "left eigenvector is not strictly positive");
  out.h = h;
  out.h_star = h.minCoeff();

  const Eigen::MatrixXd hl = h.asDiagonal() * out.laplacian;
  const Eigen::MatrixXd sym = 0.5 * (hl + hl.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::NumericalFailure, "symmetric eigensolver failed");
  out.lambda2 = eig.eigenvalues()(1);
  if (out.lambda2 <= 0.0)
    throw Error(ErrorCode::NumericalFailure, "lambda2 of the symmetrized Laplacian is not positive");
  return out;
}

}  // namespace mpflow
