#pragma once

// Independent reference computations and shared instances for the tests.
// Nothing here calls the library routines it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpflow/graph.hpp"
#include "mpflow/problem.hpp"
#include "mpflow/prox.hpp"
#include "mpflow/state.hpp"

namespace fixtures {

inline std::filesystem::path source_root() { return MPFLOW_SOURCE_DIR; }
inline std::filesystem::path scenario(const std::string& name) { return source_root() / "scenarios" / name; }

// Fused-LASSO instance with four agents.
inline Eigen::MatrixXd l4_weights() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 3) = 1.0;
  a(1, 0) = 1.0;
  a(1, 2) = 1.0;
  a(2, 1) = 1.0;
  a(3, 2) = 1.0;
  return a;
}

inline Eigen::MatrixXd l4_laplacian() {
  Eigen::MatrixXd l(4, 4);
  l << 1, 0, 0, -1, -1, 2, -1, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  return l;
}

inline Eigen::MatrixXd s5_x0() {
  Eigen::MatrixXd x(4, 2);
  x << -4, 5.5, 6, 5, 5, -3.5, -5, -5;
  return x;
}

inline Eigen::MatrixXd s5_d() {
  Eigen::MatrixXd d(4, 2);
  d << 2, -1, -1, 1, -1, -1, 2, 2;
  return d;
}

inline mpflow::NetworkProblem s5_problem(bool phi = false) {
  std::vector<mpflow::AgentSpec> agents;
  const Eigen::MatrixXd x0 = s5_x0();
  const Eigen::MatrixXd d = s5_d();
  for (int i = 0; i < 4; ++i) {
    const double off = i + 1 - 2.5;
    std::vector<mpflow::NonsmoothTerm> terms{
        mpflow::NonsmoothTerm::l1_anchor(Eigen::Vector2d(0.0, off)),
        phi ? mpflow::NonsmoothTerm::pairwise_phi() : mpflow::NonsmoothTerm::pairwise_exact(),
        mpflow::NonsmoothTerm::ball_indicator(x0.row(i).transpose(), 8.0)};
    agents.push_back(mpflow::AgentSpec::quadratic(2.0, Eigen::Vector2d(off, 0.0), terms, d.row(i).transpose()));
  }
  return mpflow::NetworkProblem(std::move(agents), mpflow::Digraph(l4_weights()));
}

// Optimum of the fused-LASSO instance from an external conic solver.
inline constexpr double kS5OptimalValue = 13.299496383972755;

// Left null vector via the SVD of L (smallest right singular vector of Lᵀ).
inline Eigen::VectorXd left_null_vector_svd(const Eigen::MatrixXd& l) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l.transpose(), Eigen::ComputeFullV);
  Eigen::VectorXd h = svd.matrixV().col(l.cols() - 1);
  return h / h.sum();
}

// e^A by scaling and squaring on a truncated Taylor series.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.25) ++squarings;
  const Eigen::MatrixXd b = a / std::pow(2.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Ring 0→1→…→n−1→0 plus random extra edges with random weights.
inline mpflow::Digraph random_strong_digraph(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.2, 3.0);
  std::bernoulli_distribution extra(0.3);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>((i + 1) % n), static_cast<Eigen::Index>(i)) = w(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && extra(rng)) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w(rng);
  if (n == 2) a(0, 1) = std::max(a(0, 1), 0.5);
  return mpflow::Digraph(a);
}

// An exact equilibrium of either flow, built backwards from a chosen x*:
// terms are l1 anchors placed off x* (so the subgradients are the signs) and
// the primal-update term is zero. Centers s_i make the consensus multiplier ν
// common; d is chosen so that w_i = −(x_i − d_i)/h_i keeps hᵀw = 0.
struct Equilibrium {
  mpflow::NetworkProblem problem;
  mpflow::FlowState state;
  Eigen::RowVectorXd nu;
};

inline Equilibrium make_equilibrium(const mpflow::Digraph& g, double weight, double gamma, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const Eigen::Index q = 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd x(n, q), anchor(n, q), shift(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < q; ++k) {
      x(i, k) = u(rng);
      anchor(i, k) = x(i, k) + (u(rng) > 0 ? 1.0 : -1.0) * (0.5 + std::abs(u(rng)));
      shift(i, k) = 0.3 * u(rng);
    }
  const Eigen::MatrixXd sign = (x - anchor).array().sign().matrix();
  const Eigen::RowVectorXd nu = Eigen::RowVector2d(0.7, -0.4);
  const double c = 2.0 * weight;
  // grad f0_i(x_i) = c (x_i - s_i) = nu - sign_i.
  const Eigen::MatrixXd s = x - ((nu.replicate(n, 1) - sign) / c);

  // h from the SVD oracle, d chosen with Σ(d − x) = 0 and w = −(x − d)/h.
  Eigen::MatrixXd lap = -g.weights();
  lap.diagonal() = g.weights().rowwise().sum();
  const Eigen::VectorXd h = left_null_vector_svd(lap);
  Eigen::MatrixXd d = x + shift;
  d.row(n - 1) -= shift.colwise().sum();

  std::vector<mpflow::AgentSpec> agents;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<mpflow::NonsmoothTerm> terms{mpflow::NonsmoothTerm::l1_anchor(anchor.row(i).transpose()),
                                             mpflow::NonsmoothTerm::zero(2)};
    agents.push_back(mpflow::AgentSpec::quadratic(weight, s.row(i).transpose(), terms, d.row(i).transpose()));
  }
  mpflow::NetworkProblem p(std::move(agents), g);

  mpflow::FlowState st;
  st.x = x;
  st.z = {-sign / gamma};  // −γ z ∈ ∂f¹(x)
  st.v = nu.replicate(n, 1);
  st.w = -(h.cwiseInverse().asDiagonal() * (x - d));
  return {std::move(p), std::move(st), nu};
}

}  // namespace fixtures
