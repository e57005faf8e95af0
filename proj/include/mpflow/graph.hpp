#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mpflow {

/// Weighted digraph. `weights(i, j)` is the weight a_ij of the edge j -> i,
/// i.e. node i receives information from node j.
class Digraph {
 public:
  struct Edge {
    std::size_t from;
    std::size_t to;
    double weight;
  };

  explicit Digraph(Eigen::MatrixXd weights);

  /// Builds an n-node graph from directed edges; repeated edges accumulate.
  static Digraph from_edges(std::size_t n, const std::vector<Edge>& edges);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }

  Eigen::VectorXd in_degrees() const { return weights_.rowwise().sum(); }
  Eigen::VectorXd out_degrees() const { return weights_.colwise().sum().transpose(); }

 private:
  Eigen::MatrixXd weights_;
};

struct SpectralData {
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd h;  ///< positive left null vector of the Laplacian, sums to one
  double h_star = 0.0;
  /// Second-smallest eigenvalue of (HL + L^T H)/2. +inf for a single node,
  /// where the consensus requirement is vacuous.
  double lambda2 = 0.0;
  bool balanced = false;
};

/// L = D_in - A.
Eigen::MatrixXd laplacian(const Digraph& g);

bool is_strongly_connected(const Digraph& g);

bool is_weight_balanced(const Digraph& g, double tol = 1e-12);

/// Throws NotStronglyConnected, or NumericalFailure when the left null space
/// of L is not one-dimensional at tolerance `tol`.
SpectralData spectral_data(const Digraph& g, double tol = 1e-9);

}  // namespace mpflow
