#include "mpflow/state.hpp"

#include "mpflow/error.hpp"

namespace mpflow {

bool FlowState::all_finite() const {
  if (!x.allFinite() || !v.allFinite() || !w.allFinite()) return false;
  for (const auto& zj : z)
    if (!zj.allFinite()) return false;
  return !y || y->allFinite();
}

Eigen::VectorXd FlowState::stacked_x() const { return stack_rows(x); }

bool FlowState::operator==(const FlowState& other) const {
  if (z.size() != other.z.size() || y.has_value() != other.y.has_value()) return false;
  const auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  if (!same(x, other.x) || !same(v, other.v) || !same(w, other.w)) return false;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (!same(z[j], other.z[j])) return false;
  return !y || same(*y, *other.y);
}

FlowState initial_state(const Eigen::MatrixXd& x0, std::size_t m, bool with_estimator) {
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "flows need at least two nonsmooth terms");
  FlowState s;
  s.x = x0;
  s.z.assign(m - 1, Eigen::MatrixXd::Zero(x0.rows(), x0.cols()));
  s.v = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  s.w = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  if (with_estimator) s.y = Eigen::MatrixXd::Identity(x0.rows(), x0.rows());
  return s;
}

Eigen::VectorXd stack_rows(const Eigen::MatrixXd& blocks) {
  Eigen::VectorXd out(blocks.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < blocks.rows(); ++i)
    for (Eigen::Index j = 0; j < blocks.cols(); ++j) out(k++) = blocks(i, j);
  return out;
}

Eigen::MatrixXd unstack_rows(const Eigen::VectorXd& stacked, std::size_t n, std::size_t q) {
  if (static_cast<std::size_t>(stacked.size()) != n * q)
    throw Error(ErrorCode::DimensionMismatch, "stacked vector length is not n*q");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = stacked(k++);
  return out;
}

}  // namespace mpflow
