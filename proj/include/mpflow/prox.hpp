#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mpflow {

/// Generic proximal map θ ↦ argmin_δ { f(δ) + ½‖δ − θ‖² } on R^dim.
///
/// `subgradient_distance(δ, g)` returns dist(g, ∂f(δ)); leave it empty when no
/// subdifferential description is available. Both handles must be safe to
/// call concurrently.
struct ProxOperator {
  std::size_t dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluate;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> subgradient_distance;
};

/// φ(ξ₁, ξ₂) = ξ₁ − 1 if ξ₁ > ξ₂ + 1, ξ₁ + 1 if ξ₁ < ξ₂ − 1, else ξ₂.
double phi(double xi1, double xi2);

/// Soft threshold toward `anchor` with weight λ: prox of λ‖δ − p‖₁.
Eigen::VectorXd prox_l1_anchor(const Eigen::VectorXd& theta, const Eigen::VectorXd& anchor, double weight);

/// [φ(θ₁, θ₂), φ(θ₂, θ₁)]. This is the componentwise operator used for the
/// fused term of the fused-LASSO benchmark; it is nonexpansive but permutes
/// the components when |θ₁ − θ₂| ≤ 1, so it is not the proximal map of
/// |δ₁ − δ₂| (that one is prox_pairwise_exact).
Eigen::VectorXd prox_pairwise_phi(const Eigen::VectorXd& theta);

/// Exact prox of λ|δ₁ − δ₂|: averages when |θ₁ − θ₂| ≤ 2λ, otherwise moves
/// each component λ toward the other.
Eigen::VectorXd prox_pairwise_exact(const Eigen::VectorXd& theta, double weight = 1.0);

/// Euclidean projection onto the closed ball {δ : ‖δ − center‖ ≤ radius}.
Eigen::VectorXd prox_ball_indicator(const Eigen::VectorXd& theta, const Eigen::VectorXd& center, double radius);

/// Euclidean projection onto the box [lower, upper].
Eigen::VectorXd prox_box_indicator(const Eigen::VectorXd& theta, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper);

/// Relative slack accepted when deciding membership of an indicator set.
inline constexpr double kIndicatorTolerance = 1e-9;

/// One nonsmooth convex summand f_i^j of an agent's cost.
class NonsmoothTerm {
 public:
  struct L1Anchor {
    Eigen::VectorXd anchor;
    double weight = 1.0;
  };
  struct PairwisePhi {};
  struct PairwiseExact {
    double weight = 1.0;
  };
  struct BallIndicator {
    Eigen::VectorXd center;
    double radius = 1.0;
  };
  struct BoxIndicator {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
  };
  struct Zero {
    std::size_t dim = 1;
  };
  struct Custom {
    std::string name;
    ProxOperator op;
    std::function<double(const Eigen::VectorXd&)> value;          // optional
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> subgradient;  // optional
    bool indicator = false;
  };
  using Data = std::variant<L1Anchor, PairwisePhi, PairwiseExact, BallIndicator, BoxIndicator, Zero, Custom>;

  static NonsmoothTerm l1_anchor(Eigen::VectorXd anchor, double weight = 1.0);
  static NonsmoothTerm pairwise_phi();
  static NonsmoothTerm pairwise_exact(double weight = 1.0);
  static NonsmoothTerm ball_indicator(Eigen::VectorXd center, double radius);
  static NonsmoothTerm box_indicator(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static NonsmoothTerm zero(std::size_t dim);
  static NonsmoothTerm custom(Custom custom);

  /// Configuration tag: "l1_anchor", "pairwise_phi", "pairwise_exact", "ball", "box", "zero", "custom".
  std::string_view tag() const;
  std::size_t dim() const;
  bool is_indicator() const;
  const Data& data() const noexcept { return data_; }

  Eigen::VectorXd prox(const Eigen::VectorXd& theta) const;

  /// f(δ); +inf outside an indicator set. Throws ValueUnavailable for a custom
  /// term without a value handle.
  double value(const Eigen::VectorXd& delta) const;

  /// A subgradient of a non-indicator term (zero at kinks). Throws
  /// ValueUnavailable for indicators and custom terms without a handle.
  Eigen::VectorXd subgradient(const Eigen::VectorXd& delta) const;

  /// dist(g, ∂f(δ)) if the kind carries a subdifferential description.
  bool has_subgradient_witness() const;
  double subgradient_distance(const Eigen::VectorXd& delta, const Eigen::VectorXd& g) const;

  ProxOperator as_operator() const;

 private:
  explicit NonsmoothTerm(Data data) : data_(std::move(data)) {}
  Data data_;
};

struct ProxReport {
  std::size_t pairs = 0;
  /// max over pairs of max(0, ‖P(a) − P(b)‖ − ‖a − b‖).
  double max_nonexpansive_violation = 0.0;
  /// max over sampled θ of dist(θ − P(θ), ∂f(P(θ))); absent without a witness.
  std::optional<double> max_fixed_point_residual;

  bool passed(double tol) const {
    return max_nonexpansive_violation <= tol && (!max_fixed_point_residual || *max_fixed_point_residual <= tol);
  }
};

/// Checks nonexpansiveness and, when a witness exists, the fixed-point
/// characterization θ − P(θ) ∈ ∂f(P(θ)). `samples` must be nonempty.
ProxReport validate_prox(const ProxOperator& op,
                         std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> samples);

/// Uniform draws in [lo, hi]^dim, reproducible for a given seed.
std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> random_sample_pairs(std::size_t dim, std::size_t count,
                                                                             double lo, double hi,
                                                                             std::uint64_t seed);

}  // namespace mpflow
