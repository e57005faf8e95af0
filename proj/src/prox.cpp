#include "mpflow/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mpflow/error.hpp"

namespace mpflow {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_or_zero(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

void require_dim(const Eigen::VectorXd& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": expected dimension " + std::to_string(dim) +
                                                  ", got " + std::to_string(v.size()));
}

// Distance from g to the interval [lo, hi].
double interval_distance(double g, double lo, double hi) { return std::max({lo - g, g - hi, 0.0}); }

// Distance from g to { s·(1, −1) : s ∈ S }, S = λ·sign(u) (or [−λ, λ] at u = 0).
double pairwise_witness(const Eigen::VectorXd& delta, const Eigen::VectorXd& g, double weight) {
  const double u = delta(0) - delta(1);
  const double along = 0.5 * (g(0) - g(1));
  const double across = (g(0) + g(1)) / std::sqrt(2.0);
  double target;
  if (u > 0.0)
    target = weight;
  else if (u < 0.0)
    target = -weight;
  else
    target = std::clamp(along, -weight, weight);
  return std::hypot(across, std::sqrt(2.0) * (along - target));
}

}  // namespace

double phi(double xi1, double xi2) {
  if (xi1 > xi2 + 1.0) return xi1 - 1.0;
  if (xi1 < xi2 - 1.0) return xi1 + 1.0;
  return xi2;
}

Eigen::VectorXd prox_l1_anchor(const Eigen::VectorXd& theta, const Eigen::VectorXd& anchor, double weight) {
  require_dim(anchor, theta.size(), "l1_anchor anchor");
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "l1_anchor weight must be positive");
  Eigen::VectorXd out(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double t = theta(k);
    const double p = anchor(k);
    if (t > p + weight)
      out(k) = t - weight;
    else if (t < p - weight)
      out(k) = t + weight;
    else
      out(k) = p;
  }
  return out;
}

Eigen::VectorXd prox_pairwise_phi(const Eigen::VectorXd& theta) {
  require_dim(theta, 2, "pairwise_phi");
  Eigen::VectorXd out(2);
  out << phi(theta(0), theta(1)), phi(theta(1), theta(0));
  return out;
}

Eigen::VectorXd prox_pairwise_exact(const Eigen::VectorXd& theta, double weight) {
  require_dim(theta, 2, "pairwise_exact");
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "pairwise_exact weight must be positive");
  const double u = theta(0) - theta(1);
  Eigen::VectorXd out(2);
  if (std::abs(u) <= 2.0 * weight) {
    const double mid = 0.5 * (theta(0) + theta(1));
    out << mid, mid;
  } else {
    const double s = sign_or_zero(u) * weight;
    out << theta(0) - s, theta(1) + s;
  }
  return out;
}

Eigen::VectorXd prox_ball_indicator(const Eigen::VectorXd& theta, const Eigen::VectorXd& center, double radius) {
  require_dim(center, theta.size(), "ball center");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const Eigen::VectorXd offset = theta - center;
  const double dist = offset.norm();
  if (dist <= radius) return theta;
  return center + (radius / dist) * offset;
}

Eigen::VectorXd prox_box_indicator(const Eigen::VectorXd& theta, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  require_dim(lower, theta.size(), "box lower");
  require_dim(upper, theta.size(), "box upper");
  return theta.cwiseMax(lower).cwiseMin(upper);
}

NonsmoothTerm NonsmoothTerm::l1_anchor(Eigen::VectorXd anchor, double weight) {
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "l1_anchor weight must be positive");
  if (anchor.size() == 0) throw Error(ErrorCode::DimensionMismatch, "l1_anchor anchor must be non-empty");
  return NonsmoothTerm(L1Anchor{std::move(anchor), weight});
}

NonsmoothTerm NonsmoothTerm::pairwise_phi() { return NonsmoothTerm(PairwisePhi{}); }

NonsmoothTerm NonsmoothTerm::pairwise_exact(double weight) {
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "pairwise_exact weight must be positive");
  return NonsmoothTerm(PairwiseExact{weight});
}

NonsmoothTerm NonsmoothTerm::ball_indicator(Eigen::VectorXd center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  if (center.size() == 0) throw Error(ErrorCode::DimensionMismatch, "ball center must be non-empty");
  return NonsmoothTerm(BallIndicator{std::move(center), radius});
}

NonsmoothTerm NonsmoothTerm::box_indicator(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw Error(ErrorCode::DimensionMismatch, "box bounds must be non-empty and of equal length");
  if ((lower.array() > upper.array()).any())
    throw Error(ErrorCode::InvalidArgument, "box lower bound exceeds upper bound");
  return NonsmoothTerm(BoxIndicator{std::move(lower), std::move(upper)});
}

NonsmoothTerm NonsmoothTerm::zero(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "zero term needs a positive dimension");
  return NonsmoothTerm(Zero{dim});
}

NonsmoothTerm NonsmoothTerm::custom(Custom custom) {
  if (custom.op.dim == 0 || !custom.op.evaluate)
    throw Error(ErrorCode::InvalidArgument, "custom term needs a dimension and an evaluate handle");
  return NonsmoothTerm(std::move(custom));
}

std::string_view NonsmoothTerm::tag() const {
  return std::visit(Overloaded{
                        [](const L1Anchor&) -> std::string_view { return "l1_anchor"; },
                        [](const PairwisePhi&) -> std::string_view { return "pairwise_phi"; },
                        [](const PairwiseExact&) -> std::string_view { return "pairwise_exact"; },
                        [](const BallIndicator&) -> std::string_view { return "ball"; },
                        [](const BoxIndicator&) -> std::string_view { return "box"; },
                        [](const Zero&) -> std::string_view { return "zero"; },
                        [](const Custom&) -> std::string_view { return "custom"; },
                    },
                    data_);
}

std::size_t NonsmoothTerm::dim() const {
  return std::visit(Overloaded{
                        [](const L1Anchor& t) { return static_cast<std::size_t>(t.anchor.size()); },
                        [](const PairwisePhi&) { return std::size_t{2}; },
                        [](const PairwiseExact&) { return std::size_t{2}; },
                        [](const BallIndicator& t) { return static_cast<std::size_t>(t.center.size()); },
                        [](const BoxIndicator& t) { return static_cast<std::size_t>(t.lower.size()); },
                        [](const Zero& t) { return t.dim; },
                        [](const Custom& t) { return t.op.dim; },
                    },
                    data_);
}

bool NonsmoothTerm::is_indicator() const {
  return std::visit(Overloaded{
                        [](const BallIndicator&) { return true; },
                        [](const BoxIndicator&) { return true; },
                        [](const Custom& t) { return t.indicator; },
                        [](const auto&) { return false; },
                    },
                    data_);
}

Eigen::VectorXd NonsmoothTerm::prox(const Eigen::VectorXd& theta) const {
  require_dim(theta, static_cast<Eigen::Index>(dim()), "prox input");
  return std::visit(Overloaded{
                        [&](const L1Anchor& t) { return prox_l1_anchor(theta, t.anchor, t.weight); },
                        [&](const PairwisePhi&) { return prox_pairwise_phi(theta); },
                        [&](const PairwiseExact& t) { return prox_pairwise_exact(theta, t.weight); },
                        [&](const BallIndicator& t) { return prox_ball_indicator(theta, t.center, t.radius); },
                        [&](const BoxIndicator& t) { return prox_box_indicator(theta, t.lower, t.upper); },
                        [&](const Zero&) -> Eigen::VectorXd { return theta; },
                        [&](const Custom& t) {
                          Eigen::VectorXd out = t.op.evaluate(theta);
                          if (out.size() != theta.size() || !out.allFinite())
                            throw Error(ErrorCode::ProxFailure, "custom prox '" + t.name + "' returned an invalid vector");
                          return out;
                        },
                    },
                    data_);
}

double NonsmoothTerm::value(const Eigen::VectorXd& delta) const {
  require_dim(delta, static_cast<Eigen::Index>(dim()), "term value input");
  return std::visit(Overloaded{
                        [&](const L1Anchor& t) { return t.weight * (delta - t.anchor).lpNorm<1>(); },
                        [&](const PairwisePhi&) { return std::abs(delta(0) - delta(1)); },
                        [&](const PairwiseExact& t) { return t.weight * std::abs(delta(0) - delta(1)); },
                        [&](const BallIndicator& t) {
                          return (delta - t.center).norm() <= t.radius * (1.0 + kIndicatorTolerance) ? 0.0 : kInf;
                        },
                        [&](const BoxIndicator& t) {
                          const Eigen::ArrayXd slack =
                              Eigen::ArrayXd::Constant(delta.size(), kIndicatorTolerance) *
                              (1.0 + t.lower.array().abs().max(t.upper.array().abs()));
                          const bool inside = (delta.array() >= t.lower.array() - slack).all() &&
                                              (delta.array() <= t.upper.array() + slack).all();
                          return inside ? 0.0 : kInf;
                        },
                        [&](const Zero&) { return 0.0; },
                        [&](const Custom& t) {
                          if (!t.value)
                            throw Error(ErrorCode::ValueUnavailable, "custom term '" + t.name + "' has no value handle");
                          return t.value(delta);
                        },
                    },
                    data_);
}

Eigen::VectorXd NonsmoothTerm::subgradient(const Eigen::VectorXd& delta) const {
  require_dim(delta, static_cast<Eigen::Index>(dim()), "subgradient input");
  const auto pairwise = [&](double weight) {
    const double s = weight * sign_or_zero(delta(0) - delta(1));
    Eigen::VectorXd g(2);
    g << s, -s;
    return g;
  };
  return std::visit(Overloaded{
                        [&](const L1Anchor& t) -> Eigen::VectorXd {
                          return t.weight * (delta - t.anchor).unaryExpr(&sign_or_zero);
                        },
                        [&](const PairwisePhi&) { return pairwise(1.0); },
                        [&](const PairwiseExact& t) { return pairwise(t.weight); },
                        [&](const Zero&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(delta.size()); },
                        [&](const Custom& t) -> Eigen::VectorXd {
                          if (!t.subgradient || t.indicator)
                            throw Error(ErrorCode::ValueUnavailable,
                                        "custom term '" + t.name + "' has no subgradient handle");
                          return t.subgradient(delta);
                        },
                        [&](const auto&) -> Eigen::VectorXd {
                          throw Error(ErrorCode::ValueUnavailable, "indicator terms are handled by projection");
                        },
                    },
                    data_);
}

bool NonsmoothTerm::has_subgradient_witness() const {
  return std::visit(Overloaded{
                        [](const PairwisePhi&) { return false; },
                        [](const Custom& t) { return static_cast<bool>(t.op.subgradient_distance); },
                        [](const auto&) { return true; },
                    },
                    data_);
}

double NonsmoothTerm::subgradient_distance(const Eigen::VectorXd& delta, const Eigen::VectorXd& g) const {
  require_dim(delta, static_cast<Eigen::Index>(dim()), "witness point");
  require_dim(g, static_cast<Eigen::Index>(dim()), "witness direction");
  return std::visit(
      Overloaded{
          [&](const L1Anchor& t) {
            double sq = 0.0;
            for (Eigen::Index k = 0; k < delta.size(); ++k) {
              const double u = delta(k) - t.anchor(k);
              const double e = u == 0.0 ? interval_distance(g(k), -t.weight, t.weight)
                                        : std::abs(g(k) - t.weight * sign_or_zero(u));
              sq += e * e;
            }
            return std::sqrt(sq);
          },
          [&](const PairwisePhi&) -> double {
            throw Error(ErrorCode::ValueUnavailable, "pairwise_phi is not the prox of a convex function");
          },
          [&](const PairwiseExact& t) { return pairwise_witness(delta, g, t.weight); },
          [&](const BallIndicator& t) {
            const Eigen::VectorXd offset = delta - t.center;
            const double r = offset.norm();
            if (r < t.radius * (1.0 - 1e-12)) return g.norm();
            // Normal cone at a boundary point is the ray along the outward normal.
            const Eigen::VectorXd normal = offset / r;
            const double along = g.dot(normal);
            return along < 0.0 ? g.norm() : (g - along * normal).norm();
          },
          [&](const BoxIndicator& t) {
            double sq = 0.0;
            for (Eigen::Index k = 0; k < delta.size(); ++k) {
              double e;
              if (t.lower(k) == t.upper(k))
                e = 0.0;
              else if (delta(k) >= t.upper(k))
                e = std::max(-g(k), 0.0);
              else if (delta(k) <= t.lower(k))
                e = std::max(g(k), 0.0);
              else
                e = std::abs(g(k));
              sq += e * e;
            }
            return std::sqrt(sq);
          },
          [&](const Zero&) { return g.norm(); },
          [&](const Custom& t) -> double {
            if (!t.op.subgradient_distance)
              throw Error(ErrorCode::ValueUnavailable, "custom term '" + t.name + "' has no witness");
            return t.op.subgradient_distance(delta, g);
          },
      },
      data_);
}

ProxOperator NonsmoothTerm::as_operator() const {
  ProxOperator op;
  op.dim = dim();
  op.evaluate = [term = *this](const Eigen::VectorXd& theta) { return term.prox(theta); };
  if (has_subgradient_witness()) {
    op.subgradient_distance = [term = *this](const Eigen::VectorXd& delta, const Eigen::VectorXd& g) {
      return term.subgradient_distance(delta, g);
    };
  }
  return op;
}

ProxReport validate_prox(const ProxOperator& op,
                         std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "validate_prox needs at least one sample pair");
  if (!op.evaluate) throw Error(ErrorCode::InvalidArgument, "prox operator has no evaluate handle");
  ProxReport report;
  report.pairs = samples.size();
  if (op.subgradient_distance) report.max_fixed_point_residual = 0.0;

  const auto fixed_point = [&](const Eigen::VectorXd& theta, const Eigen::VectorXd& image) {
    if (!op.subgradient_distance) return;
    const double r = op.subgradient_distance(image, theta - image);
    report.max_fixed_point_residual = std::max(*report.max_fixed_point_residual, r);
  };

  for (const auto& [a, b] : samples) {
    if (a.size() != static_cast<Eigen::Index>(op.dim) || b.size() != static_cast<Eigen::Index>(op.dim))
      throw Error(ErrorCode::DimensionMismatch, "sample dimension does not match the operator");
    const Eigen::VectorXd pa = op.evaluate(a);
    const Eigen::VectorXd pb = op.evaluate(b);
    const double violation = (pa - pb).norm() - (a - b).norm();
    report.max_nonexpansive_violation = std::max(report.max_nonexpansive_violation, violation);
    fixed_point(a, pa);
    fixed_point(b, pb);
  }
  return report;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> random_sample_pairs(std::size_t dim, std::size_t count,
                                                                             double lo, double hi,
                                                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  const auto draw = [&] {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = dist(rng);
    return v;
  };
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd a = draw();
    Eigen::VectorXd b = draw();
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

}  // namespace mpflow
