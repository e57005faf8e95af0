#include "doctest.h"

#include <random>

#include <Eigen/Eigenvalues>

#include "mpflow/error.hpp"
#include "mpflow/graph.hpp"
#include "support/fixtures.hpp"

using mpflow::Digraph;

namespace {

template <typename F>
mpflow::ErrorCode thrown_code(F&& f) {
  try {
    f();
  } catch (const mpflow::Error& e) {
    return e.code();
  }
  FAIL("expected an mpflow::Error");
  return mpflow::ErrorCode::InvalidArgument;
}

// Eigenvalues of a symmetric matrix via the general (non-symmetric) solver.
Eigen::VectorXd sorted_real_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  Eigen::VectorXd ev = es.eigenvalues().real();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

}  // namespace

TEST_CASE("laplacian of the four-agent graph") {
  const Eigen::MatrixXd l = mpflow::laplacian(Digraph(fixtures::l4_weights()));
  CHECK(l.isApprox(fixtures::l4_laplacian(), 0.0));
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of an edgeless graph is zero") {
  CHECK(mpflow::laplacian(Digraph(Eigen::MatrixXd::Zero(3, 3))).isZero(0.0));
}

TEST_CASE("laplacian of the complete bidirectional triangle") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 3);
  a.diagonal().setZero();
  Eigen::MatrixXd expected = -Eigen::MatrixXd::Ones(3, 3);
  expected.diagonal().setConstant(2.0);
  CHECK(mpflow::laplacian(Digraph(a)) == expected);
}

TEST_CASE("edge list accumulates into a(to, from)") {
  const Digraph g = Digraph::from_edges(3, {{0, 1, 1.5}, {0, 1, 0.5}, {2, 0, 1.0}});
  CHECK(g.weight(1, 0) == 2.0);
  CHECK(g.weight(0, 2) == 1.0);
  CHECK(g.weight(0, 1) == 0.0);
  CHECK(g.in_degrees()(1) == 2.0);
  CHECK(g.out_degrees()(0) == 2.0);
}

TEST_CASE("digraph rejects invalid weights") {
  Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(2, 2);
  loop(1, 1) = 1.0;
  CHECK(thrown_code([&] { Digraph g(loop); }) == mpflow::ErrorCode::InvalidArgument);
  Eigen::MatrixXd negative = Eigen::MatrixXd::Zero(2, 2);
  negative(0, 1) = -1.0;
  CHECK(thrown_code([&] { Digraph g(negative); }) == mpflow::ErrorCode::InvalidArgument);
  CHECK(thrown_code([] { Digraph g(Eigen::MatrixXd::Zero(2, 3)); }) == mpflow::ErrorCode::DimensionMismatch);
  CHECK(thrown_code([] { Digraph::from_edges(2, {{0, 0, 1.0}}); }) == mpflow::ErrorCode::InvalidArgument);
}

TEST_CASE("strong connectivity") {
  CHECK(mpflow::is_strongly_connected(Digraph(fixtures::l4_weights())));
  CHECK_FALSE(mpflow::is_strongly_connected(Digraph(Eigen::MatrixXd::Zero(2, 2))));
  CHECK(mpflow::is_strongly_connected(Digraph::from_edges(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}})));
  // a path reaches every node from 0 but not back
  CHECK_FALSE(mpflow::is_strongly_connected(Digraph::from_edges(3, {{0, 1, 1}, {1, 2, 1}})));
  CHECK(mpflow::is_strongly_connected(Digraph(Eigen::MatrixXd::Zero(1, 1))));
}

TEST_CASE("spectral data of the four-agent graph") {
  const auto s = mpflow::spectral_data(Digraph(fixtures::l4_weights()));
  // hand elimination of hᵀL = 0: h2 = h1, h3 = 2 h1, h4 = h1
  const Eigen::Vector4d hand(0.2, 0.2, 0.4, 0.2);
  CHECK((s.h - hand).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((s.h - fixtures::left_null_vector_svd(fixtures::l4_laplacian())).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(s.h_star == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_FALSE(s.balanced);

  const Eigen::MatrixXd hm = hand.asDiagonal();
  const Eigen::MatrixXd l = fixtures::l4_laplacian();
  const Eigen::VectorXd ev = sorted_real_eigenvalues(0.5 * (hm * l + l.transpose() * hm));
  CHECK(std::abs(ev(0)) <= 1e-12);
  CHECK(s.lambda2 == doctest::Approx(ev(1)).epsilon(1e-10));
  CHECK(s.lambda2 == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("balanced graph has uniform h") {
  const Digraph ring = Digraph::from_edges(5, {{0, 1, 2}, {1, 2, 2}, {2, 3, 2}, {3, 4, 2}, {4, 0, 2}});
  const auto s = mpflow::spectral_data(ring);
  CHECK(s.balanced);
  CHECK((s.h.array() - 0.2).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("directed two-cycle with unequal weights") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 3, 0;  // a12 = 1, a21 = 3
  const auto s = mpflow::spectral_data(Digraph(a));
  // h1 a12 = h2 a21 by hand, so h ∝ [3, 1]
  CHECK(s.h(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.h(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("spectral data requires strong connectivity") {
  CHECK(thrown_code([] { mpflow::spectral_data(Digraph::from_edges(3, {{0, 1, 1}, {1, 2, 1}})); }) ==
        mpflow::ErrorCode::NotStronglyConnected);
}

TEST_CASE("property: spectral invariants on random strongly connected digraphs") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
    const Digraph g = fixtures::random_strong_digraph(n, rng);
    REQUIRE(mpflow::is_strongly_connected(g));
    const auto s = mpflow::spectral_data(g);
    const double scale = std::max(1.0, s.laplacian.cwiseAbs().maxCoeff());
    CHECK(s.laplacian.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((s.h.transpose() * s.laplacian).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK(s.h.minCoeff() > 0.0);
    CHECK(std::abs(s.h.sum() - 1.0) <= 1e-14);
    CHECK((s.h - fixtures::left_null_vector_svd(s.laplacian)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(s.h_star == s.h.minCoeff());

    const Eigen::MatrixXd hm = s.h.asDiagonal();
    const Eigen::MatrixXd bold = 0.5 * (hm * s.laplacian + s.laplacian.transpose() * hm);
    CHECK((bold - bold.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd ev = sorted_real_eigenvalues(bold);
    CHECK(std::abs(ev(0)) <= 1e-10 * scale);
    CHECK(s.lambda2 > 0.0);
    CHECK(s.lambda2 == doctest::Approx(ev(1)).epsilon(1e-8));
    CHECK(s.balanced == ((g.in_degrees() - g.out_degrees()).cwiseAbs().maxCoeff() <= 1e-12));
  }
}
