#include "doctest.h"

#include <cmath>

#include "mpflow/error.hpp"
#include "mpflow/integrator.hpp"
#include "support/fixtures.hpp"

using mpflow::FlowMode;
using mpflow::IntegratorConfig;
using mpflow::Method;

namespace {

// n = 1, f⁰ = 2x², zero nonsmooth terms, d = 0: the flow is linear,
// d/dt [x, v] = [[−4, 1], [−1, 0]] [x, v] with z ≡ 0 and w ≡ 0.
mpflow::NetworkProblem scalar_problem() {
  return mpflow::NetworkProblem({mpflow::AgentSpec::quadratic(2.0, Eigen::VectorXd::Zero(1),
                                                              {mpflow::NonsmoothTerm::zero(1),
                                                               mpflow::NonsmoothTerm::zero(1)},
                                                              Eigen::VectorXd::Zero(1))},
                                mpflow::Digraph(Eigen::MatrixXd::Zero(1, 1)));
}

Eigen::Vector2d scalar_closed_form(double t) {
  Eigen::Matrix2d a;
  a << -4, 1, -1, 0;
  return fixtures::expm_taylor(a * t) * Eigen::Vector2d(1.0, 0.0);
}

IntegratorConfig config(Method method, double step, double t_end, std::size_t record_every = 1) {
  IntegratorConfig c;
  c.method = method;
  c.step = step;
  c.t_end = t_end;
  c.record_every = record_every;
  c.stop_tol = 0.0;
  return c;
}

}  // namespace

TEST_CASE("scalar flow follows its closed form") {
  const auto p = scalar_problem();
  const auto params = mpflow::check_params(p, 1.0, 0.5, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(Eigen::MatrixXd::Ones(1, 1), 2, false);

  const auto rk4 = mpflow::integrate(p, params, s0, config(Method::Rk4, 1e-2, 10.0, 10), FlowMode::KnownH);
  const auto euler = mpflow::integrate(p, params, s0, config(Method::Euler, 1e-3, 10.0, 100), FlowMode::KnownH);
  REQUIRE(rk4.times.size() == 101);
  REQUIRE(euler.times.size() == 101);
  double rk4_err = 0.0, euler_err = 0.0;
  for (std::size_t k = 0; k < rk4.times.size(); ++k) {
    const Eigen::Vector2d exact = scalar_closed_form(rk4.times[k]);
    rk4_err = std::max(rk4_err, std::abs(rk4.states[k].x(0, 0) - exact(0)) + std::abs(rk4.states[k].v(0, 0) - exact(1)));
    euler_err = std::max(euler_err,
                         std::abs(euler.states[k].x(0, 0) - exact(0)) + std::abs(euler.states[k].v(0, 0) - exact(1)));
    CHECK(rk4.states[k].z[0].isZero(0.0));
    CHECK(rk4.states[k].w.isZero(0.0));
  }
  CHECK(rk4_err <= 1e-8);
  CHECK(euler_err <= 5e-3);
  CHECK(euler_err > 1e-6);  // first order, visibly worse than RK4
  CHECK(std::abs(rk4.states.back().x(0, 0)) < 0.1);
  // the closed form changes sign, so F = 2x² is not monotone along this flow
  CHECK(scalar_closed_form(1.0)(0) < 0.0);
}

TEST_CASE("sampling grid and termination") {
  const auto p = scalar_problem();
  const auto params = mpflow::check_params(p, 1.0, 0.5, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(Eigen::MatrixXd::Ones(1, 1), 2, false);
  const auto tr = mpflow::integrate(p, params, s0, config(Method::Euler, 0.1, 1.1, 3), FlowMode::KnownH);
  // 11 steps: samples at steps 0, 3, 6, 9 and the final step 11
  REQUIRE(tr.times.size() == 5);
  CHECK(tr.times[1] == doctest::Approx(0.3));
  CHECK(tr.times.back() == doctest::Approx(1.1));
  CHECK(tr.steps == 11);
  CHECK(tr.termination == mpflow::Termination::Horizon);

  IntegratorConfig stop = config(Method::Euler, 1e-2, 1000.0, 50);
  stop.stop_tol = 1e-6;
  const auto settled = mpflow::integrate(p, params, s0, stop, FlowMode::KnownH);
  CHECK(settled.termination == mpflow::Termination::StopTolerance);
  CHECK(settled.monitors.back().sup_norm < 1e-6);
  CHECK(settled.times.back() < 1000.0);
}

TEST_CASE("invalid integrator configurations are rejected") {
  CHECK_THROWS_AS(config(Method::Euler, 1e-2, 1e-3).validate(), mpflow::Error);
  CHECK_THROWS_AS(config(Method::Euler, 0.0, 1.0).validate(), mpflow::Error);
  CHECK_THROWS_AS(config(Method::Euler, 1e-2, 1.0, 0).validate(), mpflow::Error);
  const auto p = scalar_problem();
  const auto params = mpflow::check_params(p, 1.0, 0.5, 1.0, 1.0);
  auto s0 = mpflow::initial_state(Eigen::MatrixXd::Ones(1, 1), 2, false);
  s0.w(0, 0) = 1.0;
  CHECK_THROWS_AS(mpflow::integrate(p, params, s0, config(Method::Euler, 1e-2, 1.0), FlowMode::KnownH), mpflow::Error);
}

TEST_CASE("too large a step is reported as divergence") {
  const auto p = fixtures::s5_problem();
  const auto params = mpflow::check_params(p, 5.0, 0.2, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(fixtures::s5_x0(), 3, false);
  const auto tr = mpflow::integrate(p, params, s0, config(Method::Euler, 2.0, 20000.0, 1), FlowMode::KnownH);
  CHECK(tr.termination == mpflow::Termination::NonFiniteState);
  CHECK_FALSE(tr.diagnostic.empty());
  CHECK(tr.states.back().all_finite());
  const auto summary = mpflow::summarize(p, tr);
  CHECK(summary.diverged);
}

TEST_CASE("conservation of the weighted integral state along sampled runs") {
  const auto p = fixtures::s5_problem();
  const auto params = mpflow::check_params(p, 5.0, 0.2, 1.0, 1.0);
  for (Method method : {Method::Euler, Method::Rk4}) {
    for (FlowMode mode : {FlowMode::KnownH, FlowMode::Estimator}) {
      const auto s0 = mpflow::initial_state(fixtures::s5_x0(), 3, mode == FlowMode::Estimator);
      const auto tr = mpflow::integrate(p, params, s0, config(method, 1e-2, 30.0, 10), mode);
      for (std::size_t k = 0; k < tr.times.size(); ++k)
        CHECK(tr.monitors[k].conservation <= 1e-10 * std::max(1.0, tr.states[k].w.norm()));
    }
  }
}

TEST_CASE("log-linear fit") {
  std::vector<double> t, y;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    y.push_back(3.0 * std::exp(-0.7 * t.back()));
  }
  const auto fit = mpflow::fit_log_decay(t, y, 1.0, 10.0);
  REQUIRE(fit.has_value());
  CHECK(fit->slope == doctest::Approx(-0.7).epsilon(1e-10));
  CHECK(std::exp(fit->intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit->r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit->samples == 91);
  CHECK_FALSE(mpflow::fit_log_decay(t, y, 20.0, 30.0).has_value());
}

TEST_CASE("estimator samples track the matrix exponential") {
  const auto p = fixtures::s5_problem();
  const auto params = mpflow::check_params(p, 5.0, 0.2, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(fixtures::s5_x0(), 3, true);
  const auto tr = mpflow::integrate(p, params, s0, config(Method::Rk4, 5e-3, 5.0, 100), FlowMode::Estimator);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Eigen::MatrixXd ref = fixtures::expm_taylor(-fixtures::l4_laplacian() * tr.times[k]);
    CHECK((*tr.states[k].y - ref).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("Lyapunov function vanishes at the reference and is positive elsewhere") {
  std::mt19937_64 rng(8);
  const auto g = fixtures::random_strong_digraph(4, rng);
  const auto eq = fixtures::make_equilibrium(g, 2.0, 0.3, 3);
  const auto params = mpflow::suggest_params(eq.problem);
  CHECK(mpflow::lyapunov_value(eq.problem, params, eq.state, eq.state) == doctest::Approx(0.0));
  auto s = eq.state;
  s.x(0, 0) += 0.5;
  s.v(1, 1) -= 0.25;
  CHECK(mpflow::lyapunov_value(eq.problem, params, s, eq.state) > 0.0);
}

TEST_CASE("runs are deterministic") {
  const auto p = fixtures::s5_problem();
  const auto params = mpflow::check_params(p, 5.0, 0.2, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(fixtures::s5_x0(), 3, true);
  const auto a = mpflow::integrate(p, params, s0, config(Method::Euler, 1e-3, 2.0, 100), FlowMode::Estimator);
  const auto b = mpflow::integrate(p, params, s0, config(Method::Euler, 1e-3, 2.0, 100), FlowMode::Estimator);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k] == b.states[k]);
}

TEST_CASE("summary fields") {
  const auto p = fixtures::s5_problem();
  const auto params = mpflow::check_params(p, 5.0, 0.2, 1.0, 1.0);
  const auto s0 = mpflow::initial_state(fixtures::s5_x0(), 3, true);
  const auto tr = mpflow::integrate(p, params, s0, config(Method::Euler, 1e-3, 12.0, 100), FlowMode::Estimator);
  const auto s = mpflow::summarize(p, tr);
  CHECK(s.samples == tr.times.size());
  CHECK(s.t_final == doctest::Approx(12.0));
  CHECK(s.min_estimator_diagonal > 0.0);
  REQUIRE(s.estimator_fit.has_value());
  CHECK(s.estimator_fit->slope < 0.0);
  CHECK(s.resource_gap.isApprox((tr.states.back().x - fixtures::s5_d()).colwise().sum().transpose()));
  CHECK(tr.has_lyapunov());
}
