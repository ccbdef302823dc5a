#include <doctest.h>

#include "stackelberg/oracle.hpp"
#include "stackelberg/posterior.hpp"
#include "stackelberg/sdp.hpp"
#include "stackelberg/verify.hpp"
#include "support/instances.hpp"

using namespace stackelberg;
using testing::Rng;

namespace {

// Sum of the negative eigenvalues of Sigma^{1/2} V Sigma^{1/2}, computed
// through a Cholesky factor instead of the symmetric root: the spectra agree.
double single_stage_value(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd c = sigma.llt().matrixL();
  const Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.transpose() * v * c).eigenvalues();
  return lam.cwiseMin(0.0).sum();
}

const Eigen::MatrixXd kExampleV = (Eigen::MatrixXd(2, 2) << -1.0, -1.0, -1.0, 0.0).finished();

}  // namespace

TEST_CASE("build_sdp shapes and errors") {
  const ProcessModel m = testing::scenario_model(1, 10);
  const SdpProblem prob = build_sdp(covariance_schedule(m), MatrixList(10, kExampleV), m.a);
  CHECK(prob.horizon() == 10);
  CHECK(prob.dim() == 2);
  const SdpProblem one = build_sdp({m.sigma1}, {kExampleV}, m.a);
  CHECK(one.horizon() == 1);
  CHECK_THROWS_AS(build_sdp({m.sigma1}, {Eigen::MatrixXd::Zero(3, 3)}, m.a), DimensionMismatch);
  CHECK_THROWS_AS(build_sdp({m.sigma1, m.sigma1}, {kExampleV}, m.a), DimensionMismatch);
}

TEST_CASE("zero objective gives a feasible zero-value point") {
  const ProcessModel m = testing::scenario_model(2, 4);
  const SdpProblem prob = build_sdp(covariance_schedule(m), MatrixList(4, Eigen::MatrixXd::Zero(2, 2)), m.a);
  const SdpSolution sol = solve(prob);
  CHECK(sol.objective == 0.0);
  CHECK(feasibility_violation(prob, sol.s) <= 1e-6);
}

TEST_CASE("single stage example: negative root of l^2 + 1.5 l - 3") {
  const Eigen::MatrixXd sigma = Eigen::Vector2d(1.5, 2.0).asDiagonal();
  const double root = (-1.5 - std::sqrt(1.5 * 1.5 + 12.0)) / 2.0;
  CHECK(root == doctest::Approx((-1.5 - std::sqrt(57.0) / 2.0) / 2.0).epsilon(1e-14));
  CHECK(single_stage_value(sigma, kExampleV) == doctest::Approx(root).epsilon(1e-12));

  const Eigen::MatrixXd s = solve_single_stage_closed_form(sigma, kExampleV);
  CHECK((kExampleV * s).trace() == doctest::Approx(root).epsilon(1e-12));
  CHECK(numerical_rank(s) == 1);

  const SdpSolution sol = solve(build_sdp({sigma}, {kExampleV}, Eigen::MatrixXd::Identity(2, 2)));
  CHECK(std::abs(sol.objective - root) <= 1e-5);
  CHECK(sol.converged);
}

TEST_CASE("single stage closed form edge cases") {
  Rng rng(41);
  const Eigen::MatrixXd sigma = rng.spd(3);
  CHECK(solve_single_stage_closed_form(sigma, rng.spd(3)).norm() == 0.0);
  const Eigen::MatrixXd full = solve_single_stage_closed_form(sigma, -Eigen::MatrixXd::Identity(3, 3));
  CHECK((full - sigma).norm() <= 1e-12);
}

TEST_CASE("solver matches the closed form on random single-stage problems") {
  Rng rng(42);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index p = rng.integer(2, 4);
    const Eigen::MatrixXd sigma = rng.spd(p);
    const Eigen::MatrixXd v = rng.sym(p);
    const SdpProblem prob = build_sdp({sigma}, {v}, rng.dynamics(p));
    const SdpSolution sol = solve(prob);
    CHECK(std::abs(sol.objective - single_stage_value(sigma, v)) <= 1e-5);
    const Eigen::MatrixXd s = solve_single_stage_closed_form(sigma, v);
    CHECK((v * s).trace() == doctest::Approx(single_stage_value(sigma, v)).epsilon(1e-10));
  }
}

TEST_CASE("solver output is feasible and consistent") {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const SdpProblem prob = testing::random_sdp(rng, rng.integer(1, 4), rng.integer(1, 6));
    const SdpSolution sol = solve(prob);
    CHECK(sol.feasibility_violation <= 1e-6);
    CHECK(feasibility_violation(prob, sol.s) <= 1e-6);
    CHECK(sol.objective == sdp_objective(prob, sol.s));
  }
}

TEST_CASE("solver objective lower-bounds random linear policies") {
  Rng rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index p = rng.integer(2, 3);
    const int n = rng.integer(2, 5);
    const SdpProblem prob = testing::random_sdp(rng, p, n);
    const SdpSolution sol = solve(prob);
    for (int i = 0; i < 20; ++i) {
      const MatrixList h = posterior_cov_schedule(prob.a, prob.sigma, random_policy(p, n, 1000 * trial + i));
      CHECK(sdp_objective(prob, h) >= sol.objective - 1e-6);
    }
  }
}

TEST_CASE("scenario 1 with two stages agrees with the grid oracle") {
  const ProcessModel m = testing::scenario_model(1, 2);
  const SdpProblem prob = build_sdp(covariance_schedule(m), MatrixList(2, kExampleV), m.a);
  const SdpSolution sol = solve(prob);
  const GridResult g = grid_search(prob);
  CHECK(std::abs(g.objective - sol.objective) <= 1e-2 * std::abs(sol.objective));
  CHECK(g.objective >= sol.objective - 1e-6);
}

TEST_CASE("extreme-point chain round trip") {
  Rng rng(45);
  const ProcessModel m = testing::random_model(rng, 3, 4);
  const MatrixList sigma = covariance_schedule(m);
  MatrixList proj;
  for (int k = 0; k < 4; ++k) {
    const Eigen::MatrixXd u = rng.gaussian(3, rng.integer(0, 3));
    proj.push_back(u.cols() ? Eigen::MatrixXd(u * pinv(Eigen::MatrixXd(u.transpose() * u)) * u.transpose())
                            : Eigen::MatrixXd::Zero(3, 3));
  }
  const MatrixList s = extreme_point_chain(sigma, m.a, proj);
  const SdpProblem prob = build_sdp(sigma, MatrixList(4, Eigen::MatrixXd::Zero(3, 3)), m.a);
  CHECK(feasibility_violation(prob, s) <= 1e-10);
  const MatrixList back = chain_coordinates(sigma, m.a, s);
  for (int k = 0; k < 4; ++k) CHECK((back[k] - proj[k]).norm() <= 1e-8);
}

TEST_CASE("solver is deterministic") {
  Rng rng(46);
  const SdpProblem prob = testing::random_sdp(rng, 3, 4);
  const SdpSolution a = solve(prob), b = solve(prob);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  for (int k = 0; k < 4; ++k) CHECK((a.s[k] - b.s[k]).norm() == 0.0);
}

TEST_CASE("iteration cap is reported, not thrown") {
  Rng rng(47);
  const SdpProblem prob = testing::random_sdp(rng, 3, 5);
  SolverSettings s;
  s.max_iter = 3;
  s.polish = false;
  const SdpSolution sol = solve(prob, s);
  CHECK_FALSE(sol.converged);
  CHECK(sol.iterations == 3);
  CHECK(feasibility_violation(prob, sol.s) <= 1e-6);
}
