#include <doctest.h>

#include "stackelberg/control.hpp"
#include "stackelberg/lifted.hpp"
#include "stackelberg/posterior.hpp"
#include "stackelberg/verify.hpp"
#include "support/instances.hpp"

using namespace stackelberg;
using testing::Rng;

namespace {

ControlCosts stage_costs(Rng& rng, Eigen::Index p, Eigen::Index t, int n) {
  return testing::random_control_costs(rng, p, t, n);
}

// Expected costs when the receiver rebuilds controls from conditional means
// of x^o given the messages L_k' x^o_k.
CostPair exact_control_costs(const ProcessModel& m, const ControlCosts& c, const ControlTransform& ct,
                             const MatrixList& l) {
  const LiftedBasis basis = make_lifted_basis(m);
  const MatrixList xo = lifted_virtual_states(m, basis);
  const MatrixList xhat = lifted_posterior_means(basis, xo, l);
  return lifted_control_costs(m, c, basis, reconstruct_controls(ct, xhat));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar single stage Riccati quantities") {
  ProcessModel m;
  m.a = Eigen::MatrixXd::Constant(1, 1, 0.8);
  m.b = Eigen::MatrixXd::Constant(1, 1, 1.5);
  m.sigma1 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  m.sigma_w = Eigen::MatrixXd::Constant(1, 1, 0.5);
  m.horizon = 1;
  validate(m);
  ControlCosts c;
  c.qs = {Eigen::MatrixXd::Constant(1, 1, 3.0)};
  c.rs = {Eigen::MatrixXd::Constant(1, 1, 0.7)};
  c.qr = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  c.rr = {Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const RiccatiTransform rt = complete_squares(m, c);
  const double a = 0.8, b = 1.5, q = 3.0, r = 0.7;
  CHECK(rt.sender.delta[0](0, 0) == doctest::Approx(b * b * q + r).epsilon(1e-14));
  CHECK(rt.sender.gain[0](0, 0) == doctest::Approx(b * q * a / (b * b * q + r)).epsilon(1e-14));
  CHECK(rt.sender.qtilde[0].norm() == doctest::Approx(a * a * (q - q * b * b * q / (b * b * q + r))).epsilon(1e-12));

  const ControlTransform ct = build_control_transform(rt, m);
  CHECK((ct.phi_s - Eigen::MatrixXd::Identity(1, 1)).norm() == 0.0);
  CHECK((ct.phi_r - Eigen::MatrixXd::Identity(1, 1)).norm() == 0.0);
  CHECK((ct.t_s - ct.k_r).norm() <= 1e-15);
  CHECK((ct.vo[0] - ct.xi).norm() <= 1e-15);
}

TEST_CASE("Riccati recursion residuals on random instances") {
  Rng rng(61);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index p = rng.integer(1, 3), t = rng.integer(1, 2);
    const int n = rng.integer(1, 5);
    const ProcessModel m = testing::random_model(rng, p, n, t, true);
    const ControlCosts c = stage_costs(rng, p, t, n);
    const RiccatiTransform rt = complete_squares(m, c);
    for (Side side : {Side::kSender, Side::kReceiver}) {
      const RiccatiSide& rs = rt.side(side);
      const MatrixList& q = side == Side::kSender ? c.qs : c.qr;
      const MatrixList& r = side == Side::kSender ? c.rs : c.rr;
      CHECK((rs.qtilde[n] - q[n - 1]).norm() == 0.0);
      for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXd& next = rs.qtilde[k + 1];
        CHECK((rs.delta[k] - (m.b.transpose() * next * m.b + r[k])).norm() <= 1e-10 * (1.0 + rs.delta[k].norm()));
        CHECK((rs.delta[k] * rs.gain[k] - m.b.transpose() * next * m.a).norm() <= 1e-10 * (1.0 + next.norm()));
        const Eigen::MatrixXd stage_q = k == 0 ? Eigen::MatrixXd::Zero(p, p) : q[k - 1];
        const Eigen::MatrixXd expect = stage_q + m.a.transpose() * next * m.a -
                                       rs.gain[k].transpose() * rs.delta[k] * rs.gain[k];
        CHECK((rs.qtilde[k] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        CHECK(min_eigenvalue(rs.delta[k]) > 0.0);
      }
    }
  }
}

TEST_CASE("zero input matrix reduces to a pure estimation problem") {
  Rng rng(62);
  const ProcessModel m = testing::random_model(rng, 2, 3, 1, false);
  const ControlCosts c = stage_costs(rng, 2, 1, 3);
  const RiccatiTransform rt = complete_squares(m, c);
  for (const auto& g : rt.sender.gain) CHECK(g.norm() == 0.0);
  const ControlTransform ct = build_control_transform(rt, m);
  CHECK((ct.phi_s - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK(ct.t_s.norm() == 0.0);
  CHECK(ct.xi.norm() == 0.0);
  for (const auto& v : ct.vo) CHECK(v.norm() == 0.0);
  const std::vector<Eigen::VectorXd> u = {rng.gaussian(1, 1), rng.gaussian(1, 1), rng.gaussian(1, 1)};
  const auto us = transformed_inputs(rt, m, u, Side::kReceiver);
  for (int k = 0; k < 3; ++k) CHECK((us[k] - u[k]).norm() == 0.0);
}

TEST_CASE("transformed inputs") {
  Rng rng(63);
  const ProcessModel m = testing::random_model(rng, 2, 4, 2, true);
  const RiccatiTransform rt = complete_squares(m, stage_costs(rng, 2, 2, 4));
  std::vector<Eigen::VectorXd> u;
  for (int k = 0; k < 4; ++k) u.push_back(rng.gaussian(2, 1));
  const auto us = transformed_inputs(rt, m, u, Side::kSender);
  CHECK((us[0] - u[0]).norm() == 0.0);
  for (int k = 1; k < 4; ++k) {
    Eigen::VectorXd expect = u[k];
    for (int c = 0; c < k; ++c) expect += rt.sender.gain[k] * matrix_power(m.a, k - 1 - c) * m.b * u[c];
    CHECK((us[k] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
  }
}

TEST_CASE("completion of squares holds for arbitrary causal feedback") {
  Rng rng(64);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index p = rng.integer(1, 3), t = rng.integer(1, 2);
    const int n = rng.integer(1, 5);
    const ProcessModel m = testing::random_model(rng, p, n, t, true);
    const ControlCosts c = stage_costs(rng, p, t, n);
    const RiccatiTransform rt = complete_squares(m, c);
    const LiftedBasis basis = make_lifted_basis(m);
    const MatrixList u = lifted_random_feedback(m, basis, 700 + trial);
    const CostPair lhs = lifted_control_costs(m, c, basis, u);
    for (bool virt : {false, true}) {
      CHECK(rel(lifted_completed_squares(m, rt.sender, basis, u, virt), lhs.sender) <= 1e-8);
      CHECK(rel(lifted_completed_squares(m, rt.receiver, basis, u, virt), lhs.receiver) <= 1e-8);
    }
  }
}

TEST_CASE("control reconstruction inverts Phi_R") {
  Rng rng(65);
  const ProcessModel m = testing::random_model(rng, 2, 5, 2, true);
  const ControlTransform ct = build_control_transform(complete_squares(m, stage_costs(rng, 2, 2, 5)), m);
  MatrixList xhat;
  for (int k = 0; k < 5; ++k) xhat.push_back(rng.gaussian(2, 3));
  const MatrixList u = reconstruct_controls(ct, xhat);
  Eigen::MatrixXd ustack(10, 3), xstack(10, 3);
  for (int k = 1; k <= 5; ++k) {
    ustack.middleRows(stacked_block(k, 5) * 2, 2) = u[k - 1];
    xstack.middleRows(stacked_block(k, 5) * 2, 2) = xhat[k - 1];
  }
  CHECK((ct.phi_r * ustack + ct.k_r * xstack).norm() <= 1e-10 * (1.0 + xstack.norm()));

  const MatrixList zero(5, Eigen::MatrixXd::Zero(2, 1));
  for (const auto& uk : reconstruct_controls(ct, zero)) CHECK(uk.norm() == 0.0);
}

TEST_CASE("stacked virtual-state covariance") {
  Rng rng(66);
  const ProcessModel m = testing::random_model(rng, 2, 4, 1, true);
  const ControlTransform ct = build_control_transform(complete_squares(m, stage_costs(rng, 2, 1, 4)), m);
  const LiftedBasis basis = make_lifted_basis(m);
  const MatrixList xo = lifted_virtual_states(m, basis);
  for (int l = 1; l <= 4; ++l) {
    for (int k = 1; k <= 4; ++k) {
      const Eigen::MatrixXd expect = basis.moment(xo[l - 1], xo[k - 1]);
      CHECK((ct.block(ct.sigma_o, l, k, 2, 2) - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
    }
  }
  CHECK((ct.sigma_o - ct.sigma_o.transpose()).norm() <= 1e-12);
}

TEST_CASE("stacked posterior covariance structure") {
  Rng rng(67);
  const ProcessModel m = testing::random_model(rng, 2, 4);
  const MatrixList l = random_policy(2, 4, 800);
  const MatrixList h = posterior_cov_schedule(m.a, covariance_schedule(m), l);
  const LiftedBasis basis = make_lifted_basis(m);
  const MatrixList xhat = lifted_posterior_means(basis, lifted_virtual_states(m, basis), l);
  for (int j = 1; j <= 4; ++j) {
    for (int k = j; k <= 4; ++k) {
      const Eigen::MatrixXd expect = h[j - 1] * matrix_power(m.a, k - j).transpose();
      CHECK((basis.moment(xhat[j - 1], xhat[k - 1]) - expect).norm() <= 1e-8 * (1.0 + expect.norm()));
    }
  }
}

TEST_CASE("T_S is block lower triangular in stage order") {
  Rng rng(68);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = rng.integer(2, 5);
    const ProcessModel m = testing::random_model(rng, 2, n, 1, true);
    const ControlTransform ct = build_control_transform(complete_squares(m, stage_costs(rng, 2, 1, n)), m);
    for (int r = 1; r <= n; ++r) {
      CHECK((ct.block(ct.phi_r, r, r, 1, 1) - Eigen::MatrixXd::Identity(1, 1)).norm() == 0.0);
      for (int c = r + 1; c <= n; ++c) {
        CHECK(ct.block(ct.t_s, r, c, 1, 2).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(ct.block(ct.phi_s, r, c, 1, 1).norm() == 0.0);
      }
    }
    CHECK((ct.xi - ct.xi.transpose()).norm() <= 1e-12 * (1.0 + ct.xi.norm()));
  }
}

TEST_CASE("stacked block indices put the last stage first") {
  CHECK(stacked_block(5, 5) == 0);
  CHECK(stacked_block(1, 5) == 4);
  CHECK(stacked_block(1, 1) == 0);
}

TEST_CASE("analytic control costs agree with exact evaluation") {
  Rng rng(69);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index p = 2, t = rng.integer(1, 2);
    const int n = rng.integer(1, 4);
    const ProcessModel m = testing::random_model(rng, p, n, t, true);
    const ControlCosts c = stage_costs(rng, p, t, n);
    const ControlTransform ct = build_control_transform(complete_squares(m, c), m);
    const MatrixList sigma = covariance_schedule(m);
    const MatrixList l = random_policy(p, n, 900 + trial);
    const CostPair a = analytic_costs_control(ct, sigma, posterior_cov_schedule(m.a, sigma, l));
    const CostPair e = exact_control_costs(m, c, ct, l);
    CHECK(rel(a.sender, e.sender) <= 1e-8);
    CHECK(rel(a.receiver, e.receiver) <= 1e-8);
  }
}

TEST_CASE("receiver cannot gain by deviating from the reconstructed controls") {
  const ProcessModel m = testing::scenario_model(3, 3);
  const ControlCosts c = testing::example3_costs(3);
  const ControlEquilibrium eq = solve_control_game(m, c);
  const LiftedBasis basis = make_lifted_basis(m);
  const MatrixList xo = lifted_virtual_states(m, basis);
  const MatrixList xhat = lifted_posterior_means(basis, xo, eq.policy.l);
  const MatrixList u = reconstruct_controls(eq.transform, xhat);
  const double base = lifted_control_costs(m, c, basis, u).receiver;
  CHECK(rel(base, eq.costs.receiver) <= 1e-8);

  // measurable deviations: each u_k shifted by a linear map of the messages seen so far
  Rng rng(70);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixList dev = u;
    Eigen::MatrixXd seen(0, basis.dim());
    for (int k = 0; k < 3; ++k) {
      Eigen::MatrixXd y = eq.policy.l[k].transpose() * xo[k];
      Eigen::MatrixXd stacked(seen.rows() + y.rows(), basis.dim());
      stacked << seen, y;
      seen = std::move(stacked);
      dev[k] += 0.3 * rng.gaussian(1, seen.rows()) * seen;
    }
    CHECK(lifted_control_costs(m, c, basis, dev).receiver >= base - 1e-6);
  }
}

TEST_CASE("control equilibrium on the scenarios") {
  for (int s : {3, 4}) {
    const ProcessModel m = testing::scenario_model(s, 4);
    const ControlEquilibrium eq = solve_control_game(m, testing::example3_costs(4));
    CHECK(eq.solution.feasibility_violation <= 1e-6);
    for (int k = 0; k < 4; ++k) {
      CHECK(eq.extreme.ranks[k] == 1);
      CHECK((eq.h_o[k] - eq.solution.s[k]).norm() <= 1e-5 * (1.0 + eq.solution.s[k].norm()));
    }
    const CostPair e = exact_control_costs(m, testing::example3_costs(4), eq.transform, eq.policy.l);
    CHECK(rel(eq.costs.sender, e.sender) <= 1e-8);
    CHECK(rel(eq.costs.receiver, e.receiver) <= 1e-8);
    CHECK(eq.costs.sender == doctest::Approx(eq.solution.objective + eq.transform.xi0).epsilon(1e-10));
  }
}
