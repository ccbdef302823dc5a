#include "stackelberg/model.hpp"

#include <cmath>

namespace stackelberg {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(what + " has shape " + shape(m) + ", expected " + std::to_string(rows) +
                            "x" + std::to_string(cols));
  }
}

void require_pd(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidModelError(what + " has non-finite entries");
  if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm())) {
    throw InvalidModelError(what + " is not symmetric");
  }
  if (!(min_eigenvalue(m) > 0.0)) throw InvalidModelError(what + " is not positive definite");
}

void require_psd(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidModelError(what + " has non-finite entries");
  if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm())) {
    throw InvalidModelError(what + " is not symmetric");
  }
  if (min_eigenvalue(m) < -1e-12 * (1.0 + m.norm())) {
    throw InvalidModelError(what + " is not positive semi-definite");
  }
}

Eigen::MatrixXd normal_matrix(const Eigen::MatrixXd& rr, int k) {
  Eigen::MatrixXd g = rr.transpose() * rr;
  const auto ed = eigen_decomp(g);
  const double top = ed.values.size() ? ed.values(ed.values.size() - 1) : 0.0;
  if (ed.values.size() == 0 || !(ed.values(0) > 1e-12 * top) || !(top > 0.0)) {
    throw SingularRRError("R_R'R_R is singular at stage " + std::to_string(k));
  }
  return g;
}

template <typename Costs>
void require_stage_count(const Costs& c, const ProcessModel& m) {
  const auto n = static_cast<std::size_t>(m.horizon);
  if (c.qs.size() != n || c.rs.size() != n || c.qr.size() != n || c.rr.size() != n) {
    throw DimensionMismatch("cost lists must have one entry per stage (" + std::to_string(n) + ")");
  }
}

MatrixList objective_matrices(const CommCosts& c, bool receiver_side) {
  MatrixList v;
  v.reserve(c.qs.size());
  for (std::size_t k = 0; k < c.qs.size(); ++k) {
    const Eigen::MatrixXd& own_q = receiver_side ? c.qr[k] : c.qs[k];
    const Eigen::MatrixXd& own_r = receiver_side ? c.rr[k] : c.rs[k];
    normal_matrix(c.rr[k], static_cast<int>(k + 1));
    const Eigen::MatrixXd lam = response_map(own_r, c.rr[k], c.qr[k]);
    Eigen::MatrixXd vk = lam.transpose() * lam - lam.transpose() * own_q - own_q.transpose() * lam;
    v.push_back(symmetrize(vk));
  }
  return v;
}

}  // namespace

void validate(ProcessModel& m) {
  if (m.horizon < 1) throw InvalidModelError("horizon must be at least 1");
  const Eigen::Index p = m.a.rows();
  if (p < 1) throw InvalidModelError("state dimension must be positive");
  require_shape(m.a, p, p, "A");
  if (m.b.size() == 0) m.b = Eigen::MatrixXd::Zero(p, 1);
  if (m.b.rows() != p) throw DimensionMismatch("B has " + std::to_string(m.b.rows()) + " rows, expected " + std::to_string(p));
  require_shape(m.sigma1, p, p, "Sigma1");
  require_shape(m.sigma_w, p, p, "SigmaW");
  if (!m.a.allFinite() || !m.b.allFinite()) throw InvalidModelError("A or B has non-finite entries");

  const double anorm = m.a.jacobiSvd().singularValues()(0);
  const double det = m.a.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(anorm, static_cast<double>(p)))) {
    throw InvalidModelError("A must be invertible");
  }
  require_pd(m.sigma1, "Sigma1");
  require_pd(m.sigma_w, "SigmaW");
  m.sigma1 = symmetrize(m.sigma1);
  m.sigma_w = symmetrize(m.sigma_w);
}

void validate(const CommCosts& c, const ProcessModel& m) {
  require_stage_count(c, m);
  const Eigen::Index p = m.state_dim();
  for (std::size_t k = 0; k < c.qs.size(); ++k) {
    const std::string tag = " at stage " + std::to_string(k + 1);
    const Eigen::Index r = c.qs[k].rows();
    require_shape(c.qs[k], r, p, "QS" + tag);
    require_shape(c.qr[k], r, p, "QR" + tag);
    const Eigen::Index t = c.rr[k].cols();
    require_shape(c.rs[k], r, t, "RS" + tag);
    require_shape(c.rr[k], r, t, "RR" + tag);
    normal_matrix(c.rr[k], static_cast<int>(k + 1));
  }
}

void validate(const ControlCosts& c, const ProcessModel& m) {
  require_stage_count(c, m);
  const Eigen::Index p = m.state_dim();
  const Eigen::Index t = m.input_dim();
  for (std::size_t k = 0; k < c.qs.size(); ++k) {
    require_shape(c.qs[k], p, p, "QS at stage " + std::to_string(k + 2));
    require_shape(c.qr[k], p, p, "QR at stage " + std::to_string(k + 2));
    require_shape(c.rs[k], t, t, "RS at stage " + std::to_string(k + 1));
    require_shape(c.rr[k], t, t, "RR at stage " + std::to_string(k + 1));
    require_psd(c.qs[k], "QS at stage " + std::to_string(k + 2));
    require_psd(c.qr[k], "QR at stage " + std::to_string(k + 2));
    require_pd(c.rs[k], "RS at stage " + std::to_string(k + 1));
    require_pd(c.rr[k], "RR at stage " + std::to_string(k + 1));
  }
}

MatrixList covariance_schedule(const ProcessModel& m) {
  MatrixList sigma;
  sigma.reserve(m.horizon);
  sigma.push_back(m.sigma1);
  for (int k = 1; k < m.horizon; ++k) {
    sigma.push_back(symmetrize(m.a * sigma.back() * m.a.transpose() + m.sigma_w));
  }
  return sigma;
}

Eigen::VectorXd virtual_state_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& x_o,
                                   const Eigen::VectorXd& w) {
  return a * x_o + w;
}

Eigen::MatrixXd response_map(const Eigen::MatrixXd& rs, const Eigen::MatrixXd& rr,
                             const Eigen::MatrixXd& qr) {
  const Eigen::MatrixXd g = rr.transpose() * rr;
  return rs * g.llt().solve(rr.transpose() * qr);
}

MatrixList comm_objective_matrices(const CommCosts& c) { return objective_matrices(c, false); }

MatrixList comm_receiver_objective_matrices(const CommCosts& c) {
  return objective_matrices(c, true);
}

}  // namespace stackelberg
