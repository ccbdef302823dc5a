#include "stackelberg/posterior.hpp"

#include <stdexcept>

namespace stackelberg {

namespace {

void check_lengths(const MatrixList& sigma, const MatrixList& policy) {
  if (sigma.size() != policy.size()) {
    throw std::invalid_argument("policy has " + std::to_string(policy.size()) +
                                " stages but covariance schedule has " +
                                std::to_string(sigma.size()));
  }
}

Eigen::MatrixXd gain_for(const Eigen::MatrixXd& d, const Eigen::MatrixXd& l) {
  const Eigen::MatrixXd dl = d * l;
  return dl * pinv(l.transpose() * dl);
}

}  // namespace

MatrixList posterior_cov_schedule(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                  const MatrixList& policy) {
  check_lengths(sigma, policy);
  MatrixList h;
  h.reserve(sigma.size());
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const Eigen::MatrixXd carried = symmetrize(a * prev * a.transpose());
    const Eigen::MatrixXd root = psd_sqrt(sigma[k] - carried);
    const Eigen::MatrixXd c = root * policy[k];
    const Eigen::MatrixXd proj = c * pinv(c.transpose() * c) * c.transpose();
    prev = symmetrize(carried + root * proj * root);
    h.push_back(prev);
  }
  return h;
}

Eigen::VectorXd posterior_mean_step(const Eigen::MatrixXd& a, const Eigen::MatrixXd& h_prev,
                                    const Eigen::MatrixXd& sigma_k, const Eigen::MatrixXd& l_k,
                                    const Eigen::VectorXd& xhat_prev, const Eigen::VectorXd& y_k) {
  const Eigen::MatrixXd d = symmetrize(sigma_k - a * h_prev * a.transpose());
  const Eigen::VectorXd predicted = a * xhat_prev;
  return predicted + gain_for(d, l_k) * (y_k - l_k.transpose() * predicted);
}

PosteriorFilter make_posterior_filter(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                      const MatrixList& policy) {
  check_lengths(sigma, policy);
  PosteriorFilter f;
  f.a = a;
  f.policy = policy;
  f.h = posterior_cov_schedule(a, sigma, policy);
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const Eigen::MatrixXd d = symmetrize(sigma[k] - a * prev * a.transpose());
    f.gain.push_back(gain_for(d, policy[k]));
    prev = f.h[k];
  }
  return f;
}

Eigen::VectorXd PosteriorFilter::step(std::size_t stage, const Eigen::VectorXd& xhat_prev,
                                      const Eigen::VectorXd& y_k) const {
  const Eigen::VectorXd predicted = a * xhat_prev;
  return predicted + gain[stage] * (y_k - policy[stage].transpose() * predicted);
}

Eigen::VectorXd PosteriorFilter::step_whitened(std::size_t stage, const Eigen::VectorXd& xhat_prev,
                                               const Eigen::VectorXd& ytilde_k) const {
  return a * xhat_prev + gain[stage] * ytilde_k;
}

std::vector<Eigen::VectorXd> PosteriorFilter::run(const std::vector<Eigen::VectorXd>& y) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(y.size());
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(a.rows());
  for (std::size_t k = 0; k < y.size(); ++k) {
    xhat = step(k, xhat, y[k]);
    out.push_back(xhat);
  }
  return out;
}

std::vector<Eigen::VectorXd> whiten_messages(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                             const MatrixList& policy,
                                             const std::vector<Eigen::VectorXd>& y) {
  const PosteriorFilter f = make_posterior_filter(a, sigma, policy);
  std::vector<Eigen::VectorXd> out;
  out.reserve(y.size());
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(a.rows());
  for (std::size_t k = 0; k < y.size(); ++k) {
    out.push_back(y[k] - policy[k].transpose() * (a * xhat));
    xhat = f.step(k, xhat, y[k]);
  }
  return out;
}

MatrixList normalized_increments(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                 const MatrixList& h) {
  MatrixList out;
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Eigen::MatrixXd carried = a * prev * a.transpose();
    const Eigen::MatrixXd w = pd_inv_sqrt(sigma[k] - carried);
    out.push_back(symmetrize(w * (h[k] - carried) * w));
    prev = h[k];
  }
  return out;
}

Eigen::MatrixXd innovation_requirement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma_w,
                                       const Eigen::MatrixXd& sigma_k,
                                       const Eigen::MatrixXd& s_prev, const Eigen::MatrixXd& p_k) {
  const Eigen::MatrixXd root = psd_sqrt(sigma_k - a * s_prev * a.transpose());
  const Eigen::MatrixXd w = pd_inv_sqrt(sigma_w);
  return symmetrize(w * root * p_k * root * w);
}

}  // namespace stackelberg
