#include "stackelberg/sdp.hpp"

#include <algorithm>
#include <cmath>

#include "log.hpp"

namespace stackelberg {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
  }
  return out;
}

Eigen::Map<const Eigen::VectorXd> vec(const Eigen::MatrixXd& m) {
  return {m.data(), m.size()};
}

enum class ChainMode { kClamp, kRound };

// Walks the chain stage by stage, re-expressing S_k relative to the already
// adjusted S_{k-1}, and maps the normalized increment onto [O, I] (clamp) or
// onto the nearest projector (round).
MatrixList project_chain(const SdpProblem& prob, const MatrixList& s, ChainMode mode) {
  MatrixList out;
  out.reserve(s.size());
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(prob.dim(), prob.dim());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Eigen::MatrixXd carried = symmetrize(prob.a * prev * prob.a.transpose());
    const Eigen::MatrixXd gap = symmetrize(prob.sigma[k] - carried);
    const Eigen::MatrixXd root = psd_sqrt(gap);
    const Eigen::MatrixXd inv_root = pd_inv_sqrt(gap);
    const auto ed = eigen_decomp(inv_root * (s[k] - carried) * inv_root);
    Eigen::VectorXd lam = ed.values;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (mode == ChainMode::kClamp) {
        lam(i) = std::clamp(lam(i), 0.0, 1.0);
      } else {
        lam(i) = lam(i) >= 0.5 ? 1.0 : 0.0;
      }
    }
    const Eigen::MatrixXd p = symmetrize(ed.vectors * lam.asDiagonal() * ed.vectors.transpose());
    prev = symmetrize(carried + root * p * root);
    out.push_back(prev);
  }
  return out;
}

bool all_psd(const MatrixList& v) {
  for (const auto& m : v) {
    if (m.size() == 0) continue;
    const auto ed = eigen_decomp(m);
    if (ed.values(0) < -1e-14 * std::max(1.0, spectral_norm(ed))) return false;
  }
  return true;
}

}  // namespace

SdpProblem build_sdp(const MatrixList& sigma, const MatrixList& v, const Eigen::MatrixXd& a) {
  if (sigma.size() != v.size()) {
    throw DimensionMismatch("covariance schedule has " + std::to_string(sigma.size()) +
                            " stages, objective has " + std::to_string(v.size()));
  }
  if (v.empty()) throw DimensionMismatch("problem needs at least one stage");
  const Eigen::Index p = a.rows();
  if (a.cols() != p) throw DimensionMismatch("A must be square");
  SdpProblem prob;
  prob.a = a;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k].rows() != p || v[k].cols() != p || sigma[k].rows() != p || sigma[k].cols() != p) {
      throw DimensionMismatch("stage " + std::to_string(k + 1) + " matrices must be " +
                              std::to_string(p) + "x" + std::to_string(p));
    }
    prob.v.push_back(make_sym(v[k]));
    prob.sigma.push_back(make_sym(sigma[k]));
  }
  return prob;
}

double sdp_objective(const SdpProblem& prob, const MatrixList& s) {
  double obj = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) obj += (prob.v[k] * s[k]).trace();
  return obj;
}

double feasibility_violation(const SdpProblem& prob, const MatrixList& s) {
  double worst = 0.0;
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(prob.dim(), prob.dim());
  for (std::size_t k = 0; k < s.size(); ++k) {
    worst = std::max(worst, -min_eigenvalue(prob.sigma[k] - s[k]));
    worst = std::max(worst, -min_eigenvalue(s[k] - prob.a * prev * prob.a.transpose()));
    prev = s[k];
  }
  return worst;
}

MatrixList extreme_point_chain(const MatrixList& sigma, const Eigen::MatrixXd& a,
                               const MatrixList& projectors) {
  MatrixList out;
  out.reserve(sigma.size());
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const Eigen::MatrixXd carried = symmetrize(a * prev * a.transpose());
    const Eigen::MatrixXd root = psd_sqrt(sigma[k] - carried);
    prev = symmetrize(carried + root * projectors[k] * root);
    out.push_back(prev);
  }
  return out;
}

MatrixList chain_coordinates(const MatrixList& sigma, const Eigen::MatrixXd& a, const MatrixList& s) {
  MatrixList out;
  out.reserve(s.size());
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Eigen::MatrixXd carried = a * prev * a.transpose();
    const Eigen::MatrixXd w = pd_inv_sqrt(sigma[k] - carried);
    out.push_back(symmetrize(w * (s[k] - carried) * w));
    prev = s[k];
  }
  return out;
}

Eigen::MatrixXd solve_single_stage_closed_form(const Eigen::MatrixXd& sigma1,
                                               const Eigen::MatrixXd& v1) {
  const Eigen::MatrixXd root = psd_sqrt(sigma1);
  const auto ed = eigen_decomp(root * v1 * root);
  Eigen::MatrixXd q(sigma1.rows(), 0);
  for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
    if (ed.values(i) < 0.0) {
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = ed.vectors.col(i);
    }
  }
  return symmetrize(root * q * q.transpose() * root);
}

SdpSolution solve(const SdpProblem& prob, const SolverSettings& settings) {
  const int n = prob.horizon();
  const Eigen::Index p = prob.dim();
  SdpSolution sol;

  if (all_psd(prob.v)) {
    // The no-information chain S_k = O is optimal with objective zero.
    sol.s.assign(n, Eigen::MatrixXd::Zero(p, p));
    sol.objective = 0.0;
    sol.converged = true;
    sol.polished = true;
    return sol;
  }

  double sigma_scale = 0.0;
  double v_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    sigma_scale = std::max(sigma_scale, spectral_norm(eigen_decomp(prob.sigma[k])));
    v_scale = std::max(v_scale, spectral_norm(eigen_decomp(prob.v[k])));
  }
  MatrixList sig(n), v(n);
  for (int k = 0; k < n; ++k) {
    sig[k] = prob.sigma[k] / sigma_scale;
    v[k] = prob.v[k] / v_scale;
  }

  const Eigen::Index q = p * p;
  const Eigen::MatrixXd kk = kron(prob.a, prob.a);
  const Eigen::MatrixXd kk_t = kk.transpose();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n * q, n * q);
  for (int k = 0; k < n; ++k) {
    hess.block(k * q, k * q, q, q) = 2.0 * Eigen::MatrixXd::Identity(q, q);
    if (k + 1 < n) {
      hess.block(k * q, k * q, q, q) += kk_t * kk;
      hess.block((k + 1) * q, k * q, q, q) = -kk;
      hess.block(k * q, (k + 1) * q, q, q) = -kk_t;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> factor(hess);

  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(p, p);
  MatrixList s(n, zero), y(n, zero), z(n, zero), u(n, zero), w(n, zero);
  for (int k = 0; k < n; ++k) y[k] = sig[k];
  MatrixList g1(n), g2(n);
  double rho = settings.rho;
  const double alpha = settings.relaxation;
  Eigen::VectorXd rhs(n * q);

  auto carry = [&](const MatrixList& m, int k) -> Eigen::MatrixXd {
    return k == 0 ? zero : Eigen::MatrixXd(prob.a * m[k - 1] * prob.a.transpose());
  };

  int iter = 0;
  for (; iter < settings.max_iter; ++iter) {
    for (int k = 0; k < n; ++k) {
      Eigen::MatrixXd r = sig[k] - y[k] + u[k] + z[k] - w[k] - v[k] / rho;
      if (k + 1 < n) r -= prob.a.transpose() * (z[k + 1] - w[k + 1]) * prob.a;
      rhs.segment(k * q, q) = vec(r);
    }
    const Eigen::VectorXd svec = factor.solve(rhs);
    for (int k = 0; k < n; ++k) {
      s[k] = symmetrize(Eigen::Map<const Eigen::MatrixXd>(svec.data() + k * q, p, p));
    }

    double primal = 0.0;
    double dual = 0.0;
    MatrixList dy(n), dz(n);
    for (int k = 0; k < n; ++k) {
      g1[k] = -s[k];
      g2[k] = s[k] - carry(s, k);
      const Eigen::MatrixXd r1 = alpha * g1[k] + (1.0 - alpha) * (y[k] - sig[k]);
      const Eigen::MatrixXd r2 = alpha * g2[k] + (1.0 - alpha) * z[k];
      const Eigen::MatrixXd y_new = psd_project(r1 + sig[k] + u[k]);
      const Eigen::MatrixXd z_new = psd_project(r2 + w[k]);
      u[k] += r1 + sig[k] - y_new;
      w[k] += r2 - z_new;
      dy[k] = y_new - y[k];
      dz[k] = z_new - z[k];
      y[k] = y_new;
      z[k] = z_new;
      primal += (g1[k] + sig[k] - y[k]).squaredNorm() + (g2[k] - z[k]).squaredNorm();
    }
    for (int k = 0; k < n; ++k) {
      Eigen::MatrixXd d = -dy[k] + dz[k];
      if (k + 1 < n) d -= prob.a.transpose() * dz[k + 1] * prob.a;
      dual += d.squaredNorm();
    }
    primal = std::sqrt(primal);
    dual = rho * std::sqrt(dual);
    sol.primal_residual = primal;
    sol.dual_residual = dual;
    if (primal <= settings.tol && dual <= settings.tol) {
      sol.converged = true;
      ++iter;
      break;
    }
    if ((iter + 1) % 25 == 0) {
      double scale = 1.0;
      if (primal > 10.0 * dual) scale = 2.0;
      else if (dual > 10.0 * primal) scale = 0.5;
      if (scale != 1.0) {
        rho *= scale;
        for (int k = 0; k < n; ++k) {
          u[k] /= scale;
          w[k] /= scale;
        }
      }
    }
  }
  sol.iterations = iter;
  if (!sol.converged) {
    log::get().warn("SDP solver hit max_iter={} (primal {:.3e}, dual {:.3e})", settings.max_iter,
                    sol.primal_residual, sol.dual_residual);
  }

  for (int k = 0; k < n; ++k) s[k] *= sigma_scale;
  MatrixList repaired = project_chain(prob, s, ChainMode::kClamp);
  double obj = sdp_objective(prob, repaired);
  sol.s = repaired;
  sol.objective = obj;

  if (settings.polish) {
    MatrixList rounded = project_chain(prob, repaired, ChainMode::kRound);
    const double obj_rounded = sdp_objective(prob, rounded);
    const double slack = settings.tol * sigma_scale * v_scale * (1.0 + std::abs(obj) / (sigma_scale * v_scale));
    if (obj_rounded <= obj + slack) {
      sol.s = std::move(rounded);
      sol.objective = obj_rounded;
      sol.polished = true;
    } else {
      log::get().info("extreme-point rounding rejected ({:.9g} vs {:.9g})", obj_rounded, obj);
    }
  }
  sol.feasibility_violation = feasibility_violation(prob, sol.s);
  log::get().debug("SDP solve: {} iterations, objective {:.12g}, polished={}", sol.iterations,
                   sol.objective, sol.polished);
  return sol;
}

}  // namespace stackelberg
