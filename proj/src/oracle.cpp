#include "stackelberg/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace stackelberg {

namespace {

using Mat2 = Eigen::Matrix2d;

Mat2 sqrt2x2(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es;
  es.computeDirect(m);
  const Eigen::Vector2d lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Mat2 projector2(const ProjectorChoice& c) {
  if (c.rank == 0) return Mat2::Zero();
  if (c.rank == 2) return Mat2::Identity();
  const Eigen::Vector2d u(std::cos(c.angle), std::sin(c.angle));
  return u * u.transpose();
}

double choice_value(const Mat2& m, const ProjectorChoice& c) {
  if (c.rank == 0) return 0.0;
  if (c.rank == 2) return m.trace();
  const double cs = std::cos(c.angle), sn = std::sin(c.angle);
  return cs * cs * m(0, 0) + 2.0 * cs * sn * m(0, 1) + sn * sn * m(1, 1);
}

struct Grid {
  const SdpProblem& prob;
  std::vector<Mat2> sigma, v;
  Mat2 a;
  std::vector<ProjectorChoice> options;
  std::vector<ProjectorChoice> current, best;
  double best_value = std::numeric_limits<double>::infinity();
  std::int64_t evaluations = 0;

  explicit Grid(const SdpProblem& p) : prob(p), a(p.a) {
    for (int k = 0; k < p.horizon(); ++k) {
      sigma.emplace_back(p.sigma[k]);
      v.emplace_back(p.v[k]);
    }
    current.resize(p.horizon());
  }

  void enumerate(int k, const Mat2& prev, double acc) {
    const Mat2 carried = a * prev * a.transpose();
    const Mat2 root = sqrt2x2(sigma[k] - carried);
    const Mat2 m = root * v[k] * root;
    const double base = acc + (v[k] * carried).trace();
    const bool last = k + 1 == static_cast<int>(sigma.size());
    for (const auto& opt : options) {
      const double value = base + choice_value(m, opt);
      current[k] = opt;
      if (last) {
        ++evaluations;
        if (value < best_value) {
          best_value = value;
          best = current;
        }
      } else {
        enumerate(k + 1, carried + root * projector2(opt) * root, value);
      }
    }
  }

  double evaluate(const std::vector<ProjectorChoice>& chain) {
    ++evaluations;
    Mat2 prev = Mat2::Zero();
    double value = 0.0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const Mat2 carried = a * prev * a.transpose();
      const Mat2 root = sqrt2x2(sigma[k] - carried);
      prev = carried + root * projector2(chain[k]) * root;
      value += (v[k] * prev).trace();
    }
    return value;
  }
};

}  // namespace

Eigen::MatrixXd ProjectorChoice::matrix() const { return projector2(*this); }

GridResult grid_search(const SdpProblem& prob, int coarse, int refine_iters) {
  if (prob.dim() != 2) {
    throw UnsupportedDimensionError("grid oracle needs p = 2, got p = " + std::to_string(prob.dim()));
  }
  if (prob.horizon() > 3) {
    throw UnsupportedDimensionError("grid oracle needs n <= 3, got n = " +
                                    std::to_string(prob.horizon()));
  }
  if (coarse < 1 || refine_iters < 0) throw std::invalid_argument("grid sizes must be positive");
  const int n = prob.horizon();
  const double leaves = std::pow(static_cast<double>(coarse + 2), n);
  if (leaves + refine_iters * std::pow(5.0, n) > static_cast<double>(kGridBudget)) {
    throw std::invalid_argument("grid oracle budget of 1e8 evaluations exceeded");
  }

  Grid grid(prob);
  grid.options.push_back({0, 0.0});
  grid.options.push_back({2, 0.0});
  const double step = std::numbers::pi / coarse;
  for (int i = 0; i < coarse; ++i) grid.options.push_back({1, i * step});
  grid.enumerate(0, Mat2::Zero(), 0.0);

  GridResult res;
  res.history.push_back(grid.best_value);
  std::vector<ProjectorChoice> best = grid.best;
  double best_value = grid.best_value;
  std::vector<int> free_stages;
  for (int k = 0; k < n; ++k) {
    if (best[k].rank == 1) free_stages.push_back(k);
  }

  double h = step;
  for (int r = 0; r < refine_iters; ++r) {
    h *= 0.5;
    const std::vector<ProjectorChoice> center = best;
    const int m = static_cast<int>(free_stages.size());
    int combos = 1;
    for (int i = 0; i < m; ++i) combos *= 5;
    for (int idx = 0; idx < combos; ++idx) {
      std::vector<ProjectorChoice> trial = center;
      int rem = idx;
      for (int i = 0; i < m; ++i) {
        trial[free_stages[i]].angle += (rem % 5 - 2) * h;
        rem /= 5;
      }
      const double value = grid.evaluate(trial);
      if (value < best_value) {
        best_value = value;
        best = trial;
      }
    }
    res.history.push_back(best_value);
  }

  res.objective = best_value;
  res.choices = best;
  for (const auto& c : best) res.projectors.push_back(c.matrix());
  res.evaluations = grid.evaluations;
  return res;
}

InnovationRule best_innovation_rule(const SdpProblem& prob, const Eigen::MatrixXd& sigma_w) {
  const int n = prob.horizon();
  const Eigen::Index p = prob.dim();
  InnovationRule out;
  const Eigen::MatrixXd root_w = psd_sqrt(sigma_w);
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(p, p);
    for (int k = j; k < n; ++k) {
      const Eigen::MatrixXd pw = matrix_power(prob.a, k - j);
      weight += pw.transpose() * prob.v[k] * pw;
    }
    const Eigen::MatrixXd root = j == 0 ? psd_sqrt(prob.sigma[0]) : root_w;
    const auto ed = eigen_decomp(root * weight * root);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
      if (ed.values(i) < 0.0) {
        q += ed.vectors.col(i) * ed.vectors.col(i).transpose();
        out.objective += ed.values(i);
      }
    }
    out.projectors.push_back(q);
  }
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < n; ++k) {
    const Eigen::MatrixXd root = k == 0 ? psd_sqrt(prob.sigma[0]) : root_w;
    prev = symmetrize(prob.a * prev * prob.a.transpose() + root * out.projectors[k] * root);
    out.h.push_back(prev);
  }
  return out;
}

}  // namespace stackelberg
