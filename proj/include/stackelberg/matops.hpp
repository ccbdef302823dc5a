#pragma once

// Dense symmetric-matrix kernels shared by every stage of the pipeline.
// All routines accept any Eigen expression and evaluate in the expression's
// scalar type.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace stackelberg {

using MatrixList = std::vector<Eigen::MatrixXd>;

class NotPsdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
template <typename Scalar>
struct EigenDecomp {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;

  MatrixX<Scalar> reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

/// (M + M')/2, evaluated.
template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = m;
  out = (out + out.transpose().eval()) * Scalar(0.5);
  return out;
}

/// Symmetrized copy of `m`; throws NonFiniteError on NaN/Inf and
/// std::invalid_argument if `m` is not square.
template <typename Derived>
MatrixX<typename Derived::Scalar> make_sym(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("symmetric matrix must be square, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw NonFiniteError("matrix has non-finite entries");
  return symmetrize(m);
}

template <typename Derived>
EigenDecomp<typename Derived::Scalar> eigen_decomp(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Spectral norm of a symmetric matrix.
template <typename Scalar>
Scalar spectral_norm(const EigenDecomp<Scalar>& ed) {
  if (ed.values.size() == 0) return Scalar(0);
  return std::max(std::abs(ed.values(0)), std::abs(ed.values(ed.values.size() - 1)));
}

namespace detail {
template <typename Scalar, typename F>
MatrixX<Scalar> spectral_map(const EigenDecomp<Scalar>& ed, F&& f) {
  VectorX<Scalar> mapped = ed.values.unaryExpr(f);
  MatrixX<Scalar> out = ed.vectors * mapped.asDiagonal() * ed.vectors.transpose();
  return symmetrize(out);
}

template <typename Scalar>
void require_psd(const EigenDecomp<Scalar>& ed, const char* what) {
  if (ed.values.size() == 0) return;
  const Scalar floor = -Scalar(1e-8) * spectral_norm(ed);
  if (ed.values(0) < floor) {
    throw NotPsdError(std::string(what) + ": eigenvalue " + std::to_string(double(ed.values(0))) +
                      " below PSD threshold " + std::to_string(double(floor)));
  }
}
}  // namespace detail

/// Symmetric PSD square root. Eigenvalues down to -1e-8*||M||_2 are clamped
/// to zero; anything more negative throws NotPsdError.
template <typename Derived>
MatrixX<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto ed = eigen_decomp(m);
  detail::require_psd(ed, "psd_sqrt");
  return detail::spectral_map(ed, [](Scalar x) { return x > Scalar(0) ? std::sqrt(x) : Scalar(0); });
}

/// Inverse square root of a positive definite matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> pd_inv_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto ed = eigen_decomp(m);
  if (ed.values.size() > 0 && !(ed.values(0) > Scalar(0))) {
    throw NotPsdError("pd_inv_sqrt: matrix is not positive definite (min eigenvalue " +
                      std::to_string(double(ed.values(0))) + ")");
  }
  return detail::spectral_map(ed, [](Scalar x) { return Scalar(1) / std::sqrt(x); });
}

inline constexpr double kPinvRtol = 1e-10;

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix. Eigenvalues at or
/// below kPinvRtol * lambda_max map to zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto ed = eigen_decomp(m);
  if (ed.values.size() == 0) return MatrixX<Scalar>(0, 0);
  const Scalar lmax = ed.values(ed.values.size() - 1);
  if (!(lmax > Scalar(0))) return MatrixX<Scalar>::Zero(m.rows(), m.cols());
  const Scalar cut = Scalar(kPinvRtol) * lmax;
  return detail::spectral_map(ed, [cut](Scalar x) { return x > cut ? Scalar(1) / x : Scalar(0); });
}

/// Nearest (Frobenius) PSD matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> psd_project(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto ed = eigen_decomp(m);
  return detail::spectral_map(ed, [](Scalar x) { return x > Scalar(0) ? x : Scalar(0); });
}

template <typename Scalar>
struct IdempotentRounding {
  MatrixX<Scalar> projector;
  int rank = 0;
  // max |lambda - round(lambda)| over the input spectrum
  Scalar residual = 0;
  // some eigenvalue fell inside [0.35, 0.65]
  bool ambiguous = false;
};

/// Rounds the spectrum of `m` onto {0, 1} (ties at 0.5 go to 1) keeping the
/// eigenvectors. The input spectrum must lie in [-0.1, 1.1].
template <typename Derived>
IdempotentRounding<typename Derived::Scalar> nearest_idempotent(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto ed = eigen_decomp(m);
  IdempotentRounding<Scalar> out;
  const Eigen::Index dim = ed.values.size();
  MatrixX<Scalar> basis(m.rows(), 0);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Scalar lam = ed.values(i);
    if (lam < Scalar(-0.1) || lam > Scalar(1.1)) {
      throw std::invalid_argument("nearest_idempotent: eigenvalue " + std::to_string(double(lam)) +
                                  " outside [-0.1, 1.1]");
    }
    const Scalar target = lam >= Scalar(0.5) ? Scalar(1) : Scalar(0);
    out.residual = std::max(out.residual, std::abs(lam - target));
    if (lam >= Scalar(0.35) && lam <= Scalar(0.65)) out.ambiguous = true;
    if (target == Scalar(1)) kept.push_back(i);
  }
  out.rank = static_cast<int>(kept.size());
  MatrixX<Scalar> u(m.rows(), out.rank);
  for (int j = 0; j < out.rank; ++j) u.col(j) = ed.vectors.col(kept[j]);
  out.projector = u * u.transpose();
  return out;
}

/// ||P^2 - P||_F
template <typename Derived>
typename Derived::Scalar idempotency_residual(const Eigen::MatrixBase<Derived>& p) {
  return (p * p - p).norm();
}

/// Smallest eigenvalue of the symmetric part of `m`.
template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) return 0;
  return eigen_decomp(m).values(0);
}

/// Number of eigenvalues strictly below -tol.
template <typename Derived>
int count_negative_eigenvalues(const Eigen::MatrixBase<Derived>& m, double tol = 1e-12) {
  const auto ed = eigen_decomp(m);
  const double scale = std::max(1.0, double(spectral_norm(ed)));
  int count = 0;
  for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
    if (double(ed.values(i)) < -tol * scale) ++count;
  }
  return count;
}

/// Numerical rank via singular values relative to the largest one.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& m, double rtol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixX<typename Derived::Scalar>> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (double(sv(i)) > rtol * double(sv(0))) ++r;
  }
  return r;
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& a, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) out = a * out;
  return out;
}

}  // namespace stackelberg
