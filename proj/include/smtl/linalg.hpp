#pragma once

// Dense symmetric / PSD primitives shared by every other header: spectral
// decomposition, pseudoinverse, fractional powers, Schatten norms, range
// tests and the two exact solvers for K C + C M = Y.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "smtl/error.hpp"

namespace smtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-10;

inline std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " must be square, got " + shape_of(a));
  }
}

/// Eigenvalues in descending order; column i of `vectors` pairs with values(i).
/// Each eigenvector is signed so that its largest-magnitude entry is positive.
struct SymEig {
  Vector values;
  Matrix vectors;

  Matrix reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }
  Eigen::Index size() const { return values.size(); }
};

inline SymEig sym_eig(const Matrix& a) {
  require_square(a, "sym_eig input");
  if (!a.allFinite()) throw Error(Errc::NonFinite, "matrix contains NaN or Inf");
  const Eigen::Index m = a.rows();
  SymEig out;
  if (m == 0) return out;
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error(Errc::NonFinite, "eigendecomposition failed");
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index imax = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, j) < 0.0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

/// Symmetric positive semidefinite matrix with its spectral form computed once.
/// Instances are immutable; build them through `psd_clip`.
class PsdMatrix {
 public:
  PsdMatrix() = default;

  const Matrix& data() const noexcept { return data_; }
  const SymEig& eig() const noexcept { return eig_; }
  double rank_tol() const noexcept { return rank_tol_; }
  Eigen::Index dim() const noexcept { return data_.rows(); }

  double max_eigenvalue() const { return eig_.size() ? eig_.values(0) : 0.0; }
  double min_eigenvalue() const { return eig_.size() ? eig_.values(eig_.size() - 1) : 0.0; }

  /// True when the smallest eigenvalue exceeds rank_tol times the largest.
  bool strictly_pd() const {
    if (eig_.size() == 0) return false;
    const double top = max_eigenvalue();
    return top > 0.0 && min_eigenvalue() > rank_tol_ * top;
  }

  friend PsdMatrix psd_clip(const Matrix& a, double tol);
  friend PsdMatrix psd_from_spectrum(SymEig eig, double rank_tol);

 private:
  Matrix data_;
  SymEig eig_;
  double rank_tol_ = kDefaultRankTol;
};

using StructureMatrix = PsdMatrix;

/// Validates near-PSD input and zeroes the slightly negative eigenvalues. The
/// dense matrix keeps the symmetrized input plus the rank-one corrections for
/// the clipped directions only, so already-PSD input is preserved exactly.
inline PsdMatrix psd_clip(const Matrix& a, double tol = kDefaultRankTol) {
  require_square(a, "psd_clip input");
  PsdMatrix out;
  out.rank_tol_ = tol;
  out.eig_ = sym_eig(a);
  out.data_ = 0.5 * (a + a.transpose());
  if (out.eig_.size() == 0) return out;
  const double top = out.eig_.values(0);
  const double lowest = out.eig_.values(out.eig_.size() - 1);
  if (lowest < -tol * std::max(1.0, top)) {
    throw Error(Errc::NotPsd, "smallest eigenvalue " + std::to_string(lowest) +
                                  " below tolerance (largest " + std::to_string(top) + ")");
  }
  for (Eigen::Index i = 0; i < out.eig_.size(); ++i) {
    const double w = out.eig_.values(i);
    if (w < 0.0) {
      out.data_ -= w * out.eig_.vectors.col(i) * out.eig_.vectors.col(i).transpose();
      out.eig_.values(i) = 0.0;
    }
  }
  return out;
}

/// Builds a PSD matrix from a spectrum (negative values clipped to zero).
inline PsdMatrix psd_from_spectrum(SymEig eig, double rank_tol = kDefaultRankTol) {
  PsdMatrix out;
  out.rank_tol_ = rank_tol;
  out.eig_ = std::move(eig);
  out.eig_.values = out.eig_.values.cwiseMax(0.0);
  out.data_ = out.eig_.reconstruct();
  out.data_ = 0.5 * (out.data_ + out.data_.transpose());
  return out;
}

inline PsdMatrix identity_psd(Eigen::Index m) { return psd_clip(Matrix::Identity(m, m)); }

namespace detail {

inline SymEig map_spectrum(const SymEig& e, auto&& fn) {
  SymEig out{e.values, e.vectors};
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values(i) = fn(e.values(i));
  // Re-sort descending so the result satisfies the SymEig ordering invariant.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(out.values.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return out.values(a) > out.values(b); });
  SymEig sorted{Vector(out.values.size()), Matrix(e.vectors.rows(), e.vectors.cols())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    sorted.values(static_cast<Eigen::Index>(i)) = out.values(idx[i]);
    sorted.vectors.col(static_cast<Eigen::Index>(i)) = out.vectors.col(idx[i]);
  }
  return sorted;
}

inline double spectral_cutoff(const PsdMatrix& a) { return a.rank_tol() * a.max_eigenvalue(); }

}  // namespace detail

/// Moore-Penrose pseudoinverse; eigenvalues at or below rank_tol * max map to 0.
inline PsdMatrix pinv_psd(const PsdMatrix& a) {
  const double cut = detail::spectral_cutoff(a);
  return psd_from_spectrum(
      detail::map_spectrum(a.eig(), [cut](double w) { return w > cut && w > 0.0 ? 1.0 / w : 0.0; }),
      a.rank_tol());
}

inline PsdMatrix psd_power(const PsdMatrix& a, double q) {
  if (q < 0.0 && !a.strictly_pd()) {
    throw Error(Errc::SingularMatrix, "negative power of a rank-deficient matrix");
  }
  return psd_from_spectrum(detail::map_spectrum(a.eig(), [q](double w) {
                             return w <= 0.0 ? (q == 0.0 ? 1.0 : 0.0) : std::pow(w, q);
                           }),
                           a.rank_tol());
}

/// Inverse of a strictly positive definite matrix through its spectrum.
inline Matrix inverse_pd(const PsdMatrix& a) {
  if (!a.strictly_pd()) throw Error(Errc::NotStrictlyPd, "matrix is not strictly positive definite");
  const auto& e = a.eig();
  return e.vectors * e.values.cwiseInverse().asDiagonal() * e.vectors.transpose();
}

inline double schatten(const PsdMatrix& a, double p) {
  if (!(p >= 1.0)) throw Error(Errc::BadExponent, "Schatten exponent must be >= 1");
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.eig().size(); ++i) s += std::pow(std::max(a.eig().values(i), 0.0), p);
  return std::pow(s, 1.0 / p);
}

/// ||A||_p^p without the final root.
inline double schatten_pow(const PsdMatrix& a, double p) {
  if (!(p >= 1.0)) throw Error(Errc::BadExponent, "Schatten exponent must be >= 1");
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.eig().size(); ++i) s += std::pow(std::max(a.eig().values(i), 0.0), p);
  return s;
}

/// Orthogonal projector onto Ran(A) built from the eigenvectors above the cutoff.
inline Matrix range_projector(const PsdMatrix& a) {
  const double cut = detail::spectral_cutoff(a);
  const auto& e = a.eig();
  Matrix p = Matrix::Zero(a.dim(), a.dim());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e.values(i) > cut && e.values(i) > 0.0) p += e.vectors.col(i) * e.vectors.col(i).transpose();
  }
  return p;
}

/// Projector onto the column range of an arbitrary matrix (SVD, relative cutoff).
inline Matrix range_projector(const Matrix& m, double rank_tol = kDefaultRankTol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Matrix p = Matrix::Zero(m.rows(), m.rows());
  if (s.size() == 0) return p;
  const double cut = rank_tol * s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0.0) p += svd.matrixU().col(i) * svd.matrixU().col(i).transpose();
  }
  return p;
}

/// True iff Ran(B) is contained in Ran(A): ||(I - A A^+) B||_F <= tol (1 + ||B||_F).
inline bool range_contained(const Matrix& b, const PsdMatrix& a, double tol) {
  if (b.rows() != a.dim()) {
    throw Error(Errc::DimensionMismatch, "range test needs B rows == dim(A), got " + shape_of(b) +
                                             " vs " + std::to_string(a.dim()));
  }
  const Matrix resid = b - range_projector(a) * b;
  return resid.norm() <= tol * (1.0 + b.norm());
}

inline bool range_contained(const PsdMatrix& b, const PsdMatrix& a, double tol) {
  return range_contained(b.data(), a, tol);
}

/// Range containment against a general (possibly rectangular) matrix M.
inline bool range_contained(const Matrix& b, const Matrix& m, double tol) {
  if (b.rows() != m.rows()) throw Error(Errc::DimensionMismatch, "range test row mismatch");
  const Matrix resid = b - range_projector(m) * b;
  return resid.norm() <= tol * (1.0 + b.norm());
}

/// Solves K C + C M = Y for symmetric PSD K and symmetric positive definite M by
/// simultaneous diagonalization: C = U [ (U^T Y V)_ij / (s_i + m_j) ] V^T.
inline Matrix spectral_sylvester(const SymEig& k_eig, const SymEig& m_eig, const Matrix& y) {
  const Matrix yt = k_eig.vectors.transpose() * y * m_eig.vectors;
  Matrix ct(yt.rows(), yt.cols());
  for (Eigen::Index j = 0; j < yt.cols(); ++j) {
    for (Eigen::Index i = 0; i < yt.rows(); ++i) {
      ct(i, j) = yt(i, j) / (std::max(k_eig.values(i), 0.0) + m_eig.values(j));
    }
  }
  return k_eig.vectors * ct * m_eig.vectors.transpose();
}

/// Coupling matrix lam * A^{-1} + ridge * I in spectral form (shares A's eigenvectors).
inline SymEig coupling_spectrum(const PsdMatrix& a, double lam, double ridge) {
  if (!a.strictly_pd()) {
    throw Error(Errc::SingularA, "structure matrix is not strictly positive definite (min eig " +
                                     std::to_string(a.min_eigenvalue()) + ")");
  }
  SymEig out{a.eig().values, a.eig().vectors};
  for (Eigen::Index j = 0; j < out.values.size(); ++j) out.values(j) = lam / a.eig().values(j) + ridge;
  return out;
}

inline void check_ls_inputs(const PsdMatrix& k, const PsdMatrix& a, double lam, const Matrix& y) {
  if (!(lam > 0.0)) throw Error(Errc::BadPenaltyParam, "lambda must be positive");
  if (y.rows() != k.dim() || y.cols() != a.dim()) {
    throw Error(Errc::DimensionMismatch, "Y is " + shape_of(y) + ", expected " +
                                             std::to_string(k.dim()) + "x" + std::to_string(a.dim()));
  }
}

/// Exact minimizer of ||Y - K C||_F^2 + lam tr(A^{-1} C^T K C) + ridge tr(C^T K C),
/// i.e. the solution of K C + lam C A^{-1} + ridge C = Y.
inline Matrix sylvester_ls_solve(const PsdMatrix& k, const PsdMatrix& a, double lam, const Matrix& y,
                                 double ridge = 0.0) {
  check_ls_inputs(k, a, lam, y);
  return spectral_sylvester(k.eig(), coupling_spectrum(a, lam, ridge), y);
}

/// Reference solver for the same system through the dense nT x nT Kronecker form
/// (I_T (x) K + (lam A^{-1} + ridge I) (x) I_n) vec(C) = vec(Y). Test oracle only.
inline Matrix kron_ls_solve(const PsdMatrix& k, const PsdMatrix& a, double lam, const Matrix& y,
                            double ridge = 0.0) {
  check_ls_inputs(k, a, lam, y);
  if (!a.strictly_pd()) throw Error(Errc::SingularA, "structure matrix is not strictly positive definite");
  const Eigen::Index n = k.dim();
  const Eigen::Index t = a.dim();
  const Matrix coupling = lam * a.data().inverse() + ridge * Matrix::Identity(t, t);
  Matrix sys = Matrix::Zero(n * t, n * t);
  for (Eigen::Index b = 0; b < t; ++b) {
    sys.block(b * n, b * n, n, n) += k.data();
    for (Eigen::Index c = 0; c < t; ++c) {
      sys.block(b * n, c * n, n, n).diagonal().array() += coupling(b, c);
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(y.data(), n * t);
  const Vector sol = sys.partialPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(sol.data(), n, t);
}

}  // namespace smtl
