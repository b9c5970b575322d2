#pragma once

// The three objective functionals over (C, A):
//   Q(C, A) = V(Y, K C A) + lam tr(A C^T K C) + F(A)
//   R(C, A) = V(Y, K C) + lam tr(A^+ C^T K C) + F(A)     (+inf off Ran(C^T K C) <= Ran(A))
//   S(C, A) = V(Y, K C) + lam tr(A^{-1}(C^T K C + delta^2 I)) + F(A)
// plus the optional ridge term ridge * tr(C_R^T K C_R) in the R parameterization,
// partial gradients of S and the maps between the Q and R parameterizations.

#include <utility>

#include "smtl/dataset.hpp"
#include "smtl/kernels.hpp"
#include "smtl/penalties.hpp"

namespace smtl {

struct ProblemInstance {
  GramPtr gram;
  Matrix Y;
  Matrix W;
  double lam = 1.0;
  double ridge = 0.0;
  PenaltySpec penalty = SchattenPenalty{};
  double delta = 1e-3;
  LossKind loss = LossKind::Squared;

  const Matrix& K() const { return gram->data(); }
  Eigen::Index n() const { return Y.rows(); }
  Eigen::Index tasks() const { return Y.cols(); }

  void validate() const {
    if (!gram) throw Error(Errc::DimensionMismatch, "problem instance has no Gram matrix");
    if (gram->n() != Y.rows()) throw Error(Errc::DimensionMismatch, "K and Y row counts differ");
    check_same_shape(Y, W, "Y/W");
    if (!(lam > 0.0)) throw Error(Errc::BadPenaltyParam, "lambda must be > 0");
    if (!(ridge >= 0.0)) throw Error(Errc::BadPenaltyParam, "ridge must be >= 0");
    if (!(delta >= 0.0)) throw Error(Errc::BadPenaltyParam, "delta must be >= 0");
    if ((W.array() < 0.0).any()) throw Error(Errc::BadPenaltyParam, "loss weights must be nonnegative");
    validate_penalty(penalty, tasks());
  }
};

/// Instance for the dataset's own Y and W.
inline ProblemInstance make_instance(const TaskDataset& ds, GramPtr gram, double lam, PenaltySpec penalty,
                                     double delta = 1e-3, double ridge = 0.0) {
  ProblemInstance inst{std::move(gram), ds.Y, ds.W, lam, ridge, std::move(penalty), delta, LossKind::Squared};
  inst.validate();
  return inst;
}

namespace detail {

inline void check_point(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a) {
  if (c.rows() != inst.n() || c.cols() != inst.tasks()) {
    throw Error(Errc::DimensionMismatch, "C is " + shape_of(c) + ", expected " + shape_of(inst.Y));
  }
  if (a.dim() != inst.tasks()) throw Error(Errc::DimensionMismatch, "A has wrong size");
}

/// tr(A^+ B) in the eigenbasis of A; cut-off eigenvalues are skipped.
inline double trace_pinv_product(const PsdMatrix& a, const Matrix& b) {
  const double cut = spectral_cutoff(a);
  const auto& e = a.eig();
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double w = e.values(i);
    if (w > cut && w > 0.0) s += e.vectors.col(i).dot(b * e.vectors.col(i)) / w;
  }
  return s;
}

inline void require_strict_pd_structure(const PsdMatrix& a) {
  if (!a.strictly_pd()) {
    throw Error(Errc::NotStrictlyPd, "A must be strictly positive definite (min eig " +
                                         std::to_string(a.min_eigenvalue()) + ")");
  }
}

}  // namespace detail

/// C^T K C, symmetrized.
inline Matrix coefficient_gram(const Matrix& k, const Matrix& c) {
  const Matrix b = c.transpose() * (k * c);
  return 0.5 * (b + b.transpose());
}

inline double eval_Q(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a) {
  detail::check_point(inst, c, a);
  const Matrix kc = inst.K() * c;
  const Matrix kca = kc * a.data();
  double v = loss_value(inst.loss, inst.Y, kca, inst.W);
  v += inst.lam * (a.data() * (c.transpose() * kc)).trace();
  if (inst.ridge > 0.0) v += inst.ridge * ((c * a.data()).transpose() * kca).trace();
  return v + penalty_value(inst.penalty, a);
}

inline double eval_R(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a,
                     double range_tol = 1e-8) {
  detail::check_point(inst, c, a);
  const Matrix kc = inst.K() * c;
  const Matrix b = coefficient_gram(inst.K(), c);
  if (!range_contained(b, a, range_tol)) return kInf;
  double v = loss_value(inst.loss, inst.Y, kc, inst.W);
  v += inst.lam * detail::trace_pinv_product(a, b);
  if (inst.ridge > 0.0) v += inst.ridge * b.trace();
  return v + penalty_value(inst.penalty, a);
}

/// Barrier objective; delta = 0 gives the unperturbed functional on strictly PD A.
inline double eval_S(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a) {
  detail::check_point(inst, c, a);
  detail::require_strict_pd_structure(a);
  const Matrix kc = inst.K() * c;
  Matrix b = coefficient_gram(inst.K(), c);
  const double ridge_term = inst.ridge > 0.0 ? inst.ridge * b.trace() : 0.0;
  b.diagonal().array() += inst.delta * inst.delta;
  const auto& e = a.eig();
  double tr = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) tr += e.vectors.col(i).dot(b * e.vectors.col(i)) / e.values(i);
  return loss_value(inst.loss, inst.Y, kc, inst.W) + inst.lam * tr + ridge_term + penalty_value(inst.penalty, a);
}

/// dS/dC = K grad_Z V(Y, K C) + 2 lam K C A^{-1} + 2 ridge K C.
inline Matrix grad_S_C(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a) {
  detail::check_point(inst, c, a);
  detail::require_strict_pd_structure(a);
  const Matrix kc = inst.K() * c;
  const LossEval le = loss_value_grad(inst.loss, inst.Y, kc, inst.W);
  Matrix g = inst.K() * le.grad + 2.0 * inst.lam * kc * inverse_pd(a);
  if (inst.ridge > 0.0) g += 2.0 * inst.ridge * kc;
  return g;
}

/// Gradient of the penalty's smooth part (zero for indicator penalties).
inline Matrix penalty_gradient(const PenaltySpec& spec, const PsdMatrix& a) {
  if (const auto* s = std::get_if<SchattenPenalty>(&spec)) {
    return s->mu * s->p * psd_power(a, s->p - 1.0).data();
  }
  return Matrix::Zero(a.dim(), a.dim());
}

/// dS/dA = -lam A^{-1}(C^T K C + delta^2 I) A^{-1} + grad F(A), symmetric.
inline Matrix grad_S_A(const ProblemInstance& inst, const Matrix& c, const PsdMatrix& a) {
  detail::check_point(inst, c, a);
  detail::require_strict_pd_structure(a);
  Matrix b = coefficient_gram(inst.K(), c);
  b.diagonal().array() += inst.delta * inst.delta;
  const Matrix a_inv = inverse_pd(a);
  Matrix g = -inst.lam * a_inv * b * a_inv + penalty_gradient(inst.penalty, a);
  return 0.5 * (g + g.transpose());
}

struct ParamPair {
  Matrix C;
  StructureMatrix A;
};

/// (C_R, A_R) -> (C_R A_R^+, A_R); requires Ran(C_R^T K C_R) within Ran(A_R).
inline ParamPair map_R_to_Q(const Matrix& k, const Matrix& c_r, const StructureMatrix& a_r, double tol = 1e-8) {
  if (c_r.cols() != a_r.dim() || c_r.rows() != k.rows()) throw Error(Errc::DimensionMismatch, "map_R_to_Q shapes");
  if (!range_contained(coefficient_gram(k, c_r), a_r, tol)) {
    throw Error(Errc::InfeasiblePair, "Ran(C^T K C) is not contained in Ran(A)");
  }
  return {c_r * pinv_psd(a_r).data(), a_r};
}

/// (C_Q, A_Q) -> (C_Q A_Q, A_Q); always feasible for R.
inline ParamPair map_Q_to_R(const Matrix& c_q, const StructureMatrix& a_q) {
  if (c_q.cols() != a_q.dim()) throw Error(Errc::DimensionMismatch, "map_Q_to_R shapes");
  return {c_q * a_q.data(), a_q};
}

}  // namespace smtl
