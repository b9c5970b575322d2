#pragma once

// Out-of-sample prediction and evaluation metrics.

#include <cmath>
#include <limits>
#include <vector>

#include "smtl/solver.hpp"

namespace smtl {

/// Z = k(X_new, X_train) C.
inline Matrix predict(const ModelState& model, const Matrix& x_new) {
  if (x_new.cols() != model.X_train.cols()) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(model.X_train.cols()) + " features, got " +
                                             std::to_string(x_new.cols()));
  }
  return gram(model.kernel, x_new, model.X_train) * model.C;
}

/// Per-task MSE divided by the population variance of the truth.
inline std::vector<double> nmse_by_task(const Matrix& y_true, const Matrix& z) {
  check_same_shape(y_true, z, "nmse");
  std::vector<double> out;
  for (Eigen::Index t = 0; t < y_true.cols(); ++t) {
    const auto col = y_true.col(t).array();
    const double var = (col - col.mean()).square().mean();
    if (!(var > 0.0)) throw Error(Errc::ZeroVariance, "task " + std::to_string(t) + " has zero output variance");
    out.push_back((col - z.col(t).array()).square().mean() / var);
  }
  return out;
}

inline double nmse(const Matrix& y_true, const Matrix& z) {
  const auto per = nmse_by_task(y_true, z);
  double s = 0.0;
  for (double v : per) s += v;
  return per.empty() ? 0.0 : s / static_cast<double>(per.size());
}

/// nMSE when each task has its own test rows: rows of task t are (y[i], z[i]) with ids[i] == t.
/// Tasks without rows get NaN.
inline std::vector<double> nmse_long(const Vector& y, const Vector& z, const std::vector<Eigen::Index>& ids,
                                     Eigen::Index tasks) {
  if (y.size() != z.size() || static_cast<Eigen::Index>(ids.size()) != y.size()) {
    throw Error(Errc::LengthMismatch, "nmse_long: lengths differ");
  }
  std::vector<double> out;
  for (Eigen::Index t = 0; t < tasks; ++t) {
    std::vector<double> yt;
    std::vector<double> zt;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == t) {
        yt.push_back(y(static_cast<Eigen::Index>(i)));
        zt.push_back(z(static_cast<Eigen::Index>(i)));
      }
    }
    if (yt.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());  // task absent from the rows
      continue;
    }
    const auto n = static_cast<Eigen::Index>(yt.size());
    out.push_back(nmse_by_task(Eigen::Map<const Matrix>(yt.data(), n, 1), Eigen::Map<const Matrix>(zt.data(), n, 1))[0]);
  }
  return out;
}

inline Eigen::Index argmax_row(const Matrix& z, Eigen::Index i) {
  Eigen::Index best = 0;
  for (Eigen::Index t = 1; t < z.cols(); ++t) {
    if (z(i, t) > z(i, best)) best = t;
  }
  return best;
}

inline double accuracy(const std::vector<Eigen::Index>& labels, const Matrix& z) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw Error(Errc::LengthMismatch, "accuracy: label count differs from score rows");
  }
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    if (l < 0 || l >= z.cols()) throw Error(Errc::BadLabel, "label " + std::to_string(l) + " out of range");
    if (argmax_row(z, static_cast<Eigen::Index>(i)) == l) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

/// Mean over experiments of (stl - mtl) / sqrt(stl * mtl).
inline double normalized_improvement(const std::vector<double>& stl, const std::vector<double>& mtl) {
  if (stl.size() != mtl.size() || stl.empty()) throw Error(Errc::LengthMismatch, "nI needs equal, nonempty sequences");
  double s = 0.0;
  for (std::size_t i = 0; i < stl.size(); ++i) {
    if (!(stl[i] > 0.0) || !(mtl[i] > 0.0)) throw Error(Errc::NonPositiveNmse, "nI needs positive nMSE values");
    s += (stl[i] - mtl[i]) / std::sqrt(stl[i] * mtl[i]);
  }
  return s / static_cast<double>(stl.size());
}

}  // namespace smtl
