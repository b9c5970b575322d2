#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "smtl/linalg.hpp"

namespace smtl {

enum class KernelKind { Linear, Gaussian };

/// Scalar kernel: linear <x, x'> or gaussian exp(-gamma ||x - x'||^2).
struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double gamma = 1.0;

  static KernelSpec linear() { return {KernelKind::Linear, 1.0}; }
  static KernelSpec gaussian(double gamma) { return {KernelKind::Gaussian, gamma}; }

  void validate() const {
    if (kind == KernelKind::Gaussian && !(gamma > 0.0 && std::isfinite(gamma))) {
      throw Error(Errc::BadKernelParam, "gaussian kernel needs gamma > 0");
    }
  }
};

inline std::string to_string(KernelKind k) { return k == KernelKind::Linear ? "linear" : "gaussian"; }

/// Cross-kernel matrix with entry (i, j) = k(x1_i, x2_j).
inline Matrix gram(const KernelSpec& spec, const Matrix& x1, const Matrix& x2) {
  spec.validate();
  if (x1.cols() != x2.cols()) {
    throw Error(Errc::DimensionMismatch, "feature dimension " + std::to_string(x1.cols()) + " vs " +
                                             std::to_string(x2.cols()));
  }
  Matrix k = x1 * x2.transpose();
  if (spec.kind == KernelKind::Gaussian) {
    const Vector n1 = x1.rowwise().squaredNorm();
    const Vector n2 = x2.rowwise().squaredNorm();
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      for (Eigen::Index i = 0; i < k.rows(); ++i) {
        const double d2 = std::max(n1(i) + n2(j) - 2.0 * k(i, j), 0.0);
        k(i, j) = std::exp(-spec.gamma * d2);
      }
    }
  }
  return k;
}

/// Training Gram matrix K with its cached spectral form and the inputs needed
/// to evaluate the kernel against new points.
class GramMatrix {
 public:
  GramMatrix(const KernelSpec& spec, Matrix x_train) : spec_(spec), x_train_(std::move(x_train)) {
    Matrix k = gram(spec_, x_train_, x_train_);
    if (spec_.kind == KernelKind::Gaussian) k.diagonal().setOnes();
    k_ = psd_clip(k);
  }

  /// Wraps an explicit PSD matrix (no input points; prediction unavailable).
  explicit GramMatrix(const Matrix& k) : k_(psd_clip(k)) {}

  const PsdMatrix& k() const noexcept { return k_; }
  const Matrix& data() const noexcept { return k_.data(); }
  const KernelSpec& spec() const noexcept { return spec_; }
  const Matrix& x_train() const noexcept { return x_train_; }
  Eigen::Index n() const noexcept { return k_.dim(); }

 private:
  KernelSpec spec_;
  Matrix x_train_;
  PsdMatrix k_;
};

using GramPtr = std::shared_ptr<const GramMatrix>;

}  // namespace smtl
