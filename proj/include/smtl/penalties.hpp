#pragma once

// Structure penalties F(A): evaluation, the exact minimizer of
// lam * tr(A^{-1} B) + F(A), Euclidean projections for indicator penalties and
// builders for a-priori task structures.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>
#include <vector>

#include "smtl/linalg.hpp"

namespace smtl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// mu * ||A||_p^p
struct SchattenPenalty {
  double p = 1.0;
  double mu = 1.0;
};

/// Indicator of {A PSD : tr(A) = 1}.
struct TraceOnePenalty {};

/// Indicator of {A(M) : M in S_c}, A(M)^{-1} = eps_m U + eps_b (M - U) + eps_w (I - M),
/// S_c = {0 <= M <= I, tr(M) = r}, U = 11^T / T.
struct ClusterPenalty {
  double r = 1.0;
  double eps_m = 1.0;
  double eps_b = 1.0;
  double eps_w = 1.0;
};

/// Indicator of {A0}.
struct FixedPenalty {
  Matrix a0;
};

using PenaltySpec = std::variant<SchattenPenalty, TraceOnePenalty, ClusterPenalty, FixedPenalty>;

inline bool is_indicator(const PenaltySpec& spec) { return !std::holds_alternative<SchattenPenalty>(spec); }

inline const char* penalty_name(const PenaltySpec& spec) {
  switch (spec.index()) {
    case 0: return "schatten";
    case 1: return "trace_one";
    case 2: return "cluster";
    default: return "fixed";
  }
}

inline void validate_penalty(const PenaltySpec& spec, Eigen::Index t) {
  if (const auto* s = std::get_if<SchattenPenalty>(&spec)) {
    if (!(s->p >= 1.0)) throw Error(Errc::BadPenaltyParam, "schatten p must be >= 1");
    if (!(s->mu > 0.0)) throw Error(Errc::BadPenaltyParam, "schatten mu must be > 0");
  } else if (const auto* c = std::get_if<ClusterPenalty>(&spec)) {
    if (c->r > static_cast<double>(t)) throw Error(Errc::BadRank, "cluster count r exceeds the number of tasks");
    if (!(c->r >= 1.0)) throw Error(Errc::BadPenaltyParam, "cluster count r must be >= 1");
    if (!(c->eps_m > 0.0 && c->eps_b > 0.0 && c->eps_w > 0.0)) {
      throw Error(Errc::BadPenaltyParam, "cluster eps_m, eps_b, eps_w must be > 0");
    }
  } else if (const auto* f = std::get_if<FixedPenalty>(&spec)) {
    if (f->a0.rows() != t || f->a0.cols() != t) {
      throw Error(Errc::DimensionMismatch, "fixed structure is " + shape_of(f->a0) + ", expected " +
                                               std::to_string(t) + "x" + std::to_string(t));
    }
  }
}

namespace detail {

inline Matrix mean_projector(Eigen::Index t) {
  return Matrix::Constant(t, t, 1.0 / static_cast<double>(t));
}

}  // namespace detail

/// A(M)^{-1} = eps_m U + eps_b (M - U) + eps_w (I - M).
inline Matrix cluster_inverse_map(const ClusterPenalty& c, const Matrix& m) {
  const Eigen::Index t = m.rows();
  const Matrix u = detail::mean_projector(t);
  return c.eps_m * u + c.eps_b * (m - u) + c.eps_w * (Matrix::Identity(t, t) - m);
}

/// A(M) for M in S_c; throws BadPenaltyParam when A(M)^{-1} is not positive definite.
inline StructureMatrix cluster_structure(const ClusterPenalty& c, const Matrix& m) {
  const SymEig e = sym_eig(cluster_inverse_map(c, m));
  if (!(e.values(e.size() - 1) > 0.0)) {
    throw Error(Errc::BadPenaltyParam, "cluster parameters give a non positive definite A(M)^{-1}");
  }
  return psd_from_spectrum(detail::map_spectrum(e, [](double w) { return 1.0 / w; }));
}

/// Recovers M from A by inverting the affine map; requires eps_b != eps_w.
inline Matrix cluster_m_from_structure(const ClusterPenalty& c, const Matrix& a_inv) {
  const Eigen::Index t = a_inv.rows();
  const Matrix u = detail::mean_projector(t);
  return (a_inv - c.eps_w * Matrix::Identity(t, t) - (c.eps_m - c.eps_b) * u) / (c.eps_b - c.eps_w);
}

inline double penalty_value(const PenaltySpec& spec, const StructureMatrix& a) {
  const Eigen::Index t = a.dim();
  if (const auto* s = std::get_if<SchattenPenalty>(&spec)) return s->mu * schatten_pow(a, s->p);
  if (std::holds_alternative<TraceOnePenalty>(spec)) {
    return std::abs(a.data().trace() - 1.0) <= 1e-8 ? 0.0 : kInf;
  }
  if (const auto* f = std::get_if<FixedPenalty>(&spec)) {
    if (f->a0.rows() != t || f->a0.cols() != t) throw Error(Errc::DimensionMismatch, "fixed structure size");
    return (a.data() - f->a0).norm() <= 1e-8 ? 0.0 : kInf;
  }
  const auto& c = std::get<ClusterPenalty>(spec);
  if (!a.strictly_pd()) return kInf;
  const Matrix a_inv = inverse_pd(a);
  constexpr double tol = 1e-6;
  if (c.eps_b == c.eps_w) {
    const Matrix expect = (c.eps_m - c.eps_b) * detail::mean_projector(t) + c.eps_w * Matrix::Identity(t, t);
    return (a_inv - expect).norm() <= tol * (1.0 + expect.norm()) ? 0.0 : kInf;
  }
  const Matrix m = cluster_m_from_structure(c, a_inv);
  if ((m - m.transpose()).norm() > tol) return kInf;
  const SymEig e = sym_eig(m);
  if (e.values(0) > 1.0 + tol || e.values(e.size() - 1) < -tol) return kInf;
  return std::abs(m.trace() - c.r) <= tol ? 0.0 : kInf;
}

/// Euclidean projection of v onto {x in [0,1]^T : sum x = r}. Bisection on the
/// shift tau in x_i = clip(v_i - tau, 0, 1), then an exact solve for tau on the
/// identified free set.
inline Vector project_capped_simplex(const Vector& v, double r) {
  const auto t = static_cast<double>(v.size());
  if (!(r > 0.0) || r > t) throw Error(Errc::BadRank, "capped simplex needs 0 < r <= T");
  auto clipped_sum = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::clamp(v(i) - tau, 0.0, 1.0);
    return s;
  };
  double lo = v.minCoeff() - 1.0;  // sum == T >= r
  double hi = v.maxCoeff();        // sum == 0 <= r
  double tau = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    tau = 0.5 * (lo + hi);
    const double s = clipped_sum(tau);
    if (std::abs(s - r) <= 1e-12) break;
    if (s > r) {
      lo = tau;
    } else {
      hi = tau;
    }
  }
  // Polish: with the active set fixed, tau solves sum_free (v_i - tau) + #capped = r.
  double free_sum = 0.0;
  double capped = 0.0;
  int free_count = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v(i) - tau;
    if (x >= 1.0) {
      capped += 1.0;
    } else if (x > 0.0) {
      free_sum += v(i);
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum - (r - capped)) / free_count;
    if (std::abs(clipped_sum(exact) - r) <= std::abs(clipped_sum(tau) - r)) tau = exact;
  }
  Vector x(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) x(i) = std::clamp(v(i) - tau, 0.0, 1.0);
  return x;
}

namespace detail {

/// Extreme point of the capped simplex minimizing sum_i cost_i x_i: weight 1 on
/// the floor(r) cheapest coordinates, the fractional remainder on the next one.
/// Ties keep index order.
inline Vector cheapest_capped_point(const Vector& cost, double r) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(cost.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return cost(a) < cost(b); });
  Vector x = Vector::Zero(cost.size());
  double remaining = r;
  for (auto i : order) {
    if (remaining <= 0.0) break;
    x(i) = std::min(1.0, remaining);
    remaining -= x(i);
  }
  return x;
}

inline void require_strict_pd(const PsdMatrix& b) {
  if (!b.strictly_pd() || !(b.min_eigenvalue() > 0.0)) {
    throw Error(Errc::NotStrictlyPd, "B must be strictly positive definite (min eig " +
                                         std::to_string(b.min_eigenvalue()) + ")");
  }
}

}  // namespace detail

/// Exact minimizer over A of lam * tr(A^{-1} B) + F(A) for B strictly PD.
inline StructureMatrix unsupervised_min(const PenaltySpec& spec, const PsdMatrix& b, double lam) {
  if (!(lam > 0.0)) throw Error(Errc::BadPenaltyParam, "lambda must be positive");
  detail::require_strict_pd(b);
  const Eigen::Index t = b.dim();
  validate_penalty(spec, t);
  if (const auto* s = std::get_if<SchattenPenalty>(&spec)) {
    // Per eigenvalue: minimize lam * sigma / g + mu * g^p  =>  g^{p+1} = lam * sigma / (mu * p).
    const double scale = lam / (s->mu * s->p);
    const double expo = 1.0 / (s->p + 1.0);
    return psd_from_spectrum(
        detail::map_spectrum(b.eig(), [&](double w) { return std::pow(scale * w, expo); }));
  }
  if (std::holds_alternative<TraceOnePenalty>(spec)) {
    const PsdMatrix root = psd_power(b, 0.5);
    const double tr = root.eig().values.sum();
    return psd_from_spectrum(detail::map_spectrum(root.eig(), [tr](double w) { return w / tr; }));
  }
  if (const auto* f = std::get_if<FixedPenalty>(&spec)) return psd_clip(f->a0);
  const auto& c = std::get<ClusterPenalty>(spec);
  // tr(A(M)^{-1} B) = const + (eps_b - eps_w) tr(M B): linear in M, minimized at a
  // spectral extreme point of S_c aligned with B's eigenvectors.
  Matrix m;
  if (c.eps_b == c.eps_w) {
    m = (c.r / static_cast<double>(t)) * Matrix::Identity(t, t);
  } else {
    const double sign = c.eps_b > c.eps_w ? 1.0 : -1.0;
    const Vector x = detail::cheapest_capped_point(sign * b.eig().values, c.r);
    m = b.eig().vectors * x.asDiagonal() * b.eig().vectors.transpose();
  }
  return cluster_structure(c, m);
}

/// Euclidean projection onto the feasible set of an indicator penalty.
inline StructureMatrix project_structure(const PenaltySpec& spec, const Matrix& a, double floor = 0.0) {
  require_square(a, "project_structure input");
  const Eigen::Index t = a.rows();
  validate_penalty(spec, t);
  if (std::holds_alternative<SchattenPenalty>(spec)) {
    throw Error(Errc::UnsupportedPenalty, "schatten penalty is smooth and has no projection");
  }
  if (const auto* f = std::get_if<FixedPenalty>(&spec)) return psd_clip(f->a0);
  if (std::holds_alternative<TraceOnePenalty>(spec)) {
    SymEig e = sym_eig(a);
    // {w >= floor, sum w = 1} is a shifted simplex: project v - floor onto sum = 1 - T floor.
    const double budget = 1.0 - floor * static_cast<double>(t);
    const Vector shifted = (e.values.array() - floor).matrix() / budget;
    e.values = (project_capped_simplex(shifted, 1.0) * budget).array() + floor;
    return psd_from_spectrum(detail::map_spectrum(e, [](double w) { return w; }));
  }
  const auto& c = std::get<ClusterPenalty>(spec);
  if (c.eps_b == c.eps_w) return cluster_structure(c, (c.r / static_cast<double>(t)) * Matrix::Identity(t, t));
  const SymEig ae = sym_eig(a);
  if (!(ae.values(ae.size() - 1) > 0.0)) throw Error(Errc::NotStrictlyPd, "cannot map a singular A into M-space");
  const Matrix a_inv = ae.vectors * ae.values.cwiseInverse().asDiagonal() * ae.vectors.transpose();
  SymEig me = sym_eig(cluster_m_from_structure(c, a_inv));
  me.values = project_capped_simplex(me.values, c.r);
  return cluster_structure(c, me.reconstruct());
}

/// Ingredients for a-priori structures.
struct GraphStructure {
  Matrix adjacency;
  double gamma = 1.0;
};
struct MeanVarianceStructure {
  Eigen::Index tasks = 1;
  double gamma = 0.0;
};
struct MetricStructure {
  Matrix theta;
};
struct CodingStructure {
  Matrix embedding;  // l x T
};

using StructureProvenance = std::variant<GraphStructure, MeanVarianceStructure, MetricStructure, CodingStructure>;

struct FixedStructure {
  StructureMatrix a;
  StructureProvenance provenance;
};

inline Matrix graph_laplacian(const Matrix& adjacency) {
  return Matrix(adjacency.rowwise().sum().asDiagonal()) - adjacency;
}

inline FixedStructure build_fixed_structure(const StructureProvenance& prov) {
  if (const auto* g = std::get_if<GraphStructure>(&prov)) {
    require_square(g->adjacency, "adjacency");
    if ((g->adjacency - g->adjacency.transpose()).norm() > 1e-12 * (1.0 + g->adjacency.norm())) {
      throw Error(Errc::AsymmetricAdjacency, "graph adjacency must be symmetric");
    }
    if ((g->adjacency.array() < 0.0).any()) throw Error(Errc::AsymmetricAdjacency, "adjacency must be nonnegative");
    if (!(g->gamma > 0.0)) throw Error(Errc::BadPenaltyParam, "graph structure needs gamma > 0");
    const Eigen::Index t = g->adjacency.rows();
    const Matrix a_dag = graph_laplacian(g->adjacency) + g->gamma * Matrix::Identity(t, t);
    return {pinv_psd(psd_clip(a_dag)), prov};
  }
  if (const auto* mv = std::get_if<MeanVarianceStructure>(&prov)) {
    if (!(mv->gamma >= 0.0) || mv->tasks < 1) throw Error(Errc::BadPenaltyParam, "mean-variance needs gamma >= 0");
    const Eigen::Index t = mv->tasks;
    const Matrix a_dag = Matrix::Identity(t, t) + mv->gamma * detail::mean_projector(t);
    return {pinv_psd(psd_clip(a_dag)), prov};
  }
  if (const auto* m = std::get_if<MetricStructure>(&prov)) {
    require_square(m->theta, "metric");
    const SymEig e = sym_eig(m->theta);
    if (!((m->theta - m->theta.transpose()).norm() <= 1e-12 * (1.0 + m->theta.norm())) ||
        !(e.values(e.size() - 1) > kDefaultRankTol * e.values(0))) {
      throw Error(Errc::NotPd, "output metric must be symmetric positive definite");
    }
    return {psd_clip(m->theta), prov};
  }
  const auto& c = std::get<CodingStructure>(prov);
  return {psd_clip(c.embedding.transpose() * c.embedding), prov};
}

}  // namespace smtl
