#pragma once

// Independent checks of the library against brute force and closed forms.
// Nothing here calls the library's C-step solvers when it acts as the reference:
// inner problems are solved by dense LU on the vectorized stationarity system,
// spectral quantities come straight from Eigen's solvers.

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <sstream>

#include "smtl/benchmark.hpp"
#include "smtl/model_selection.hpp"

namespace smtl {

struct OracleReport {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct OracleOptions {
  std::uint64_t seed = 20240601;
  int trials = -1;  // check-specific default when negative
  std::function<void(const FitReport&)> on_fit;
};

namespace oracle {

inline int trials_or(const OracleOptions& o, int dflt) { return o.trials > 0 ? o.trials : dflt; }

inline void notify(const OracleOptions& o, const FitReport& r) {
  if (o.on_fit) o.on_fit(r);
}

inline std::string seed_note(std::uint64_t seed) { return "seed=" + std::to_string(seed); }

/// Largest relative increase along the trajectory inside a delta phase,
/// including both half steps of every iteration.
inline double trajectory_violation(const FitReport& r) {
  const auto& tr = r.objective_trajectory;
  double worst = 0.0;
  auto bump = [&](double before, double after) {
    if (!std::isfinite(before)) return;
    worst = std::max(worst, (after - before) / std::max(1.0, std::abs(before)));
  };
  std::size_t it = 0;
  for (std::size_t j = 1; j < tr.size(); ++j) {
    if (std::find(r.phase_starts.begin(), r.phase_starts.end(), j) != r.phase_starts.end()) continue;
    if (it < r.supervised_objectives.size()) {
      bump(tr[j - 1], r.supervised_objectives[it]);
      bump(r.supervised_objectives[it], tr[j]);
    } else {
      bump(tr[j - 1], tr[j]);
    }
    ++it;
  }
  return worst;
}

/// Random instance with a Gaussian kernel on well separated points (K strictly PD).
inline ProblemInstance random_instance(Rng& rng, Eigen::Index n, Eigen::Index t, double lam, PenaltySpec penalty,
                                       bool masked, double delta = 1e-3) {
  const Matrix x = rng.normal_matrix(n, 3);
  auto g = std::make_shared<const GramMatrix>(KernelSpec::gaussian(0.5), x);
  Matrix y = rng.normal_matrix(n, t);
  Matrix w = Matrix::Ones(n, t);
  if (masked) {
    w.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, i % t) = 1.0;
      if (rng.uniform() < 0.3) w(i, (i + 1) % t) = 1.0;
    }
    y = (w.array() > 0.0).select(y, 0.0);
  }
  ProblemInstance inst{std::move(g), y, w, lam, 0.0, std::move(penalty), delta, LossKind::Squared};
  inst.validate();
  return inst;
}

// ---- dense reference evaluation ----

/// min over C of  sum W (Y - K C)^2 + lam tr(A^{-1}(C^T K C + delta^2 I)) + ridge tr(C^T K C)
/// for a fixed strictly PD A, by LU on the vectorized stationarity system
///   W o (K C - Y) + C (lam A^{-1} + ridge I) = 0.
/// Returns +inf when A is numerically singular.
inline double dense_inner_S(const Matrix& k, const Matrix& y, const Matrix& w, double lam, double ridge, double delta,
                            const Matrix& a, Matrix* c_out = nullptr) {
  const Eigen::Index n = k.rows();
  const Eigen::Index t = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-14 * std::max(1.0, ev.maxCoeff()))) return kInf;
  const Matrix& v = es.eigenvectors();
  const Matrix coupling = v * (lam * ev.cwiseInverse()).asDiagonal() * v.transpose() + ridge * Matrix::Identity(t, t);
  Matrix big = Matrix::Zero(n * t, n * t);
  Vector rhs(n * t);
  for (Eigen::Index tc = 0; tc < t; ++tc) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) big(tc * n + i, tc * n + j) += w(i, tc) * k(i, j);
      for (Eigen::Index s = 0; s < t; ++s) big(tc * n + i, s * n + i) += coupling(s, tc);
      rhs(tc * n + i) = w(i, tc) * y(i, tc);
    }
  }
  const Vector cv = big.partialPivLu().solve(rhs);
  const Matrix c = Eigen::Map<const Matrix>(cv.data(), n, t);
  const Matrix kc = k * c;
  double val = 0.0;
  for (Eigen::Index tc = 0; tc < t; ++tc) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = y(i, tc) - kc(i, tc);
      val += w(i, tc) * e * e;
    }
  }
  for (Eigen::Index m = 0; m < t; ++m) {
    const Vector cvm = c * v.col(m);
    const double q = std::max(0.0, cvm.dot(k * cvm));
    val += lam * (q + delta * delta) / ev(m);
    val += ridge * q;
  }
  if (c_out) *c_out = c;
  return val;
}

/// mu * sum |eig|^p, or the norm (sum |eig|^p)^{1/p} when as_norm.
inline double schatten_ref(const Matrix& a, double p, double mu, bool as_norm) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::pow(std::abs(es.eigenvalues()(i)), p);
  return mu * (as_norm ? std::pow(s, 1.0 / p) : s);
}

struct BruteForceOptions {
  int grid = 40;
  double log10_lo = -3.0;
  double log10_hi = 2.0;
  double atanh_max = 6.0;  // correlation grid rho = tanh(u), |u| <= atanh_max
  double atanh_cap = 10.0;
  int rounds = 3;
  int local = 11;
  double shrink = 0.1;
  int max_recenters = 100;
};

struct BruteForceResult {
  double value = kInf;
  Matrix A;
  Matrix C;
  long evaluations = 0;
};

inline Matrix pd_2x2(double la, double lc, double u) {
  const double a = std::pow(10.0, la);
  const double c = std::pow(10.0, lc);
  const double b = std::tanh(u) * std::sqrt(a * c);
  Matrix m(2, 2);
  m << a, b, b, c;
  return m;
}

/// Grid search over 2 x 2 PD matrices A = [[a, b], [b, c]] in (log10 a, log10 c, atanh(b / sqrt(ac)))
/// followed by local refinement rounds: an 11^3 stencil recentred until the best point is
/// interior, then shrunk.
inline BruteForceResult brute_force_2x2(const std::function<double(const Matrix&)>& f,
                                        const BruteForceOptions& o = {}) {
  BruteForceResult best;
  const int g = o.grid;
  const double hl = (o.log10_hi - o.log10_lo) / (g - 1);
  const double hu = 2.0 * o.atanh_max / (g - 1);
  double bla = 0.0;
  double blc = 0.0;
  double bu = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      for (int m = 0; m < g; ++m) {
        const double la = o.log10_lo + i * hl;
        const double lc = o.log10_lo + j * hl;
        const double u = -o.atanh_max + m * hu;
        const double v = f(pd_2x2(la, lc, u));
        ++best.evaluations;
        if (v < best.value) {
          best.value = v;
          bla = la;
          blc = lc;
          bu = u;
        }
      }
    }
  }
  double sl = hl;
  double su = hu;
  const int half = o.local / 2;
  for (int round = 0; round < o.rounds; ++round) {
    for (int rc = 0; rc < o.max_recenters; ++rc) {
      int ei = 0;
      int ej = 0;
      int em = 0;
      const double cla = bla;
      const double clc = blc;
      const double cu = bu;
      for (int i = -half; i <= half; ++i) {
        for (int j = -half; j <= half; ++j) {
          for (int m = -half; m <= half; ++m) {
            const double la = cla + i * sl / half;
            const double lc = clc + j * sl / half;
            const double u = std::clamp(cu + m * su / half, -o.atanh_cap, o.atanh_cap);
            const double v = f(pd_2x2(la, lc, u));
            ++best.evaluations;
            if (v < best.value) {
              best.value = v;
              bla = la;
              blc = lc;
              bu = u;
              ei = i;
              ej = j;
              em = m;
            }
          }
        }
      }
      const bool edge = std::abs(ei) == half || std::abs(ej) == half || (std::abs(em) == half && std::abs(bu) < o.atanh_cap);
      if (!edge) break;
    }
    sl *= o.shrink;
    su *= o.shrink;
  }
  best.A = pd_2x2(bla, blc, bu);
  return best;
}

/// Global minimum of S^delta over (C, A) for a T = 2 instance (delta = 0 gives R on PD A).
inline BruteForceResult brute_force_min_S(const ProblemInstance& inst, const BruteForceOptions& o = {}) {
  if (inst.tasks() != 2) throw Error(Errc::DimensionMismatch, "brute force needs T = 2");
  const Matrix& k = inst.K();
  auto pen = [&](const Matrix& a) -> double {
    if (const auto* s = std::get_if<SchattenPenalty>(&inst.penalty)) return schatten_ref(a, s->p, s->mu, false);
    return penalty_value(inst.penalty, psd_clip(a));
  };
  auto f = [&](const Matrix& a) {
    const double p = pen(a);
    if (!std::isfinite(p)) return kInf;
    return dense_inner_S(k, inst.Y, inst.W, inst.lam, inst.ridge, inst.delta, a) + p;
  };
  BruteForceResult r = brute_force_2x2(f, o);
  dense_inner_S(k, inst.Y, inst.W, inst.lam, inst.ridge, inst.delta, r.A, &r.C);
  return r;
}

// ---- Nelder-Mead ----

struct NelderMeadResult {
  Vector x;
  double value = kInf;
};

inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0, double step,
                                    int max_evals = 4000, double ftol = 1e-13) {
  const Eigen::Index n = x0.size();
  std::vector<Vector> s(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i + 1)](i) += step;
  for (std::size_t i = 0; i < s.size(); ++i) fv[i] = f(s[i]);
  int evals = static_cast<int>(n + 1);
  std::vector<std::size_t> idx(s.size());
  while (evals < max_evals) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t lo = idx.front();
    const std::size_t hi = idx.back();
    const std::size_t nh = idx[idx.size() - 2];
    if (std::abs(fv[hi] - fv[lo]) <= ftol * (1.0 + std::abs(fv[lo]))) {
      double spread = 0.0;
      for (const auto& p : s) spread = std::max(spread, (p - s[lo]).norm());
      if (spread < 1e-10) break;
    }
    Vector cen = Vector::Zero(n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != hi) cen += s[i];
    }
    cen /= static_cast<double>(n);
    const Vector xr = cen + (cen - s[hi]);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[lo]) {
      const Vector xe = cen + 2.0 * (cen - s[hi]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        s[hi] = xe;
        fv[hi] = fe;
      } else {
        s[hi] = xr;
        fv[hi] = fr;
      }
    } else if (fr < fv[nh]) {
      s[hi] = xr;
      fv[hi] = fr;
    } else {
      const bool outside = fr < fv[hi];
      const Vector xc = outside ? Vector(cen + 0.5 * (xr - cen)) : Vector(cen + 0.5 * (s[hi] - cen));
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[hi])) {
        s[hi] = xc;
        fv[hi] = fc;
      } else {
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (i == lo) continue;
          s[i] = s[lo] + 0.5 * (s[i] - s[lo]);
          fv[i] = f(s[i]);
          ++evals;
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {s[best], fv[best]};
}

/// Restarted Nelder-Mead from several random points; each run is restarted from its own
/// optimum until it stops improving.
inline NelderMeadResult multistart_nm(const std::function<double(const Vector&)>& f, Eigen::Index dim, Rng& rng,
                                      int starts, double scale) {
  NelderMeadResult best;
  for (int s = 0; s < starts; ++s) {
    Vector x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = scale * rng.normal();
    NelderMeadResult r = nelder_mead(f, x, 0.5 * scale);
    for (int rs = 0; rs < 20; ++rs) {
      NelderMeadResult r2 = nelder_mead(f, r.x, 0.05 * scale * std::pow(0.5, rs));
      if (r2.value >= r.value - 1e-15 * (1.0 + std::abs(r.value))) break;
      r = r2;
    }
    if (r.value < best.value) best = r;
  }
  return best;
}

inline Matrix lower_from(const Vector& x, Eigen::Index l) {
  Matrix m = Matrix::Zero(l, l);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index i = j; i < l; ++i) m(i, j) = x(k++);
  }
  return m;
}

/// min over Z of ||Y - F L Z||^2 + weight ||Z||^2, i.e. the inner problem in B = L Z.
inline double ridge_in_factor(const Matrix& f, const Matrix& l, const Matrix& y, double weight) {
  const Matrix fl = f * l;
  Matrix h = fl.transpose() * fl;
  h.diagonal().array() += weight;
  const Matrix z = h.ldlt().solve(fl.transpose() * y);
  return (y - fl * z).squaredNorm() + weight * z.squaredNorm();
}

/// Symmetric square root through Eigen's solver.
inline Matrix sqrt_ref(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix pinv_ref(const Matrix& m, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector v = es.eigenvalues();
  const double cut = tol * std::max(1.0, v.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = v(i) > cut ? 1.0 / v(i) : 0.0;
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix random_psd_rank(Rng& rng, Eigen::Index t, Eigen::Index rank) {
  const Matrix g = rng.normal_matrix(t, rank);
  return g * g.transpose();
}

inline OracleReport make_report(std::string name, double observed, double expected, double tol, bool passed,
                                std::string detail) {
  return OracleReport{std::move(name), passed, observed, expected, tol, std::move(detail)};
}

}  // namespace oracle

// ---- the checks ----

/// min Q (solver on S^delta, mapped to the Q form) against the brute-force min of R,
/// plus objective preservation of the Q <-> R maps.
inline OracleReport check_theorem1(const OracleOptions& opt = {}, double tol = 1e-4, double map_tol = 1e-6) {
  const int trials = oracle::trials_or(opt, 20);
  double worst_gap = 0.0;
  double worst_map = 0.0;
  std::ostringstream detail;
  for (int tr = 0; tr < trials; ++tr) {
    const std::uint64_t seed = substream_seed(opt.seed, {1, static_cast<std::uint64_t>(tr)});
    Rng rng(seed);
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(tr % 5);
    const double lam = std::pow(10.0, rng.uniform(-1.0, 0.5));
    ProblemInstance inst = oracle::random_instance(rng, n, 2, lam, SchattenPenalty{1.0, 1.0}, tr % 2 == 1, 1e-6);

    SolverConfig cfg;
    cfg.epsilon = 1e-13;
    cfg.max_iter = 200000;
    cfg.delta = 1e-1;
    cfg.schedule = {true, 0.1, 1e-6};
    const FitResult fr = fit(inst, cfg);
    oracle::notify(opt, fr.report);
    const ProblemInstance& fitted = *fr.model.inst;
    const ParamPair q = map_R_to_Q(fitted.K(), fr.model.C, fr.model.A);
    const double q_min = eval_Q(fitted, q.C, q.A);

    ProblemInstance r_inst = inst;
    r_inst.delta = 0.0;
    const auto bf = oracle::brute_force_min_S(r_inst);
    const double gap = std::abs(q_min - bf.value);
    worst_gap = std::max(worst_gap, gap);

    const double r_at = eval_R(fitted, fr.model.C, fr.model.A);
    double m = std::abs(q_min - r_at) / std::max(1.0, std::abs(r_at));
    // Q -> R at a random point with a rank-deficient A.
    const Matrix c_rand = rng.normal_matrix(n, 2);
    const StructureMatrix a_rand = psd_clip(oracle::random_psd_rank(rng, 2, 1 + (tr % 2)));
    const ParamPair rp = map_Q_to_R(c_rand, a_rand);
    const double qv = eval_Q(fitted, c_rand, a_rand);
    m = std::max(m, std::abs(eval_R(fitted, rp.C, rp.A) - qv) / std::max(1.0, std::abs(qv)));
    worst_map = std::max(worst_map, m);
    if (gap > tol || m > map_tol) {
      detail << " trial " << tr << " (" << oracle::seed_note(seed) << "): minQ=" << format_double(q_min)
             << " minR=" << format_double(bf.value) << " map=" << format_double(m) << ';';
    }
  }
  const bool ok = worst_gap <= tol && worst_map <= map_tol;
  return oracle::make_report("theorem1", worst_gap, 0.0, tol, ok,
                             std::to_string(trials) + " trials, worst map error " + format_double(worst_map) +
                                 ", " + oracle::seed_note(opt.seed) + detail.str());
}

/// R at the delta-solutions for delta = 1e-1 .. 1e-5 is non-increasing and ends near min R.
inline OracleReport check_barrier_convergence(const OracleOptions& opt = {}, double tol = 1e-3) {
  const int trials = oracle::trials_or(opt, 5);
  double worst_gap = 0.0;
  double worst_rise = 0.0;
  std::ostringstream detail;
  for (int tr = 0; tr < trials; ++tr) {
    const std::uint64_t seed = substream_seed(opt.seed, {2, static_cast<std::uint64_t>(tr)});
    Rng rng(seed);
    const double lam = std::pow(10.0, rng.uniform(-1.0, 0.5));
    ProblemInstance inst = oracle::random_instance(rng, 6, 2, lam, SchattenPenalty{1.0, 1.0}, tr % 2 == 1);
    std::vector<double> rv;
    for (int e = 1; e <= 5; ++e) {
      SolverConfig cfg;
      cfg.delta = std::pow(10.0, -e);
      cfg.epsilon = 1e-15;
      cfg.max_iter = 200000;
      const FitResult fr = fit(inst, cfg);
      oracle::notify(opt, fr.report);
      rv.push_back(eval_R(*fr.model.inst, fr.model.C, fr.model.A));
    }
    for (std::size_t i = 1; i < rv.size(); ++i) {
      worst_rise = std::max(worst_rise, (rv[i] - rv[i - 1]) / std::max(1.0, std::abs(rv[i - 1])));
    }
    ProblemInstance r_inst = inst;
    r_inst.delta = 0.0;
    const double rmin = oracle::brute_force_min_S(r_inst).value;
    const double gap = std::abs(rv.back() - rmin);
    worst_gap = std::max(worst_gap, gap);
    detail << " trial " << tr << ": R=";
    for (double v : rv) detail << format_double(v) << ' ';
    detail << "bruteR=" << format_double(rmin) << ';';
  }
  const double rise_tol = 1e-9;
  const bool ok = worst_gap <= tol && worst_rise <= rise_tol;
  return oracle::make_report("barrier_convergence", worst_gap, 0.0, tol, ok,
                             "worst relative rise " + format_double(worst_rise) + " (allowed " +
                                 format_double(rise_tol) + "), " + oracle::seed_note(opt.seed) + detail.str());
}

/// The closed-form structure step against random PD probes, and its commutation with B.
inline OracleReport check_closed_form(const OracleOptions& opt = {}, int probes = 10000, double margin = -1e-8,
                                      double commute_tol = 1e-8) {
  const int trials = oracle::trials_or(opt, 50);
  double worst_margin = kInf;
  double worst_comm = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {3, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index t = 2 + static_cast<Eigen::Index>(tr % 3);
    const double p = 1.0 + static_cast<double>(tr % 3);
    const double mu = std::pow(10.0, rng.uniform(-0.5, 0.5));
    const double lam = std::pow(10.0, rng.uniform(-1.0, 1.0));
    Matrix b = rng.random_pd(t, 0.05) * std::pow(10.0, rng.uniform(-1.0, 1.0));
    const PenaltySpec pen = SchattenPenalty{p, mu};
    const StructureMatrix a_star = unsupervised_min(pen, psd_clip(b), lam);
    auto obj = [&](const Matrix& a) {
      const Matrix ainv_b = a.ldlt().solve(b);
      return lam * ainv_b.trace() + oracle::schatten_ref(a, p, mu, false);
    };
    const double f_star = obj(a_star.data());
    const Matrix root = oracle::sqrt_ref(a_star.data());
    for (int k = 0; k < probes; ++k) {
      Matrix probe;
      if (k % 2 == 0) {
        probe = rng.random_pd(t, 1e-3) * std::pow(10.0, rng.uniform(-2.0, 2.0)) * a_star.data().trace() / t;
      } else {
        Matrix s = rng.normal_matrix(t, t);
        s = 0.5 * (s + s.transpose());
        const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));
        Matrix m = Matrix::Identity(t, t) + eps * s / std::max(1.0, s.norm());
        probe = root * m * root;
      }
      probe = 0.5 * (probe + probe.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(probe, Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 0.0)) continue;
      worst_margin = std::min(worst_margin, (obj(probe) - f_star) / std::max(1.0, std::abs(f_star)));
    }
    const Matrix ab = a_star.data() * b;
    worst_comm = std::max(worst_comm, (ab - ab.transpose()).norm() / std::max(1.0, a_star.data().norm() * b.norm()));
  }
  const bool ok = worst_margin >= margin && worst_comm <= commute_tol;
  return oracle::make_report("closed_form", worst_margin, 0.0, -margin, ok,
                             std::to_string(trials) + " instances x " + std::to_string(probes) +
                                 " probes, worst relative commutator " + format_double(worst_comm) + ", " +
                                 oracle::seed_note(opt.seed));
}

/// Random strictly PD initializations reach the same final objective.
inline OracleReport check_multi_start(const OracleOptions& opt = {}, int starts = 10, double tol = 1e-5) {
  const int trials = oracle::trials_or(opt, 10);
  double worst = 0.0;
  std::ostringstream detail;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {4, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index t = 2 + static_cast<Eigen::Index>(tr % 3);
    const double p = tr % 2 == 0 ? 1.0 : 2.0;
    const ProblemInstance inst = oracle::random_instance(rng, 8, t, std::pow(10.0, rng.uniform(-1.0, 0.5)),
                                                         SchattenPenalty{p, 1.0}, tr % 3 == 0);
    double lo = kInf;
    double hi = -kInf;
    for (int s = 0; s < starts; ++s) {
      SolverConfig cfg;
      cfg.epsilon = 1e-13;
      cfg.max_iter = 100000;
      cfg.a0 = rng.random_pd(t, 0.05) * std::pow(10.0, rng.uniform(-2.0, 2.0));
      const FitResult fr = fit(inst, cfg);
      oracle::notify(opt, fr.report);
      const double v = fr.report.objective_trajectory.back();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double spread = (hi - lo) / std::max(1.0, std::abs(lo));
    worst = std::max(worst, spread);
    detail << ' ' << format_double(spread);
  }
  return oracle::make_report("multi_start", worst, 0.0, tol, worst <= tol,
                             "relative spread per instance:" + detail.str() + ", " + oracle::seed_note(opt.seed));
}

/// grad_S_C and grad_S_A against central differences.
inline OracleReport check_gradients(const OracleOptions& opt = {}, double tol = 1e-5) {
  const int trials = oracle::trials_or(opt, 20);
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {5, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index t = 2 + static_cast<Eigen::Index>(tr % 3);
    const double p = 1.0 + 0.5 * static_cast<double>(tr % 3);
    ProblemInstance inst = oracle::random_instance(rng, 6, t, std::pow(10.0, rng.uniform(-1.0, 0.5)),
                                                   SchattenPenalty{p, 1.0}, tr % 2 == 1, 0.1);
    inst.ridge = tr % 4 == 0 ? 0.3 : 0.0;
    const Matrix c = rng.normal_matrix(inst.n(), t);
    const StructureMatrix a = psd_clip(rng.random_pd(t, 0.5));
    const double h = 1e-5;

    const Matrix gc = grad_S_C(inst, c, a);
    Matrix fc(gc.rows(), gc.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      for (Eigen::Index i = 0; i < c.rows(); ++i) {
        Matrix cp = c;
        Matrix cm = c;
        cp(i, j) += h;
        cm(i, j) -= h;
        fc(i, j) = (eval_S(inst, cp, a) - eval_S(inst, cm, a)) / (2.0 * h);
      }
    }
    worst = std::max(worst, (gc - fc).norm() / std::max(gc.norm(), 1e-8));

    const Matrix ga = grad_S_A(inst, c, a);
    Matrix fa(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        Matrix e = Matrix::Zero(t, t);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        const double d = (eval_S(inst, c, psd_clip(a.data() + h * e)) - eval_S(inst, c, psd_clip(a.data() - h * e))) /
                         (2.0 * h);
        fa(i, j) = i == j ? d : 0.5 * d;
        fa(j, i) = fa(i, j);
      }
    }
    worst = std::max(worst, (ga - fa).norm() / std::max(ga.norm(), 1e-8));
  }
  return oracle::make_report("gradients", worst, 0.0, tol, worst < tol,
                             std::to_string(trials) + " points, relative Frobenius error, " + oracle::seed_note(opt.seed));
}

/// Spectral vs Kronecker solves for every n <= 12, T <= 4, and the masked solvers with a full mask.
inline OracleReport check_solver_paths(const OracleOptions& opt = {}, double tol_kron = 1e-8, double tol_cg = 1e-7) {
  double worst_kron = 0.0;
  double worst_cg = 0.0;
  double worst_direct = 0.0;
  int count = 0;
  for (Eigen::Index n = 1; n <= 12; ++n) {
    for (Eigen::Index t = 1; t <= 4; ++t) {
      Rng rng(substream_seed(opt.seed, {6, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t)}));
      const double lam = std::pow(10.0, rng.uniform(-1.0, 1.0));
      const ProblemInstance inst = oracle::random_instance(rng, n, t, lam, SchattenPenalty{}, false);
      const StructureMatrix a = psd_clip(rng.random_pd(t, 0.2));
      const double ridge = (n + t) % 3 == 0 ? 0.25 : 0.0;
      const Matrix cs = sylvester_ls_solve(inst.gram->k(), a, lam, inst.Y, ridge);
      const Matrix ck = kron_ls_solve(inst.gram->k(), a, lam, inst.Y, ridge);
      const double scale = std::max(cs.norm(), 1e-12);
      worst_kron = std::max(worst_kron, (cs - ck).norm() / scale);

      ProblemInstance full = inst;
      full.ridge = ridge;
      const Matrix cg = solve_masked_cg(full, a, Matrix::Zero(n, t)).C;
      worst_cg = std::max(worst_cg, (cs - cg).norm() / scale);
      const Matrix cd = solve_masked_direct(full, a);
      worst_direct = std::max(worst_direct, (cs - cd).norm() / scale);
      ++count;
    }
  }
  const bool ok = worst_kron <= tol_kron && worst_cg <= tol_cg && worst_direct <= tol_kron;
  return oracle::make_report("solver_paths", std::max(worst_kron, worst_direct), 0.0, tol_kron, ok,
                             std::to_string(count) + " instances; masked CG vs spectral " + format_double(worst_cg) +
                                 " (allowed " + format_double(tol_cg) + "), direct vs spectral " +
                                 format_double(worst_direct) + ", " + oracle::seed_note(opt.seed));
}

/// Alignment construction: A* on M's eigenvectors keeps tr(A^+ M) and does not increase ||A||_p.
inline OracleReport check_alignment(const OracleOptions& opt = {}, double trace_tol = 1e-8, double norm_slack = 1e-10) {
  const int trials = oracle::trials_or(opt, 50);
  double worst_trace = 0.0;
  double worst_norm = -kInf;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {7, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(tr % 4);
    const Eigen::Index rank_a = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
    const Eigen::Index ra = std::min(rank_a, n);
    const Matrix a = oracle::random_psd_rank(rng, n, ra);
    // M inside Ran(A): project a random PSD matrix onto Ran(A).
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a);
    const Matrix basis = ea.eigenvectors().rightCols(ra);
    const Eigen::Index rm = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(ra));
    const Matrix gm = basis * rng.normal_matrix(ra, std::min(rm, ra));
    const Matrix m = gm * gm.transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> em(m);
    const Matrix u = em.eigenvectors().rowwise().reverse();  // descending
    const Vector sig = em.eigenvalues().reverse();
    const Eigen::Index r = (sig.array() > 1e-10 * std::max(1.0, sig(0))).count();
    const Matrix theta = oracle::pinv_ref(a);
    Eigen::SelfAdjointEigenSolver<Matrix> et(theta);
    const Matrix rr = u.transpose() * et.eigenvectors();
    Vector gamma = Vector::Zero(n);
    for (Eigen::Index i = 0; i < r; ++i) gamma(i) = rr.row(i).array().square().matrix().dot(et.eigenvalues());
    const Matrix theta_p = u * gamma.asDiagonal() * u.transpose();
    const Matrix a_star = oracle::pinv_ref(theta_p);

    const double t0 = (oracle::pinv_ref(a) * m).trace();
    const double t1 = (oracle::pinv_ref(a_star) * m).trace();
    worst_trace = std::max(worst_trace, std::abs(t0 - t1) / std::max(1.0, std::abs(t0)));
    for (double p : {1.0, 2.0, 3.0}) {
      const double na = oracle::schatten_ref(a, p, 1.0, true);
      const double ns = oracle::schatten_ref(a_star, p, 1.0, true);
      worst_norm = std::max(worst_norm, (ns - na) / std::max(1.0, na));
    }
  }
  const bool ok = worst_trace <= trace_tol && worst_norm <= norm_slack;
  return oracle::make_report("alignment", worst_trace, 0.0, trace_tol, ok,
                             "worst relative norm excess " + format_double(worst_norm) + " (allowed " +
                                 format_double(norm_slack) + "), " + oracle::seed_note(opt.seed));
}

/// Coded problem with kernel k I_l and coefficients C L^T against the structured problem with A = L^T L.
/// Squared loss: ||(Y - K C) L^T||^2 equals the A-metric residual tr((Y - K C) A (Y - K C)^T).
/// Inner-product loss (logistic in <y_i, z_i>): coded loss equals the loss of K C A against Y.
inline OracleReport check_coding_equivalence(const OracleOptions& opt = {}, double tol = 1e-9) {
  const int trials = oracle::trials_or(opt, 50);
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {8, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index n = 3 + tr % 5;
    const Eigen::Index t = 2 + tr % 3;
    const Eigen::Index l = 1 + tr % 5;
    const double lam = rng.uniform(0.1, 2.0);
    const Matrix x = rng.normal_matrix(n, 2);
    const GramMatrix g(KernelSpec::gaussian(0.7), x);
    const Matrix& k = g.data();
    const Matrix emb = rng.normal_matrix(l, t);
    const Matrix a = emb.transpose() * emb;
    const Matrix y = rng.normal_matrix(n, t);
    const Matrix c = rng.normal_matrix(n, t);

    const Matrix yc = y * emb.transpose();
    const Matrix cc = c * emb.transpose();
    const double reg_coded = lam * (cc.transpose() * k * cc).trace();
    const double reg_struct = lam * (a * c.transpose() * k * c).trace();

    const double sq_coded = (yc - k * cc).squaredNorm() + reg_coded;
    const Matrix res = y - k * c;
    const double sq_struct = (res * a * res.transpose()).trace() + reg_struct;
    worst = std::max(worst, std::abs(sq_coded - sq_struct) / std::max(1.0, std::abs(sq_struct)));

    auto logistic = [](double m) { return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); };
    const Matrix zc = k * cc;
    const Matrix zs = k * c * a;
    double lc = 0.0;
    double ls = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      lc += logistic(yc.row(i).dot(zc.row(i)));
      ls += logistic(y.row(i).dot(zs.row(i)));
    }
    worst = std::max(worst, std::abs((lc + reg_coded) - (ls + reg_struct)) / std::max(1.0, std::abs(ls + reg_struct)));
  }
  return oracle::make_report("coding_equivalence", worst, 0.0, tol, worst <= tol,
                             std::to_string(trials) + " trials, squared and inner-product losses, " +
                                 oracle::seed_note(opt.seed));
}

/// Deformed-metric objective written out elementwise against eval_Q with A = Theta.
inline OracleReport check_metric_equivalence(const OracleOptions& opt = {}, double tol = 1e-9) {
  const int trials = oracle::trials_or(opt, 50);
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {9, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index n = 3 + tr % 5;
    const Eigen::Index t = 1 + tr % 4;
    const Matrix theta = tr == 0 ? Matrix::Identity(t, t) : oracle::random_psd_rank(rng, t, 1 + tr % t);
    ProblemInstance inst = oracle::random_instance(rng, n, t, rng.uniform(0.1, 2.0), FixedPenalty{theta}, tr % 2 == 1);
    const Matrix c = rng.normal_matrix(n, t);
    const Matrix& k = inst.K();
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index s = 0; s < t; ++s) {
        double z = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          for (Eigen::Index u = 0; u < t; ++u) z += k(i, j) * c(j, u) * theta(u, s);
        }
        v += inst.W(i, s) * (inst.Y(i, s) - z) * (inst.Y(i, s) - z);
      }
    }
    double reg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index s = 0; s < t; ++s) {
          for (Eigen::Index u = 0; u < t; ++u) reg += k(i, j) * c(i, s) * theta(s, u) * c(j, u);
        }
      }
    }
    const double explicit_val = v + inst.lam * reg;
    const double lib = eval_Q(inst, c, psd_clip(theta));
    const double err = std::abs(explicit_val - lib) / std::max(1.0, std::abs(lib));
    worst = std::max(worst, err);
  }
  return oracle::make_report("metric_equivalence", worst, 0.0, tol, worst <= tol,
                             std::to_string(trials) + " trials, " + oracle::seed_note(opt.seed));
}

namespace oracle {

struct FeatureSpaceProblem {
  Matrix k;       // n x n, rank l
  Matrix k_feat;  // n x l, K = k_feat k_feat^T
  Matrix y;
};

inline FeatureSpaceProblem feature_space_problem(Rng& rng, Eigen::Index n, Eigen::Index d) {
  FeatureSpaceProblem fp;
  const Matrix x = rng.normal_matrix(n, d);
  fp.k = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(fp.k);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (es.eigenvalues()(i) > 1e-10 * es.eigenvalues().maxCoeff()) keep.push_back(i);
  }
  fp.k_feat.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    fp.k_feat.col(static_cast<Eigen::Index>(j)) =
        es.eigenvectors().col(keep[j]) * std::sqrt(es.eigenvalues()(keep[j]));
  }
  fp.y = rng.normal_matrix(n, 2);
  return fp;
}

/// Feature-space problem: min over (B, D) of ||Y - K~B||^2 + tr(B^T D^+ B) + lam ||D||_p,
/// with D = L L^T and B = L Z.
inline double feature_space_min(const FeatureSpaceProblem& fp, double lam, double p, Rng& rng) {
  const Eigen::Index l = fp.k_feat.cols();
  auto f = [&](const Vector& v) {
    const Matrix lm = lower_from(v, l);
    return ridge_in_factor(fp.k_feat, lm, fp.y, 1.0) + lam * schatten_ref(lm * lm.transpose(), p, 1.0, true);
  };
  return multistart_nm(f, l * (l + 1) / 2, rng, 12, 1.0).value;
}

/// Trace-constrained form: min over (B, D), tr(D) <= 1, of ||Y - K~B||^2 + gamma tr(B^T D^+ B).
inline double trace_constrained_min(const FeatureSpaceProblem& fp, double gamma, Rng& rng) {
  const Eigen::Index l = fp.k_feat.cols();
  auto f = [&](const Vector& v) {
    const Matrix lm = lower_from(v, l);
    const double fro = lm.norm();
    if (!(fro > 1e-12)) return fp.y.squaredNorm();
    return ridge_in_factor(fp.k_feat, lm / fro, fp.y, gamma);
  };
  return multistart_nm(f, l * (l + 1) / 2, rng, 12, 1.0).value;
}

/// min of R with unit trace weight and penalty lam ||A||_p by brute force over 2 x 2 A.
inline double structured_min(const FeatureSpaceProblem& fp, double lam, double p) {
  const Matrix w = Matrix::Ones(fp.y.rows(), fp.y.cols());
  auto f = [&](const Matrix& a) { return dense_inner_S(fp.k, fp.y, w, 1.0, 0.0, 0.0, a) + lam * schatten_ref(a, p, 1.0, true); };
  return brute_force_2x2(f).value;
}

}  // namespace oracle

/// Feature-space problem vs the structured problem with F(A) = lam ||A||_p (p = 1, 2).
inline OracleReport check_feature_space_equivalence(const OracleOptions& opt = {}, double tol = 1e-3) {
  const int trials = oracle::trials_or(opt, 3);
  double worst = 0.0;
  std::ostringstream detail;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {10, static_cast<std::uint64_t>(tr)}));
    const auto fp = oracle::feature_space_problem(rng, 5, 2);
    const double lam = std::pow(10.0, rng.uniform(-0.5, 0.5));
    for (double p : {1.0, 2.0}) {
      const double tv = oracle::feature_space_min(fp, lam, p, rng);
      const double rv = oracle::structured_min(fp, lam, p);
      worst = std::max(worst, std::abs(tv - rv));
      detail << " p=" << p << ": feature=" << format_double(tv) << " structured=" << format_double(rv) << ';';
    }
  }
  return oracle::make_report("feature_space_equivalence", worst, 0.0, tol, worst <= tol,
                             oracle::seed_note(opt.seed) + detail.str());
}

/// The trace-constrained feature-space problem with weight gamma against the p = 1
/// feature-space problem at lam = gamma^2 / 4 (claimed to share the minimum).
inline OracleReport check_feature_space_calibration(const OracleOptions& opt = {}, double tol = 1e-3) {
  const int trials = oracle::trials_or(opt, 3);
  double worst = 0.0;
  std::ostringstream detail;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {11, static_cast<std::uint64_t>(tr)}));
    const auto fp = oracle::feature_space_problem(rng, 5, 2);
    const double gamma = std::pow(10.0, rng.uniform(-0.3, 0.5));
    const double tv = oracle::feature_space_min(fp, gamma * gamma / 4.0, 1.0, rng);
    const double cv = oracle::trace_constrained_min(fp, gamma, rng);
    worst = std::max(worst, std::abs(tv - cv));
    detail << " gamma=" << format_double(gamma) << ": feature(p=1,lam=gamma^2/4)=" << format_double(tv)
           << " trace-constrained=" << format_double(cv) << ';';
  }
  return oracle::make_report("feature_space_calibration", worst, 0.0, tol, worst <= tol,
                             oracle::seed_note(opt.seed) + detail.str());
}

/// ||W||_* = 1/2 (tr(W A^{-1} W^T) + tr(A)) at A = sqrt(W^T W) + 1e-9 I.
inline OracleReport check_nuclear_variational(const OracleOptions& opt = {}, double tol = 1e-6) {
  const int trials = oracle::trials_or(opt, 50);
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {12, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index t = 1 + tr % 3;
    Matrix w;
    if (tr == 0) {
      w = Matrix::Zero(2, 2);
      w(0, 0) = 3.0;
      w(1, 1) = 4.0;
    } else {
      w = rng.normal_matrix(t + tr % 3, t);
    }
    Matrix a = oracle::sqrt_ref(w.transpose() * w);
    a.diagonal().array() += 1e-9;
    const double var = 0.5 * ((w * a.ldlt().solve(w.transpose())).trace() + a.trace());
    Eigen::JacobiSVD<Matrix> svd(w);
    const double nuc = svd.singularValues().sum();
    worst = std::max(worst, std::abs(var - nuc));
  }
  return oracle::make_report("nuclear_variational", worst, 0.0, tol, worst <= tol,
                             std::to_string(trials) + " trials, " + oracle::seed_note(opt.seed));
}

// ---- experiment-level checks ----

struct ScalingOptions {
  Eigen::Index T = 20;
  Eigen::Index n_per_task = 30;
  Eigen::Index d_small = 5;
  Eigen::Index d_large = 150;
  int repeats = 5;
  double max_ratio = 2.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Altmin fit time (Gram excluded) at the large input dimension over the small one.
inline OracleReport check_dimension_scaling(const OracleOptions& opt = {}, const ScalingOptions& so = {}) {
  RunConfig cfg;
  cfg.seed = opt.seed;
  cfg.synth.T = so.T;
  cfg.synth.n_per_task = so.n_per_task;
  cfg.repeats = so.repeats;
  cfg.methods = {"altmin"};
  const auto cells = benchmark_cells({so.d_small, so.d_large}, {so.T}, so.repeats);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_benchmark(cfg, cells, 1);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<double> small;
  std::vector<double> large;
  std::ostringstream detail;
  for (const auto& r : rows) {
    (r.d == so.d_small ? small : large).push_back(r.fit_seconds);
    detail << " d=" << r.d << " iters=" << r.iters << " t=" << format_double(r.fit_seconds) << ';';
  }
  const double ratio = median(large) / std::max(median(small), 1e-12);
  return oracle::make_report("dimension_scaling", ratio, 0.0, so.max_ratio, ratio < so.max_ratio,
                             "median fit seconds d=" + std::to_string(so.d_small) + ": " + format_double(median(small)) +
                                 ", d=" + std::to_string(so.d_large) + ": " + format_double(median(large)) +
                                 ", benchmark wall " + format_double(wall) + " s," + detail.str());
}

struct BenefitOptions {
  double relatedness = 0.8;
  Eigen::Index T = 10;
  Eigen::Index d = 20;
  Eigen::Index n_per_task = 30;
  Eigen::Index test_per_task = 50;
  int seeds = 10;
  int folds = 5;
  // half-decade steps; both methods share the grid
  std::vector<double> grid = {1e-7, 3.16e-7, 1e-6, 3.16e-6, 1e-5, 3.16e-5, 1e-4, 3.16e-4,
                              1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1, 3.16e-1, 1.0};
};

struct BenefitResult {
  std::vector<double> mtl;
  std::vector<double> stl;
  double nI = 0.0;
};

/// Test nMSE of the trace-norm structured fit and of independent ridge, both at CV-selected lambda.
inline BenefitResult multitask_benefit_study(const OracleOptions& opt, const BenefitOptions& bo) {
  BenefitResult res;
  SyntheticSpec spec;
  spec.d = bo.d;
  spec.T = bo.T;
  spec.n_per_task = bo.n_per_task;
  spec.relatedness = bo.relatedness;
  for (int s = 0; s < bo.seeds; ++s) {
    const std::uint64_t seed = substream_seed(opt.seed, {13, static_cast<std::uint64_t>(s)});
    const SyntheticData data = synth_generate(spec, seed);
    const TaskDataset test = synth_test_set(spec, data.weights, bo.test_per_task, seed);
    const KernelSpec kernel = KernelSpec::linear();
    SolverConfig cfg;
    cfg.epsilon = 1e-8;
    cfg.stop = StopRule::Relative;
    for (int which = 0; which < 2; ++which) {
      ProblemParams params;
      params.penalty = which == 0 ? PenaltySpec{SchattenPenalty{1.0, 1.0}} : PenaltySpec{FixedPenalty{Matrix::Identity(bo.T, bo.T)}};
      SolverConfig run_cfg = cfg;
      if (which == 1) run_cfg.a0 = Matrix::Identity(bo.T, bo.T);
      const CvResult cv = cross_validate_lambda(data.train, kernel, params, run_cfg, bo.grid, bo.folds, seed);
      params.lam = cv.best_lambda;
      const FitResult fr = fit(data.train, kernel, params, run_cfg);
      oracle::notify(opt, fr.report);
      const auto per = test_nmse(fr.model, test);
      double m = 0.0;
      for (double v : per) m += v;
      (which == 0 ? res.mtl : res.stl).push_back(m / static_cast<double>(per.size()));
    }
  }
  res.nI = normalized_improvement(res.stl, res.mtl);
  return res;
}

inline OracleReport check_multitask_benefit(const OracleOptions& opt = {}, const BenefitOptions& bo = {}) {
  const BenefitResult r = multitask_benefit_study(opt, bo);
  const double mm = median(r.mtl);
  const double ms = median(r.stl);
  const bool ok = mm < ms && r.nI > 0.0;
  return oracle::make_report("multitask_benefit", mm, ms, 0.0, ok,
                             "median test nMSE structured " + format_double(mm) + " vs independent " + format_double(ms) +
                                 ", nI " + format_double(r.nI) + ", " + oracle::seed_note(opt.seed));
}

/// Monotone trajectories of a batch of altmin fits across penalties and weightings.
inline OracleReport check_monotonicity(const OracleOptions& opt = {}, double tol = 1e-10) {
  const int trials = oracle::trials_or(opt, 24);
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(substream_seed(opt.seed, {14, static_cast<std::uint64_t>(tr)}));
    const Eigen::Index t = 2 + tr % 3;
    PenaltySpec pen;
    switch (tr % 4) {
      case 0: pen = SchattenPenalty{1.0 + 0.5 * (tr % 3), 1.0}; break;
      case 1: pen = TraceOnePenalty{}; break;
      case 2: pen = ClusterPenalty{1.0, 1.0, 1.0, 2.0}; break;
      default: pen = SchattenPenalty{2.0, 0.3}; break;
    }
    const ProblemInstance inst = oracle::random_instance(rng, 9, t, std::pow(10.0, rng.uniform(-1.0, 0.5)), pen, tr % 2 == 0);
    SolverConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 2000;
    if (tr % 3 == 0) cfg.schedule = {true, 0.1, 1e-6};
    const FitResult fr = fit(inst, cfg);
    oracle::notify(opt, fr.report);
    worst = std::max(worst, oracle::trajectory_violation(fr.report));
  }
  return oracle::make_report("monotonicity", worst, 0.0, tol, worst <= tol,
                             std::to_string(trials) + " fits, worst relative increase, " + oracle::seed_note(opt.seed));
}

struct NamedCheck {
  const char* name;
  std::function<OracleReport(const OracleOptions&)> run;
};

inline std::vector<NamedCheck> verification_checks() {
  return {
      {"theorem1", [](const OracleOptions& o) { return check_theorem1(o); }},
      {"barrier_convergence", [](const OracleOptions& o) { return check_barrier_convergence(o); }},
      {"closed_form", [](const OracleOptions& o) { return check_closed_form(o); }},
      {"multi_start", [](const OracleOptions& o) { return check_multi_start(o); }},
      {"gradients", [](const OracleOptions& o) { return check_gradients(o); }},
      {"solver_paths", [](const OracleOptions& o) { return check_solver_paths(o); }},
      {"monotonicity", [](const OracleOptions& o) { return check_monotonicity(o); }},
      {"alignment", [](const OracleOptions& o) { return check_alignment(o); }},
      {"coding_equivalence", [](const OracleOptions& o) { return check_coding_equivalence(o); }},
      {"metric_equivalence", [](const OracleOptions& o) { return check_metric_equivalence(o); }},
      {"feature_space_equivalence", [](const OracleOptions& o) { return check_feature_space_equivalence(o); }},
      {"feature_space_calibration", [](const OracleOptions& o) { return check_feature_space_calibration(o); }},
      {"nuclear_variational", [](const OracleOptions& o) { return check_nuclear_variational(o); }},
  };
}

/// Runs every check whose name contains filter (all when empty).
inline std::vector<OracleReport> run_verification_suite(const std::string& filter = "", const OracleOptions& opt = {}) {
  std::vector<OracleReport> out;
  for (const auto& c : verification_checks()) {
    if (!filter.empty() && std::string(c.name).find(filter) == std::string::npos) continue;
    out.push_back(c.run(opt));
  }
  return out;
}

inline std::string format_report_line(const OracleReport& r) {
  return std::string(r.passed ? "PASS " : "FAIL ") + r.name + " observed=" + format_double(r.observed) +
         " expected=" + format_double(r.expected) + " tol=" + format_double(r.tolerance) + " | " + r.detail;
}

inline void write_reports_csv(std::ostream& out, const std::vector<OracleReport>& reports) {
  out << "name,passed,observed,expected,tolerance,detail\n";
  for (const auto& r : reports) {
    std::string d = r.detail;
    std::replace(d.begin(), d.end(), '"', '\'');
    out << r.name << ',' << (r.passed ? 1 : 0) << ',' << format_double(r.observed) << ',' << format_double(r.expected)
        << ',' << format_double(r.tolerance) << ",\"" << d << "\"\n";
  }
}

}  // namespace smtl
