#pragma once

// Block-coordinate drivers over (C, A) for the barrier objective S:
// alternating minimization (exact block minimizers) and first-order BCD
// (one guarded gradient / projected-gradient step per block).

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smtl/objectives.hpp"

namespace smtl {

enum class SolverMode { AltMin, Bcd };
enum class StopRule { Absolute, Relative };
enum class MaskedSolver { Auto, Direct, Cg };
enum class Termination { Converged, MaxIter };

inline const char* to_string(SolverMode m) { return m == SolverMode::AltMin ? "altmin" : "bcd"; }
inline const char* to_string(Termination t) { return t == Termination::Converged ? "converged" : "max_iter"; }

struct DeltaSchedule {
  bool geometric = false;
  double factor = 0.1;
  double floor = 1e-6;
};

struct SolverConfig {
  SolverMode mode = SolverMode::AltMin;
  double epsilon = 1e-8;
  int max_iter = 500;
  double delta = 1e-3;
  DeltaSchedule schedule;
  double step_c = 1e-2;
  double step_a = 1e-2;
  std::optional<Matrix> a0;  // identity when empty
  StopRule stop = StopRule::Absolute;
  MaskedSolver masked = MaskedSolver::Auto;
  // Above this many observed entries the automatic masked path switches to CG.
  Eigen::Index direct_limit = 6000;

  void validate() const {
    if (!(epsilon > 0.0)) throw Error(Errc::BadConfig, "epsilon must be > 0");
    if (max_iter < 1) throw Error(Errc::BadConfig, "max_iter must be >= 1");
    if (!(delta > 0.0)) throw Error(Errc::BadConfig, "delta must be > 0");
    if (schedule.geometric) {
      if (!(schedule.factor > 0.0 && schedule.factor < 1.0)) {
        throw Error(Errc::BadConfig, "geometric delta factor must lie in (0, 1)");
      }
      if (!(schedule.floor > 0.0)) throw Error(Errc::BadConfig, "delta floor must be > 0");
    }
    if (mode == SolverMode::Bcd && !(step_c > 0.0 && step_a > 0.0)) {
      throw Error(Errc::BadConfig, "bcd step sizes must be > 0");
    }
  }
};

struct WallTimes {
  double gram = 0.0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  double objective = 0.0;
  double total = 0.0;  // fit loop only, Gram construction excluded
};

struct FitReport {
  std::vector<double> objective_trajectory;   // S(C_t, A_t), one entry per outer iterate
  std::vector<double> supervised_objectives;  // S(C_{t+1}, A_t), one entry per iteration
  std::vector<std::size_t> phase_starts;      // trajectory index where each delta phase begins
  std::vector<double> phase_deltas;
  int iters = 0;
  Termination termination = Termination::MaxIter;
  double final_delta = 0.0;
  WallTimes wall_times;
  std::string supervised_path;
  int threads = 1;
};

struct ModelState {
  Matrix C;  // R parameterization: training predictions are K C
  StructureMatrix A;
  KernelSpec kernel;
  Matrix X_train;
  std::shared_ptr<const ProblemInstance> inst;  // empty for models loaded from disk
};

struct FitResult {
  ModelState model;
  FitReport report;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::optional<double> constant_weight(const Matrix& w) {
  if (w.size() == 0) return std::nullopt;
  const double c = w(0, 0);
  if (!(c > 0.0)) return std::nullopt;
  if ((w.array() != c).any()) return std::nullopt;
  return c;
}

/// Spectral form of the inverse coupling (lam A^{-1} + ridge I)^{-1}.
inline SymEig inverse_coupling(const ProblemInstance& inst, const PsdMatrix& a) {
  SymEig m = coupling_spectrum(a, inst.lam, inst.ridge);
  m.values = m.values.cwiseInverse();
  return m;
}

}  // namespace detail

/// Exact C-step for general nonnegative weights. With M = lam A^{-1} + ridge I,
/// the minimizer is C = C_obs M^{-1}, where C_obs is supported on the observed
/// entries O = {(i,t) : W_it > 0} and solves the |O| x |O| SPD system
///   (K_ij [M^{-1}]_ts + diag(1 / W_it)) alpha = y_O.
inline Matrix solve_masked_direct(const ProblemInstance& inst, const PsdMatrix& a) {
  const SymEig coupling_inv = detail::inverse_coupling(inst, a);
  const Matrix a_tilde = coupling_inv.reconstruct();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> obs;
  for (Eigen::Index t = 0; t < inst.W.cols(); ++t) {
    for (Eigen::Index i = 0; i < inst.W.rows(); ++i) {
      if (inst.W(i, t) > 0.0) obs.emplace_back(i, t);
    }
  }
  const auto m = static_cast<Eigen::Index>(obs.size());
  Matrix g(m, m);
  Vector rhs(m);
  const Matrix& k = inst.K();
  for (Eigen::Index b = 0; b < m; ++b) {
    const auto [ib, tb] = obs[static_cast<std::size_t>(b)];
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto [ir, tr] = obs[static_cast<std::size_t>(r)];
      g(r, b) = k(ir, ib) * a_tilde(tr, tb);
    }
    g(b, b) += 1.0 / inst.W(ib, tb);
    rhs(b) = inst.Y(ib, tb);
  }
  Eigen::LLT<Matrix> llt(g);
  Vector alpha;
  if (llt.info() == Eigen::Success) {
    alpha = llt.solve(rhs);
  } else {
    alpha = g.ldlt().solve(rhs);
  }
  Matrix c_obs = Matrix::Zero(inst.n(), inst.tasks());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto [i, t] = obs[static_cast<std::size_t>(r)];
    c_obs(i, t) = alpha(r);
  }
  return c_obs * a_tilde;
}

struct CgResult {
  Matrix C;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradient on the normal equations of the C-step,
///   K (W o (K C)) + K C M = K (W o Y),   M = lam A^{-1} + ridge I,
/// started from c0 and run to relative residual 1e-8 or 10 n T iterations.
inline CgResult solve_masked_cg(const ProblemInstance& inst, const PsdMatrix& a, const Matrix& c0) {
  const Matrix coupling = coupling_spectrum(a, inst.lam, inst.ridge).reconstruct();
  const Matrix& k = inst.K();
  const Matrix& w = inst.W;
  auto op = [&](const Matrix& c) -> Matrix {
    const Matrix kc = k * c;
    return k * (w.array() * kc.array()).matrix() + kc * coupling;
  };
  const Matrix b = k * (w.array() * inst.Y.array()).matrix();
  const double bnorm = b.norm();
  CgResult res;
  if (bnorm == 0.0) {
    res.C = Matrix::Zero(inst.n(), inst.tasks());
    return res;
  }
  Matrix x = c0;
  Matrix r = b - op(x);
  Matrix p = r;
  double rs = r.squaredNorm();
  const int max_it = static_cast<int>(10 * inst.n() * inst.tasks());
  int it = 0;
  for (; it < max_it && std::sqrt(rs) > 1e-8 * bnorm; ++it) {
    const Matrix ap = op(p);
    const double curv = (p.array() * ap.array()).sum();
    if (!(curv > 0.0)) break;
    const double alpha = rs / curv;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  res.relative_residual = (b - op(x)).norm() / bnorm;
  res.iterations = it;
  if (res.relative_residual > 1e-6) {
    throw Error(Errc::CgStall, "CG stopped at relative residual " + std::to_string(res.relative_residual));
  }
  res.C = std::move(x);
  return res;
}

/// Which exact C-step the instance gets under the configured policy.
inline std::string supervised_path(const ProblemInstance& inst, const SolverConfig& cfg) {
  if (cfg.mode == SolverMode::Bcd) return "gradient";
  if (detail::constant_weight(inst.W)) return "sylvester";
  if (cfg.masked == MaskedSolver::Cg) return "cg";
  if (cfg.masked == MaskedSolver::Direct) return "direct";
  const auto observed = (inst.W.array() > 0.0).count();
  return observed <= cfg.direct_limit ? "direct" : "cg";
}

/// One guarded gradient step on C: halve the step until S does not increase.
inline Matrix gradient_step_C(const ProblemInstance& inst, const PsdMatrix& a, const Matrix& c, double step) {
  const double s0 = eval_S(inst, c, a);
  const Matrix g = grad_S_C(inst, c, a);
  for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
    Matrix cand = c - step * g;
    if (eval_S(inst, cand, a) <= s0) return cand;
  }
  return c;
}

inline Matrix supervised_step(const ProblemInstance& inst, const PsdMatrix& a, const Matrix& c_prev,
                              const SolverConfig& cfg = {}) {
  if (cfg.mode == SolverMode::Bcd) return gradient_step_C(inst, a, c_prev, cfg.step_c);
  if (inst.loss != LossKind::Squared) {
    throw Error(Errc::UnsupportedLoss, "alternating minimization needs the squared loss; use bcd mode");
  }
  if (!a.strictly_pd()) throw Error(Errc::SingularA, "structure matrix is not strictly positive definite");
  if (const auto c = detail::constant_weight(inst.W)) {
    return sylvester_ls_solve(inst.gram->k(), a, inst.lam / *c, inst.Y, inst.ridge / *c);
  }
  const std::string path = supervised_path(inst, cfg);
  if (path == "direct") return solve_masked_direct(inst, a);
  return solve_masked_cg(inst, a, c_prev).C;
}

namespace detail {

inline double bcd_floor(const SymEig& e) { return std::max(1e-12, 1e-9 * std::max(e.values(0), 0.0)); }

inline StructureMatrix gradient_candidate_A(const ProblemInstance& inst, const Matrix& raw) {
  if (is_indicator(inst.penalty)) {
    const SymEig e = sym_eig(raw);
    return project_structure(inst.penalty, raw,
                             std::holds_alternative<TraceOnePenalty>(inst.penalty) ? bcd_floor(e) : 0.0);
  }
  SymEig e = sym_eig(raw);
  const double fl = bcd_floor(e);
  e.values = e.values.cwiseMax(fl);
  return psd_from_spectrum(std::move(e));
}

}  // namespace detail

inline StructureMatrix unsupervised_step(const ProblemInstance& inst, const Matrix& c, const StructureMatrix& a_prev,
                                         const SolverConfig& cfg = {}) {
  if (!(inst.delta > 0.0)) throw Error(Errc::BadConfig, "the structure step needs delta > 0");
  if (cfg.mode == SolverMode::AltMin) {
    // B = C^T K C + delta^2 I built from the spectrum so that tiny delta stays strictly PD.
    SymEig e = sym_eig(coefficient_gram(inst.K(), c));
    e.values = e.values.cwiseMax(0.0).array() + inst.delta * inst.delta;
    return unsupervised_min(inst.penalty, psd_from_spectrum(std::move(e), 0.0), inst.lam);
  }
  const double s0 = eval_S(inst, c, a_prev);
  const Matrix g = grad_S_A(inst, c, a_prev);
  double step = cfg.step_a;
  for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
    const Matrix raw = a_prev.data() - step * g;
    StructureMatrix cand;
    try {
      cand = detail::gradient_candidate_A(inst, 0.5 * (raw + raw.transpose()));
    } catch (const Error&) {
      continue;
    }
    if (!cand.strictly_pd()) continue;
    if (eval_S(inst, c, cand) <= s0) return cand;
  }
  return a_prev;
}

/// Runs the block-coordinate loop on a prepared instance. inst.delta is replaced
/// by the configured delta (and annealed under a geometric schedule).
inline FitResult fit(ProblemInstance inst, const SolverConfig& cfg) {
  cfg.validate();
  inst.delta = cfg.delta;
  inst.validate();
  const Eigen::Index t = inst.tasks();
  StructureMatrix a = identity_psd(t);
  if (cfg.a0) {
    a = psd_clip(*cfg.a0);
    if (!a.strictly_pd()) throw Error(Errc::NotStrictlyPd, "initial structure A0 must be strictly PD");
  }
  Matrix c = Matrix::Zero(inst.n(), t);

  FitReport rep;
  rep.supervised_path = supervised_path(inst, cfg);
  const auto t_start = detail::Clock::now();
  auto timed_eval = [&](const Matrix& cc, const StructureMatrix& aa) {
    const auto t0 = detail::Clock::now();
    const double s = eval_S(inst, cc, aa);
    rep.wall_times.objective += detail::seconds_since(t0);
    return s;
  };

  double s_prev = timed_eval(c, a);
  rep.objective_trajectory.push_back(s_prev);
  rep.phase_starts.push_back(0);
  rep.phase_deltas.push_back(inst.delta);

  for (;;) {
    bool converged = false;
    while (rep.iters < cfg.max_iter) {
      ++rep.iters;
      auto t0 = detail::Clock::now();
      c = supervised_step(inst, a, c, cfg);
      rep.wall_times.supervised += detail::seconds_since(t0);
      rep.supervised_objectives.push_back(timed_eval(c, a));

      t0 = detail::Clock::now();
      a = unsupervised_step(inst, c, a, cfg);
      rep.wall_times.unsupervised += detail::seconds_since(t0);
      const double s = timed_eval(c, a);
      rep.objective_trajectory.push_back(s);
      if (!std::isfinite(s)) {
        throw Error(Errc::NonFiniteObjective, "objective became " + std::to_string(s) + " at iteration " +
                                                  std::to_string(rep.iters));
      }
      const double scale = cfg.stop == StopRule::Relative ? 1.0 + std::abs(s_prev) : 1.0;
      const bool done = std::isfinite(s_prev) && std::abs(s - s_prev) < cfg.epsilon * scale;
      s_prev = s;
      if (done) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      rep.termination = Termination::MaxIter;
      break;
    }
    // relative slack: repeated multiplication by the factor overshoots the floor by an ulp
    if (!cfg.schedule.geometric || inst.delta <= cfg.schedule.floor * (1.0 + 1e-9)) {
      rep.termination = Termination::Converged;
      break;
    }
    inst.delta = std::max(inst.delta * cfg.schedule.factor, cfg.schedule.floor);
    s_prev = timed_eval(c, a);
    rep.phase_starts.push_back(rep.objective_trajectory.size());
    rep.phase_deltas.push_back(inst.delta);
    rep.objective_trajectory.push_back(s_prev);
  }
  rep.final_delta = inst.delta;
  rep.wall_times.total = detail::seconds_since(t_start);

  FitResult out;
  out.model.C = std::move(c);
  out.model.A = std::move(a);
  out.model.kernel = inst.gram->spec();
  out.model.X_train = inst.gram->x_train();
  out.model.inst = std::make_shared<const ProblemInstance>(std::move(inst));
  out.report = std::move(rep);
  return out;
}

struct ProblemParams {
  double lam = 1.0;
  double ridge = 0.0;
  PenaltySpec penalty = SchattenPenalty{};
  LossKind loss = LossKind::Squared;
};

/// Builds the Gram matrix for the dataset (timed separately) and fits.
inline FitResult fit(const TaskDataset& ds, const KernelSpec& kernel, const ProblemParams& params,
                     const SolverConfig& cfg) {
  if (ds.n() == 0) throw Error(Errc::EmptyTask, "dataset is empty");
  for (std::size_t t = 0; t < ds.task_sizes.size(); ++t) {
    if (ds.task_sizes[t] == 0) throw Error(Errc::EmptyTask, "task " + std::to_string(t) + " is empty");
  }
  const auto t0 = detail::Clock::now();
  auto gram = std::make_shared<const GramMatrix>(kernel, ds.X);
  const double gram_seconds = detail::seconds_since(t0);
  ProblemInstance inst{std::move(gram), ds.Y, ds.W, params.lam, params.ridge, params.penalty, cfg.delta, params.loss};
  FitResult res = fit(std::move(inst), cfg);
  res.report.wall_times.gram = gram_seconds;
  return res;
}

/// Re-solves the C-step with A frozen and a new lambda.
inline ModelState refit_supervised(const ModelState& model, double new_lambda, const SolverConfig& cfg = {}) {
  if (!model.inst) throw Error(Errc::BadConfig, "model carries no training instance");
  ProblemInstance inst = *model.inst;
  inst.lam = new_lambda;
  inst.validate();
  SolverConfig exact = cfg;
  exact.mode = SolverMode::AltMin;
  ModelState out = model;
  out.C = supervised_step(inst, model.A, model.C, exact);
  out.inst = std::make_shared<const ProblemInstance>(std::move(inst));
  return out;
}

}  // namespace smtl
