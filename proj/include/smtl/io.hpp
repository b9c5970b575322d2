#pragma once

// Run configuration files, model persistence and fit-report serialization.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "smtl/solver.hpp"
#include "smtl/synth.hpp"

namespace smtl {

/// Flat `key = value` configuration. Defaults mirror the library defaults.
struct RunConfig {
  KernelSpec kernel = KernelSpec::linear();
  std::string penalty_type = "schatten";
  double p = 1.0;
  double mu = 1.0;
  double r = 1.0;
  double eps_m = 1.0;
  double eps_b = 1.0;
  double eps_w = 1.0;
  std::string penalty_a0 = "identity";
  double lam = 1.0;
  double ridge = 0.0;
  SolverConfig solver;
  std::string a0 = "identity";
  std::uint64_t seed = 42;
  TaskWeighting weighting = TaskWeighting::PerTask;
  SyntheticSpec synth;
  int repeats = 5;
  std::vector<std::string> methods = {"altmin"};
};

namespace detail {

[[noreturn]] inline void config_error(std::size_t line, const std::string& msg) {
  throw Error(Errc::BadConfig, "config line " + std::to_string(line) + ": " + msg, line);
}

inline double config_double(std::string_view v, std::size_t line, const std::string& key) {
  const auto d = parse_double(v);
  if (!d || !std::isfinite(*d)) config_error(line, key + " expects a number, got '" + std::string(v) + "'");
  return *d;
}

inline long long config_int(std::string_view v, std::size_t line, const std::string& key) {
  const auto d = parse_int(v);
  if (!d) config_error(line, key + " expects an integer, got '" + std::string(v) + "'");
  return *d;
}

/// "1,0;0,1" -> 2 x 2 matrix (rows separated by ';').
inline std::optional<Matrix> parse_matrix_text(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(';', start);
    const auto row = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    std::vector<double> vals;
    for (auto f : split_commas(row)) {
      const auto v = parse_double(f);
      if (!v) return std::nullopt;
      vals.push_back(*v);
    }
    rows.push_back(std::move(vals));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c) return std::nullopt;
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

inline Matrix resolve_matrix(const std::string& text, Eigen::Index t, const char* what) {
  if (text == "identity") return Matrix::Identity(t, t);
  auto m = parse_matrix_text(text);
  if (!m) throw Error(Errc::BadConfig, std::string(what) + ": cannot parse matrix '" + text + "'");
  if (m->rows() != t || m->cols() != t) {
    throw Error(Errc::BadConfig, std::string(what) + " must be " + std::to_string(t) + " x " + std::to_string(t));
  }
  return *m;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string raw;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  double gamma = 1.0;
  bool gamma_set = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::config_error(lineno, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view val = trim(line.substr(eq + 1));
    if (val.empty()) detail::config_error(lineno, "empty value for " + key);
    if (seen.count(key)) {
      detail::config_error(lineno, "duplicate key " + key + " (first on line " + std::to_string(seen[key]) + ")");
    }
    seen[key] = lineno;
    const std::string sval(val);
    auto num = [&] { return detail::config_double(val, lineno, key); };
    auto integer = [&] { return detail::config_int(val, lineno, key); };

    if (key == "kernel.type") {
      if (sval == "linear") {
        cfg.kernel.kind = KernelKind::Linear;
      } else if (sval == "gaussian") {
        cfg.kernel.kind = KernelKind::Gaussian;
      } else {
        detail::config_error(lineno, "kernel.type must be linear or gaussian");
      }
    } else if (key == "kernel.gamma") {
      gamma = num();
      gamma_set = true;
    } else if (key == "penalty.type") {
      if (sval != "schatten" && sval != "trace_one" && sval != "cluster" && sval != "fixed") {
        detail::config_error(lineno, "penalty.type must be schatten, trace_one, cluster or fixed");
      }
      cfg.penalty_type = sval;
    } else if (key == "penalty.p") {
      cfg.p = num();
    } else if (key == "penalty.mu") {
      cfg.mu = num();
    } else if (key == "penalty.r") {
      cfg.r = num();
    } else if (key == "penalty.eps_m") {
      cfg.eps_m = num();
    } else if (key == "penalty.eps_b") {
      cfg.eps_b = num();
    } else if (key == "penalty.eps_w") {
      cfg.eps_w = num();
    } else if (key == "penalty.a0") {
      if (sval != "identity" && !detail::parse_matrix_text(val)) detail::config_error(lineno, "bad matrix for penalty.a0");
      cfg.penalty_a0 = sval;
    } else if (key == "lambda") {
      cfg.lam = num();
      if (!(cfg.lam > 0.0)) detail::config_error(lineno, "lambda must be > 0");
    } else if (key == "ridge") {
      cfg.ridge = num();
      if (!(cfg.ridge >= 0.0)) detail::config_error(lineno, "ridge must be >= 0");
    } else if (key == "delta") {
      cfg.solver.delta = num();
      if (!(cfg.solver.delta > 0.0)) detail::config_error(lineno, "delta must be > 0");
    } else if (key == "delta.schedule") {
      if (sval != "fixed" && sval != "geometric") detail::config_error(lineno, "delta.schedule must be fixed or geometric");
      cfg.solver.schedule.geometric = sval == "geometric";
    } else if (key == "delta.factor") {
      cfg.solver.schedule.factor = num();
      if (!(cfg.solver.schedule.factor > 0.0 && cfg.solver.schedule.factor < 1.0)) {
        detail::config_error(lineno, "delta.factor must lie in (0, 1)");
      }
    } else if (key == "delta.floor") {
      cfg.solver.schedule.floor = num();
      if (!(cfg.solver.schedule.floor > 0.0)) detail::config_error(lineno, "delta.floor must be > 0");
    } else if (key == "epsilon") {
      cfg.solver.epsilon = num();
      if (!(cfg.solver.epsilon > 0.0)) detail::config_error(lineno, "epsilon must be > 0");
    } else if (key == "max_iter") {
      const auto m = integer();
      if (m < 1 || m > 100000000) detail::config_error(lineno, "max_iter must be a positive integer");
      cfg.solver.max_iter = static_cast<int>(m);
    } else if (key == "mode") {
      if (sval != "altmin" && sval != "bcd") detail::config_error(lineno, "mode must be altmin or bcd");
      cfg.solver.mode = sval == "altmin" ? SolverMode::AltMin : SolverMode::Bcd;
    } else if (key == "step_c") {
      cfg.solver.step_c = num();
      if (!(cfg.solver.step_c > 0.0)) detail::config_error(lineno, "step_c must be > 0");
    } else if (key == "step_a") {
      cfg.solver.step_a = num();
      if (!(cfg.solver.step_a > 0.0)) detail::config_error(lineno, "step_a must be > 0");
    } else if (key == "a0") {
      if (sval != "identity" && !detail::parse_matrix_text(val)) detail::config_error(lineno, "bad matrix for a0");
      cfg.a0 = sval;
    } else if (key == "seed") {
      const auto s = integer();
      if (s < 0) detail::config_error(lineno, "seed must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "stop_rule") {
      if (sval != "absolute" && sval != "relative") detail::config_error(lineno, "stop_rule must be absolute or relative");
      cfg.solver.stop = sval == "absolute" ? StopRule::Absolute : StopRule::Relative;
    } else if (key == "supervised.solver") {
      if (sval == "auto") {
        cfg.solver.masked = MaskedSolver::Auto;
      } else if (sval == "direct") {
        cfg.solver.masked = MaskedSolver::Direct;
      } else if (sval == "cg") {
        cfg.solver.masked = MaskedSolver::Cg;
      } else {
        detail::config_error(lineno, "supervised.solver must be auto, direct or cg");
      }
    } else if (key == "weights") {
      if (sval != "per_task" && sval != "uniform") detail::config_error(lineno, "weights must be per_task or uniform");
      cfg.weighting = sval == "per_task" ? TaskWeighting::PerTask : TaskWeighting::Uniform;
    } else if (key == "synth.d") {
      cfg.synth.d = integer();
    } else if (key == "synth.T") {
      cfg.synth.T = integer();
    } else if (key == "synth.n_per_task") {
      cfg.synth.n_per_task = integer();
    } else if (key == "synth.noise_sd") {
      cfg.synth.noise_sd = num();
    } else if (key == "synth.relatedness") {
      cfg.synth.relatedness = num();
    } else if (key == "benchmark.repeats") {
      const auto m = integer();
      if (m < 1) detail::config_error(lineno, "benchmark.repeats must be >= 1");
      cfg.repeats = static_cast<int>(m);
    } else if (key == "benchmark.methods") {
      cfg.methods.clear();
      for (auto f : detail::split_commas(val)) {
        const std::string m(trim(f));
        if (m != "altmin" && m != "bcd" && m != "stl") detail::config_error(lineno, "unknown benchmark method " + m);
        cfg.methods.push_back(m);
      }
    } else {
      detail::config_error(lineno, "unknown key " + key);
    }
  }
  if (cfg.kernel.kind == KernelKind::Gaussian) {
    cfg.kernel.gamma = gamma;
    try {
      cfg.kernel.validate();
    } catch (const Error& e) {
      detail::config_error(gamma_set ? seen["kernel.gamma"] : 0, e.what());
    }
  }
  try {
    cfg.synth.validate();
  } catch (const Error& e) {
    detail::config_error(0, e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

inline PenaltySpec penalty_for(const RunConfig& cfg, Eigen::Index tasks) {
  PenaltySpec spec;
  if (cfg.penalty_type == "schatten") {
    spec = SchattenPenalty{cfg.p, cfg.mu};
  } else if (cfg.penalty_type == "trace_one") {
    spec = TraceOnePenalty{};
  } else if (cfg.penalty_type == "cluster") {
    spec = ClusterPenalty{cfg.r, cfg.eps_m, cfg.eps_b, cfg.eps_w};
  } else {
    spec = FixedPenalty{detail::resolve_matrix(cfg.penalty_a0, tasks, "penalty.a0")};
  }
  try {
    validate_penalty(spec, tasks);
  } catch (const Error& e) {
    throw Error(Errc::BadConfig, e.what());
  }
  return spec;
}

inline SolverConfig solver_for(const RunConfig& cfg, Eigen::Index tasks) {
  SolverConfig s = cfg.solver;
  if (cfg.a0 != "identity") s.a0 = detail::resolve_matrix(cfg.a0, tasks, "a0");
  return s;
}

inline ProblemParams params_for(const RunConfig& cfg, Eigen::Index tasks) {
  return ProblemParams{cfg.lam, cfg.ridge, penalty_for(cfg, tasks), LossKind::Squared};
}

// ---- model files ----

inline constexpr const char* kModelMagic = "SMTL-MODEL";
inline constexpr const char* kModelVersion = "v1";

namespace detail {

inline void write_matrix_block(std::ostream& out, const char* name, const Matrix& m) {
  out << '[' << name << "] " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  bool next_line(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ParseError, "model line " + std::to_string(lineno_) + ": " + msg, lineno_);
  }

  Matrix read_block(const std::string& name) {
    std::string line;
    if (!next_line(line)) throw Error(Errc::ParseError, "model file truncated: missing block [" + name + "]");
    std::istringstream hdr(line);
    std::string tag;
    long long r = -1;
    long long c = -1;
    hdr >> tag >> r >> c;
    if (tag != "[" + name + "]") fail("expected block [" + name + "], found '" + std::string(trim(line)) + "'");
    if (!hdr || r < 0 || c < 0) fail("bad dimensions for block [" + name + "]");
    Matrix m(r, c);
    for (long long i = 0; i < r; ++i) {
      if (!next_line(line)) {
        throw Error(Errc::ParseError, "model file truncated inside block [" + name + "] at row " + std::to_string(i));
      }
      std::istringstream row(line);
      std::string tok;
      long long j = 0;
      while (row >> tok) {
        if (j >= c) fail("too many values in block [" + name + "]");
        const auto v = parse_double(tok);
        if (!v) fail("bad number '" + tok + "' in block [" + name + "]");
        m(i, j++) = *v;
      }
      if (j != c) fail("row of block [" + name + "] has " + std::to_string(j) + " values, expected " + std::to_string(c));
    }
    return m;
  }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace detail

inline void write_model(std::ostream& out, const ModelState& m) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "[kernel]\n";
  out << "type " << to_string(m.kernel.kind) << '\n';
  out << "gamma " << format_double(m.kernel.gamma) << '\n';
  detail::write_matrix_block(out, "X", m.X_train);
  detail::write_matrix_block(out, "C", m.C);
  detail::write_matrix_block(out, "A", m.A.data());
}

inline void save_model(const ModelState& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write model '" + path + "'");
  write_model(out, m);
  if (!out) throw Error(Errc::IoError, "failed writing model '" + path + "'");
}

inline ModelState read_model(std::istream& in) {
  detail::ModelReader rd(in);
  std::string line;
  if (!rd.next_line(line)) throw Error(Errc::ParseError, "model file is empty: missing header");
  {
    std::istringstream hdr(line);
    std::string magic;
    std::string version;
    hdr >> magic >> version;
    if (magic != kModelMagic) rd.fail("not a model file (header '" + std::string(trim(line)) + "')");
    if (version != kModelVersion) {
      throw Error(Errc::VersionMismatch, "model version '" + version + "' is not supported (expected v1)");
    }
  }
  if (!rd.next_line(line)) throw Error(Errc::ParseError, "model file truncated: missing block [kernel]");
  if (trim(line) != "[kernel]") rd.fail("expected block [kernel]");
  ModelState m;
  for (int k = 0; k < 2; ++k) {
    if (!rd.next_line(line)) throw Error(Errc::ParseError, "model file truncated inside block [kernel]");
    std::istringstream kv(line);
    std::string key;
    std::string val;
    kv >> key >> val;
    if (key == "type") {
      if (val == "linear") {
        m.kernel.kind = KernelKind::Linear;
      } else if (val == "gaussian") {
        m.kernel.kind = KernelKind::Gaussian;
      } else {
        rd.fail("unknown kernel type '" + val + "'");
      }
    } else if (key == "gamma") {
      const auto g = parse_double(val);
      if (!g) rd.fail("bad kernel gamma");
      m.kernel.gamma = *g;
    } else {
      rd.fail("unexpected kernel field '" + key + "'");
    }
  }
  m.X_train = rd.read_block("X");
  m.C = rd.read_block("C");
  const Matrix a = rd.read_block("A");
  if (m.C.rows() != m.X_train.rows()) throw Error(Errc::ParseError, "block [C] rows differ from block [X] rows");
  if (a.rows() != m.C.cols() || a.cols() != m.C.cols()) throw Error(Errc::ParseError, "block [A] must be T x T");
  m.A = psd_clip(a);
  return m;
}

inline ModelState load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open model '" + path + "'");
  return read_model(in);
}

// ---- reports ----

inline nlohmann::json report_to_json(const FitReport& r) {
  nlohmann::json j;
  j["iters"] = r.iters;
  j["termination"] = to_string(r.termination);
  j["final_delta"] = r.final_delta;
  j["objective_trajectory"] = r.objective_trajectory;
  j["supervised_objectives"] = r.supervised_objectives;
  j["phase_starts"] = r.phase_starts;
  j["phase_deltas"] = r.phase_deltas;
  j["supervised_path"] = r.supervised_path;
  j["threads"] = r.threads;
  j["wall_times"] = {{"gram", r.wall_times.gram},
                     {"supervised", r.wall_times.supervised},
                     {"unsupervised", r.wall_times.unsupervised},
                     {"objective", r.wall_times.objective},
                     {"total", r.wall_times.total}};
  return j;
}

}  // namespace smtl
