#pragma once

// Timing sweeps over (T, d) grids of synthetic problems.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "smtl/io.hpp"

namespace smtl {

struct BenchRow {
  std::size_t cell = 0;
  Eigen::Index T = 0;
  Eigen::Index d = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::string method;
  int iters = 0;
  double final_objective = 0.0;
  double fit_seconds = 0.0;
  double gram_seconds = 0.0;
  std::string termination;
};

struct BenchCell {
  Eigen::Index T = 0;
  Eigen::Index d = 0;
  int repeat = 0;
};

/// Cells in row order: d outer, T, then repeat.
inline std::vector<BenchCell> benchmark_cells(const std::vector<Eigen::Index>& ds, const std::vector<Eigen::Index>& ts,
                                              int repeats) {
  std::vector<BenchCell> cells;
  for (auto d : ds) {
    for (auto t : ts) {
      for (int r = 0; r < repeats; ++r) cells.push_back({t, d, r});
    }
  }
  return cells;
}

inline std::vector<BenchRow> run_cell(const RunConfig& cfg, const BenchCell& cell, std::size_t index) {
  SyntheticSpec spec = cfg.synth;
  spec.d = cell.d;
  spec.T = cell.T;
  const std::uint64_t seed = substream_seed(cfg.seed, {static_cast<std::uint64_t>(cell.T),
                                                       static_cast<std::uint64_t>(cell.d),
                                                       static_cast<std::uint64_t>(cell.repeat)});
  const SyntheticData data = synth_generate(spec, seed, cfg.weighting);
  std::vector<BenchRow> rows;
  for (const auto& method : cfg.methods) {
    ProblemParams params = params_for(cfg, cell.T);
    SolverConfig sc = solver_for(cfg, cell.T);
    if (method == "bcd") {
      sc.mode = SolverMode::Bcd;
    } else {
      sc.mode = SolverMode::AltMin;
    }
    if (method == "stl") params.penalty = FixedPenalty{Matrix::Identity(cell.T, cell.T)};
    const FitResult fr = fit(data.train, cfg.kernel, params, sc);
    BenchRow row;
    row.cell = index;
    row.T = cell.T;
    row.d = cell.d;
    row.repeat = cell.repeat;
    row.seed = seed;
    row.method = method;
    row.iters = fr.report.iters;
    row.final_objective = fr.report.objective_trajectory.back();
    row.fit_seconds = fr.report.wall_times.total;
    row.gram_seconds = fr.report.wall_times.gram;
    row.termination = to_string(fr.report.termination);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Worker count from SMTL_THREADS (default 1).
inline int benchmark_threads() {
  if (const char* env = std::getenv("SMTL_THREADS")) {
    const auto v = parse_int(env);
    if (v && *v >= 1) return static_cast<int>(*v);
  }
  return 1;
}

/// Runs every cell; rows come back ordered by cell index whatever the thread count.
inline std::vector<BenchRow> run_benchmark(const RunConfig& cfg, const std::vector<BenchCell>& cells, int threads) {
  std::vector<std::vector<BenchRow>> slots(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        slots[i] = run_cell(cfg, cells[i], i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<BenchRow> out;
  for (auto& s : slots) {
    for (auto& r : s) out.push_back(std::move(r));
  }
  return out;
}

inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "cell,T,d,repeat,seed,method,iters,final_objective,fit_seconds,gram_seconds,termination\n";
  for (const auto& r : rows) {
    out << r.cell << ',' << r.T << ',' << r.d << ',' << r.repeat << ',' << r.seed << ',' << r.method << ','
        << r.iters << ',' << format_double(r.final_objective) << ',' << format_double(r.fit_seconds) << ','
        << format_double(r.gram_seconds) << ',' << r.termination << '\n';
  }
}

}  // namespace smtl
