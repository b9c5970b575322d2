// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "smtl/oracles.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  int id;
  bool ok;
  std::string text;
};

std::vector<Line> lines;

void record(int id, bool ok, const std::string& text) {
  lines.push_back({id, ok, text});
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << text << std::endl;
}

std::string brief(const smtl::OracleReport& r) {
  return r.name + " observed=" + smtl::format_double(r.observed) + " tol=" + smtl::format_double(r.tolerance) +
         " (" + r.detail + ")";
}

}  // namespace

int main() {
  std::size_t fits = 0;
  double worst_violation = 0.0;
  smtl::OracleOptions opt;
  opt.on_fit = [&](const smtl::FitReport& r) {
    ++fits;
    worst_violation = std::max(worst_violation, smtl::oracle::trajectory_violation(r));
  };

  {
    smtl::OracleOptions o = opt;
    o.trials = 20;
    const auto t0 = Clock::now();
    const auto r = smtl::check_theorem1(o, 1e-4, 1e-6);
    const double secs = since(t0);
    record(1, r.passed && secs < 60.0, brief(r) + ", " + smtl::format_double(secs) + " s (limit 60)");
  }
  {
    smtl::OracleOptions o = opt;
    o.trials = 50;
    const auto t0 = Clock::now();
    const auto r = smtl::check_closed_form(o, 10000, -1e-8, 1e-8);
    const double secs = since(t0);
    record(2, r.passed && secs < 30.0, brief(r) + ", " + smtl::format_double(secs) + " s (limit 30)");
  }
  {
    smtl::OracleOptions o = opt;
    o.trials = 5;
    const auto r = smtl::check_barrier_convergence(o, 1e-3);
    record(3, r.passed, brief(r));
  }
  {
    smtl::OracleOptions o = opt;
    o.trials = 10;
    const auto r = smtl::check_multi_start(o, 10, 1e-5);
    record(4, r.passed, brief(r));
  }
  {
    smtl::OracleOptions o = opt;
    o.trials = 20;
    const auto r = smtl::check_gradients(o, 1e-5);
    record(5, r.passed, brief(r));
  }
  {
    const auto r = smtl::check_solver_paths(opt, 1e-8, 1e-7);
    record(6, r.passed, brief(r));
  }
  {
    std::vector<smtl::OracleReport> rs = {
        smtl::check_alignment(opt),           smtl::check_coding_equivalence(opt),
        smtl::check_metric_equivalence(opt),  smtl::check_nuclear_variational(opt),
        smtl::check_feature_space_equivalence(opt), smtl::check_feature_space_calibration(opt),
    };
    bool ok = true;
    std::string text;
    for (const auto& r : rs) {
      ok = ok && r.passed;
      text += std::string(r.passed ? "[pass] " : "[FAIL] ") + brief(r) + "; ";
    }
    record(8, ok, text);
  }
  {
    const auto t0 = Clock::now();
    const auto r = smtl::check_dimension_scaling(opt);
    const double secs = since(t0);
    record(9, r.passed && secs < 600.0, brief(r) + ", total " + smtl::format_double(secs) + " s (limit 600)");
  }
  {
    const auto r = smtl::check_multitask_benefit(opt);
    record(10, r.passed, brief(r));
  }
  {
    const auto r = smtl::check_monotonicity(opt, 1e-10);
    const bool ok = r.passed && worst_violation <= 1e-10;
    record(7, ok, "worst relative increase " + smtl::format_double(std::max(worst_violation, r.observed)) +
                      " over " + std::to_string(fits) + " fits (tol 1e-10)");
  }

  int failed = 0;
  for (const auto& l : lines) failed += l.ok ? 0 : 1;
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (lines.size() - failed) << "/" << lines.size()
            << " criteria" << std::endl;
  return failed ? 1 : 0;
}
