#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "smtl/oracles.hpp"
#include "test_util.hpp"

using smtl::Matrix;
using smtl::Vector;

TEST(OracleHelpers, NelderMeadFindsRosenbrockMinimum) {
  auto rosen = [](const Vector& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  smtl::Rng rng(1);
  const auto r = smtl::oracle::multistart_nm(rosen, 2, rng, 3, 1.0);
  EXPECT_LT(r.value, 1e-10);
  EXPECT_NEAR(r.x(0), 1.0, 1e-4);
}

TEST(OracleHelpers, BruteForceLocatesKnownPdMinimum) {
  Matrix target(2, 2);
  target << 2.0, 0.6, 0.6, 0.5;
  const auto r = smtl::oracle::brute_force_2x2([&](const Matrix& a) { return (a - target).squaredNorm(); }, {});
  // accurate in value, which is what the fit comparison consumes
  EXPECT_LT(r.value, 1e-6);
  EXPECT_LT((r.A - target).norm(), 1e-3);
}

TEST(OracleHelpers, TrajectoryViolation) {
  smtl::FitReport r;
  r.objective_trajectory = {10, 8, 7};
  r.supervised_objectives = {9, 7.5};
  r.phase_starts = {0};
  EXPECT_EQ(smtl::oracle::trajectory_violation(r), 0.0);
  r.supervised_objectives = {9, 8.0};  // second half-step rises from 7.9
  r.objective_trajectory = {10, 7.9, 7};
  EXPECT_NEAR(smtl::oracle::trajectory_violation(r), 0.1 / 7.9, 1e-15);
  // a new delta phase may start higher
  r = {};
  r.objective_trajectory = {10, 8, 9, 8.5};
  r.supervised_objectives = {9, 8.7};
  r.phase_starts = {0, 2};
  EXPECT_EQ(smtl::oracle::trajectory_violation(r), 0.0);
}

TEST(OracleHelpers, DenseInnerMatchesSolver) {
  smtl::Rng rng(2);
  auto inst = smtl::oracle::random_instance(rng, 6, 2, 0.4, smtl::SchattenPenalty{}, true, 0.2);
  const auto a = smtl::psd_clip(rng.random_pd(2, 0.3));
  const Matrix c = smtl::supervised_step(inst, a, Matrix::Zero(6, 2));
  const double s = smtl::eval_S(inst, c, a) - smtl::penalty_value(inst.penalty, a);
  const double ref = smtl::oracle::dense_inner_S(inst.K(), inst.Y, inst.W, inst.lam, 0.0, inst.delta, a.data());
  EXPECT_NEAR(s, ref, 1e-9 * (1.0 + std::abs(ref)));
}

class SuiteCheck : public ::testing::TestWithParam<const char*> {};

TEST_P(SuiteCheck, Passes) {
  smtl::OracleOptions opt;
  opt.trials = 3;
  const auto reports = smtl::run_verification_suite(GetParam(), opt);
  ASSERT_FALSE(reports.empty());
  for (const auto& r : reports) EXPECT_TRUE(r.passed) << smtl::format_report_line(r);
}

INSTANTIATE_TEST_SUITE_P(Verification, SuiteCheck,
                         ::testing::Values("theorem1", "barrier_convergence", "closed_form", "multi_start", "gradients",
                                           "solver_paths", "monotonicity", "alignment", "coding_equivalence",
                                           "metric_equivalence", "feature_space_equivalence", "nuclear_variational"));

TEST(Suite, FilterAndCsv) {
  smtl::OracleOptions opt;
  opt.trials = 2;
  const auto reports = smtl::run_verification_suite("gradients", opt);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_TRUE(smtl::run_verification_suite("no_such_check", opt).empty());
  std::ostringstream csv;
  smtl::write_reports_csv(csv, reports);
  EXPECT_EQ(csv.str().rfind("name,passed,observed,expected,tolerance,detail\ngradients,1,", 0), 0u) << csv.str();
}

TEST(Suite, FitCallbackSeesEveryFit) {
  smtl::OracleOptions opt;
  int fits = 0;
  opt.on_fit = [&](const smtl::FitReport& r) {
    ++fits;
    EXPECT_LE(smtl::oracle::trajectory_violation(r), 1e-10);
  };
  EXPECT_TRUE(smtl::check_monotonicity(opt).passed);
  EXPECT_GT(fits, 0);
}

TEST(Experiments, ScalingRunsOnSmallGrid) {
  smtl::ScalingOptions so;
  so.T = 3;
  so.n_per_task = 5;
  so.d_small = 2;
  so.d_large = 6;
  so.repeats = 1;
  so.max_ratio = 1e9;
  const auto r = smtl::check_dimension_scaling({}, so);
  EXPECT_TRUE(r.passed) << smtl::format_report_line(r);
}

TEST(Experiments, BenefitStudyProducesPairedScores) {
  smtl::BenefitOptions bo;
  bo.T = 3;
  bo.d = 4;
  bo.n_per_task = 8;
  bo.test_per_task = 10;
  bo.seeds = 2;
  bo.folds = 2;
  bo.grid = {1e-3, 1e-1};
  const auto r = smtl::multitask_benefit_study({}, bo);
  ASSERT_EQ(r.mtl.size(), 2u);
  ASSERT_EQ(r.stl.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_GT(r.mtl[i], 0.0);
    EXPECT_GT(r.stl[i], 0.0);
  }
  EXPECT_NEAR(r.nI, smtl::normalized_improvement(r.stl, r.mtl), 1e-15);
}
