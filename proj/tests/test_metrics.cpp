#include <cmath>

#include <gtest/gtest.h>

#include "smtl/metrics.hpp"
#include "smtl/model_selection.hpp"
#include "smtl/synth.hpp"
#include "test_util.hpp"

using smtl::Matrix;
using smtl::Vector;
using smtl_test::code_of;
using smtl_test::expect_near;

namespace {

smtl::FitResult small_fit(std::uint64_t seed) {
  const auto ds = smtl::synth_generate({3, 2, 6, 0.1, 0.5}, seed).train;
  return smtl::fit(ds, smtl::KernelSpec::gaussian(0.3), {0.1, 0.0, smtl::SchattenPenalty{1, 1}}, {});
}

}  // namespace

TEST(Predict, TrainingInputsReproduceKC) {
  const auto fr = small_fit(1);
  const Matrix z = smtl::predict(fr.model, fr.model.X_train);
  expect_near(z, fr.model.inst->K() * fr.model.C, 1e-12);
}

TEST(Predict, ZeroCoefficients) {
  auto m = small_fit(2).model;
  m.C.setZero();
  smtl::Rng rng(2);
  EXPECT_EQ(smtl::predict(m, rng.normal_matrix(4, 3)).norm(), 0.0);
}

TEST(Predict, WrongFeatureCountNamesExpectedDimension) {
  const auto fr = small_fit(3);
  try {
    smtl::predict(fr.model, Matrix::Zero(2, 5));
    FAIL() << "expected DimensionMismatch";
  } catch (const smtl::Error& e) {
    EXPECT_EQ(e.code(), smtl::Errc::DimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("expected 3 features"), std::string::npos) << e.what();
  }
}

TEST(Nmse, Anchors) {
  smtl::Rng rng(4);
  const Matrix y = rng.normal_matrix(20, 3);
  EXPECT_EQ(smtl::nmse(y, y), 0.0);
  const Matrix means = y.colwise().mean().replicate(20, 1);
  EXPECT_NEAR(smtl::nmse(y, means), 1.0, 1e-12);
}

TEST(Nmse, MonteCarloZeroPrediction) {
  smtl::Rng rng(5);
  const Matrix y = rng.normal_matrix(10000, 1);
  EXPECT_NEAR(smtl::nmse(y, Matrix::Zero(10000, 1)), 1.0, 0.05);
}

TEST(Nmse, Errors) {
  EXPECT_EQ(code_of([] { smtl::nmse(Matrix::Ones(3, 1), Matrix::Zero(3, 1)); }), smtl::Errc::ZeroVariance);
  EXPECT_EQ(code_of([] { smtl::nmse(Matrix::Ones(3, 1), Matrix::Zero(2, 1)); }), smtl::Errc::DimensionMismatch);
}

TEST(Nmse, LongFormatSkipsAbsentTasks) {
  Vector y(4);
  Vector z(4);
  y << 1, 3, 0, 2;
  z << 2, 2, 2, 0;
  const std::vector<Eigen::Index> ids = {0, 0, 2, 2};
  const auto per = smtl::nmse_long(y, z, ids, 3);
  ASSERT_EQ(per.size(), 3u);
  EXPECT_NEAR(per[0], 1.0, 1e-15);  // predicting the task mean
  EXPECT_TRUE(std::isnan(per[1]));
  EXPECT_NEAR(per[2], 4.0, 1e-15);  // mse 4, variance 1
}

TEST(Accuracy, Examples) {
  const std::vector<Eigen::Index> labels = {0, 1, 2, 1};
  Matrix onehot = Matrix::Zero(4, 3);
  Matrix shifted = Matrix::Zero(4, 3);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    onehot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    shifted(static_cast<Eigen::Index>(i), (labels[i] + 1) % 3) = 1.0;
  }
  EXPECT_EQ(smtl::accuracy(labels, onehot), 1.0);
  EXPECT_EQ(smtl::accuracy(labels, shifted), 0.0);
  EXPECT_NEAR(smtl::accuracy({0, 1, 2}, Matrix::Zero(3, 3)), 1.0 / 3.0, 1e-15);
}

TEST(Accuracy, Errors) {
  EXPECT_EQ(code_of([] { smtl::accuracy({0, 3}, Matrix::Zero(2, 3)); }), smtl::Errc::BadLabel);
  EXPECT_EQ(code_of([] { smtl::accuracy({0}, Matrix::Zero(2, 3)); }), smtl::Errc::LengthMismatch);
}

TEST(NormalizedImprovement, Examples) {
  EXPECT_EQ(smtl::normalized_improvement({0.3, 0.5}, {0.3, 0.5}), 0.0);
  EXPECT_NEAR(smtl::normalized_improvement({4.0}, {1.0}), 1.5, 1e-15);
  EXPECT_NEAR(smtl::normalized_improvement({0.2436}, {0.2284}), 0.0645, 5e-4);
  EXPECT_EQ(code_of([] { smtl::normalized_improvement({1.0}, {1.0, 2.0}); }), smtl::Errc::LengthMismatch);
  EXPECT_EQ(code_of([] { smtl::normalized_improvement({1.0}, {0.0}); }), smtl::Errc::NonPositiveNmse);
}

TEST(Synth, DeterministicPerSeed) {
  const smtl::SyntheticSpec spec{4, 3, 5, 0.1, 0.3};
  const auto a = smtl::synth_generate(spec, 77);
  const auto b = smtl::synth_generate(spec, 77);
  const auto c = smtl::synth_generate(spec, 78);
  EXPECT_EQ(a.train.X, b.train.X);
  EXPECT_EQ(a.train.Y, b.train.Y);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_NE(a.train.X, c.train.X);
  EXPECT_NE(smtl::substream_seed(1, {2, 3}), smtl::substream_seed(1, {3, 2}));
}

TEST(Synth, RelatednessCorrelatesWeights) {
  const auto indep = smtl::synth_generate({400, 2, 1, 0.0, 0.0}, 5).weights;
  const auto same = smtl::synth_generate({400, 2, 1, 0.0, 1.0}, 5).weights;
  auto corr = [](const Matrix& w) { return w.col(0).dot(w.col(1)) / (w.col(0).norm() * w.col(1).norm()); };
  EXPECT_LT(std::abs(corr(indep)), 0.2);
  EXPECT_NEAR(corr(same), 1.0, 1e-12);
}

TEST(Synth, RidgeRecoversWeights) {
  const smtl::SyntheticSpec spec{3, 2, 200, 0.05, 0.0};
  const auto data = smtl::synth_generate(spec, 6);
  for (Eigen::Index t = 0; t < 2; ++t) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.train.n(); ++i) {
      if (data.train.task_ids[static_cast<std::size_t>(i)] == t) rows.push_back(i);
    }
    Matrix x(static_cast<Eigen::Index>(rows.size()), 3);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = data.train.X.row(rows[r]);
      y(static_cast<Eigen::Index>(r)) = data.train.Y(rows[r], t);
    }
    const Vector w = (x.transpose() * x + 1e-6 * Matrix::Identity(3, 3)).ldlt().solve(x.transpose() * y);
    EXPECT_LT((w - data.weights.col(t)).norm(), 0.02);
  }
}

TEST(Synth, TestSetUsesSameWeights) {
  const smtl::SyntheticSpec spec{3, 2, 10, 0.0, 0.0};
  const auto data = smtl::synth_generate(spec, 8);
  const auto test = smtl::synth_test_set(spec, data.weights, 7, 8);
  EXPECT_EQ(test.n(), 14);
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const auto t = test.task_ids[static_cast<std::size_t>(i)];
    EXPECT_NEAR(test.Y(i, t), test.X.row(i).dot(data.weights.col(t)), 1e-12);
  }
  EXPECT_NE(test.X.row(0), data.train.X.row(0));
}

TEST(ModelSelection, FoldsAreStratified) {
  const auto ds = smtl::synth_generate({2, 3, 10, 0.1, 0.0}, 9).train;
  const auto fold = smtl::stratified_folds(ds, 5, 1);
  for (Eigen::Index t = 0; t < 3; ++t) {
    std::vector<int> count(5, 0);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      if (ds.task_ids[static_cast<std::size_t>(i)] == t) ++count[static_cast<std::size_t>(fold[static_cast<std::size_t>(i)])];
    }
    for (int c : count) EXPECT_EQ(c, 2);
  }
  EXPECT_EQ(fold, smtl::stratified_folds(ds, 5, 1));
  EXPECT_EQ(code_of([&] { smtl::stratified_folds(ds, 11, 1); }), smtl::Errc::EmptyTask);
}

TEST(ModelSelection, CrossValidationPrefersReasonableLambda) {
  const smtl::SyntheticSpec spec{5, 3, 20, 0.3, 0.5};
  const auto data = smtl::synth_generate(spec, 10);
  smtl::SolverConfig cfg;
  cfg.stop = smtl::StopRule::Relative;
  cfg.epsilon = 1e-6;
  const std::vector<double> grid = {1e-6, 1e-3, 1e-1, 1e2, 1e4};
  const auto cv = smtl::cross_validate_lambda(data.train, smtl::KernelSpec::linear(),
                                              {1.0, 0.0, smtl::SchattenPenalty{1, 1}}, cfg, grid, 4, 3);
  ASSERT_EQ(cv.scores.size(), grid.size());
  EXPECT_LT(cv.best_lambda, 1e2);
  EXPECT_GT(cv.scores.back(), cv.scores[1]);

  const auto fr = smtl::fit(data.train, smtl::KernelSpec::linear(), {cv.best_lambda, 0.0, smtl::SchattenPenalty{1, 1}}, cfg);
  const auto per = smtl::test_nmse(fr.model, smtl::synth_test_set(spec, data.weights, 50, 10));
  for (double v : per) EXPECT_LT(v, 0.2);
}
