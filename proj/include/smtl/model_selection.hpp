#pragma once

// k-fold cross-validation of lambda, folds stratified per task.

#include <algorithm>
#include <limits>
#include <numeric>

#include <boost/random/uniform_int_distribution.hpp>

#include "smtl/metrics.hpp"
#include "smtl/synth.hpp"

namespace smtl {

inline TaskDataset subset_rows(const TaskDataset& ds, const std::vector<Eigen::Index>& rows,
                               TaskWeighting weighting = TaskWeighting::PerTask) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), ds.d());
  std::vector<Eigen::Index> ids;
  Vector y(static_cast<Eigen::Index>(rows.size()));
  const Vector obs = ds.observed();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    x.row(static_cast<Eigen::Index>(r)) = ds.X.row(i);
    ids.push_back(ds.task_ids[static_cast<std::size_t>(i)]);
    y(static_cast<Eigen::Index>(r)) = obs(i);
  }
  return make_long_dataset(std::move(x), ids, y, ds.tasks(), weighting);
}

/// Fold index of every row; each task's rows are shuffled and dealt round-robin.
inline std::vector<int> stratified_folds(const TaskDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::BadConfig, "cross-validation needs at least 2 folds");
  std::vector<int> fold(static_cast<std::size_t>(ds.n()), 0);
  Rng rng(seed);
  for (Eigen::Index t = 0; t < ds.tasks(); ++t) {
    if (ds.task_sizes[static_cast<std::size_t>(t)] < k) {
      throw Error(Errc::EmptyTask, "task " + std::to_string(t) + " has fewer rows than folds");
    }
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      if (ds.task_ids[static_cast<std::size_t>(i)] == t) rows.push_back(i);
    }
    for (std::size_t i = rows.size(); i > 1; --i) {
      boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(rows[i - 1], rows[pick(rng.engine())]);
    }
    for (std::size_t j = 0; j < rows.size(); ++j) fold[static_cast<std::size_t>(rows[j])] = static_cast<int>(j % k);
  }
  return fold;
}

struct CvResult {
  double best_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> scores;  // mean held-out task-averaged MSE per lambda
};

inline CvResult cross_validate_lambda(const TaskDataset& ds, const KernelSpec& kernel, ProblemParams params,
                                      const SolverConfig& cfg, const std::vector<double>& grid, int k,
                                      std::uint64_t seed) {
  if (grid.empty()) throw Error(Errc::BadConfig, "empty lambda grid");
  const auto fold = stratified_folds(ds, k, seed);
  const Vector obs = ds.observed();
  CvResult res;
  res.lambdas = grid;
  double best = std::numeric_limits<double>::infinity();
  for (double lam : grid) {
    params.lam = lam;
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
      std::vector<Eigen::Index> tr;
      std::vector<Eigen::Index> te;
      for (Eigen::Index i = 0; i < ds.n(); ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      const FitResult fr = fit(subset_rows(ds, tr), kernel, params, cfg);
      Matrix xt(static_cast<Eigen::Index>(te.size()), ds.d());
      for (std::size_t r = 0; r < te.size(); ++r) xt.row(static_cast<Eigen::Index>(r)) = ds.X.row(te[r]);
      const Matrix z = predict(fr.model, xt);
      std::vector<double> se(static_cast<std::size_t>(ds.tasks()), 0.0);
      std::vector<double> cnt(static_cast<std::size_t>(ds.tasks()), 0.0);
      for (std::size_t r = 0; r < te.size(); ++r) {
        const auto t = ds.task_ids[static_cast<std::size_t>(te[r])];
        const double e = obs(te[r]) - z(static_cast<Eigen::Index>(r), t);
        se[static_cast<std::size_t>(t)] += e * e;
        cnt[static_cast<std::size_t>(t)] += 1.0;
      }
      double m = 0.0;
      for (std::size_t t = 0; t < se.size(); ++t) m += se[t] / cnt[t];
      total += m / static_cast<double>(se.size());
    }
    const double score = total / k;
    res.scores.push_back(score);
    if (score < best) {
      best = score;
      res.best_lambda = lam;
    }
  }
  return res;
}

/// Test-set nMSE of a model, one value per task, for long-format test data.
inline std::vector<double> test_nmse(const ModelState& model, const TaskDataset& test) {
  const Matrix z = predict(model, test.X);
  Vector zi(test.n());
  for (Eigen::Index i = 0; i < test.n(); ++i) zi(i) = z(i, test.task_ids[static_cast<std::size_t>(i)]);
  return nmse_long(test.observed(), zi, test.task_ids, test.tasks());
}

}  // namespace smtl
