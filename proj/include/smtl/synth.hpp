#pragma once

// Seeded synthetic multi-task regression data and the portable RNG behind it.
// Generator: boost mt19937_64 with boost's normal distribution (identical output
// on every platform, unlike std::normal_distribution). Substreams are seeded by
// splitmix64 over (master seed, stream ids).

#include <cstdint>
#include <initializer_list>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "smtl/dataset.hpp"

namespace smtl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream identified by ids under a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(master);
  for (auto id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double normal() { return norm_(eng_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return boost::random::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  Matrix normal_matrix(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    }
    return m;
  }
  /// G G^T / k + shift I with G k x k Gaussian.
  Matrix random_pd(Eigen::Index k, double shift = 0.1) {
    const Matrix g = normal_matrix(k, k);
    Matrix a = g * g.transpose() / static_cast<double>(k);
    a.diagonal().array() += shift;
    return 0.5 * (a + a.transpose());
  }
  std::uint64_t next_u64() { return eng_(); }
  boost::random::mt19937_64& engine() { return eng_; }

 private:
  boost::random::mt19937_64 eng_;
  boost::random::normal_distribution<double> norm_{0.0, 1.0};
};

struct SyntheticSpec {
  Eigen::Index d = 20;
  Eigen::Index T = 10;
  Eigen::Index n_per_task = 30;
  double noise_sd = 0.1;
  double relatedness = 0.0;

  void validate() const {
    if (d < 1 || T < 1 || n_per_task < 1) throw Error(Errc::BadConfig, "synthetic d, T, n_per_task must be >= 1");
    if (!(noise_sd >= 0.0)) throw Error(Errc::BadConfig, "noise_sd must be >= 0");
    if (!(relatedness >= 0.0 && relatedness <= 1.0)) throw Error(Errc::BadConfig, "relatedness must lie in [0, 1]");
  }
};

struct SyntheticData {
  TaskDataset train;
  Matrix weights;  // d x T, column t is w_t
};

/// Task weights w_t = sqrt(1 - rel) g_t + sqrt(rel) g_shared.
inline Matrix synth_weights(const SyntheticSpec& spec, Rng& rng) {
  const Matrix g = rng.normal_matrix(spec.d, spec.T);
  const Matrix shared = rng.normal_matrix(spec.d, 1);
  const double a = std::sqrt(1.0 - spec.relatedness);
  const double b = std::sqrt(spec.relatedness);
  return a * g + b * shared.replicate(1, spec.T);
}

/// n rows per task with x ~ N(0, I) and y = <w_t, x> + noise; rows grouped by task.
inline TaskDataset synth_sample(const SyntheticSpec& spec, const Matrix& weights, Eigen::Index n_per_task, Rng& rng,
                                TaskWeighting weighting = TaskWeighting::PerTask) {
  const Eigen::Index n = n_per_task * spec.T;
  Matrix x = rng.normal_matrix(n, spec.d);
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index t = i / n_per_task;
    ids[static_cast<std::size_t>(i)] = t;
    y(i) = x.row(i).dot(weights.col(t)) + spec.noise_sd * rng.normal();
  }
  return make_long_dataset(std::move(x), ids, y, spec.T, weighting);
}

inline SyntheticData synth_generate(const SyntheticSpec& spec, std::uint64_t seed,
                                    TaskWeighting weighting = TaskWeighting::PerTask) {
  spec.validate();
  Rng rng(seed);
  SyntheticData out;
  out.weights = synth_weights(spec, rng);
  out.train = synth_sample(spec, out.weights, spec.n_per_task, rng, weighting);
  return out;
}

/// Fresh test rows for the same task weights, drawn from an independent substream.
inline TaskDataset synth_test_set(const SyntheticSpec& spec, const Matrix& weights, Eigen::Index n_per_task,
                                  std::uint64_t seed) {
  spec.validate();
  Rng rng(substream_seed(seed, {0x7e57}));
  return synth_sample(spec, weights, n_per_task, rng);
}

}  // namespace smtl
