#include <cmath>

#include <gtest/gtest.h>

#include "smtl/penalties.hpp"
#include "smtl/synth.hpp"
#include "test_util.hpp"

using smtl::Matrix;
using smtl::Vector;
using smtl_test::code_of;
using smtl_test::diag;
using smtl_test::expect_near;

namespace {

Vector vec(std::initializer_list<double> v) { return diag(v).diagonal(); }

double inner_objective(const smtl::PenaltySpec& spec, const Matrix& a, const Matrix& b, double lam) {
  const auto ap = smtl::psd_clip(a);
  return lam * (smtl::inverse_pd(ap) * b).trace() + smtl::penalty_value(spec, ap);
}

}  // namespace

TEST(PenaltyValue, Schatten) {
  EXPECT_NEAR(smtl::penalty_value(smtl::SchattenPenalty{1.0, 1.0}, smtl::psd_clip(diag({2, 3}))), 5.0, 1e-14);
  EXPECT_NEAR(smtl::penalty_value(smtl::SchattenPenalty{2.0, 2.0}, smtl::identity_psd(2)), 4.0, 1e-14);
  EXPECT_NEAR(smtl::penalty_value(smtl::SchattenPenalty{3.0, 1.0}, smtl::psd_clip(diag({1, 2}))), 9.0, 1e-13);
}

TEST(PenaltyValue, TraceOne) {
  EXPECT_EQ(smtl::penalty_value(smtl::TraceOnePenalty{}, smtl::psd_clip(diag({0.5, 0.5}))), 0.0);
  EXPECT_EQ(smtl::penalty_value(smtl::TraceOnePenalty{}, smtl::identity_psd(2)), smtl::kInf);
}

TEST(PenaltyValue, Fixed) {
  const smtl::FixedPenalty f{diag({1, 2})};
  EXPECT_EQ(smtl::penalty_value(f, smtl::psd_clip(diag({1, 2}))), 0.0);
  EXPECT_EQ(smtl::penalty_value(f, smtl::psd_clip(diag({1, 2.001}))), smtl::kInf);
}

TEST(PenaltyValue, ClusterMembership) {
  const smtl::ClusterPenalty c{1.0, 1.0, 1.0, 2.0};
  const auto inside = smtl::cluster_structure(c, diag({0.7, 0.3, 0.0}));
  EXPECT_EQ(smtl::penalty_value(c, inside), 0.0);
  // M = diag(0.9, 0.5, 0.2) has trace 1.6 != r
  EXPECT_EQ(smtl::penalty_value(c, smtl::cluster_structure(c, diag({0.9, 0.5, 0.2}))), smtl::kInf);
  EXPECT_EQ(smtl::penalty_value(c, smtl::identity_psd(3)), smtl::kInf);
}

TEST(PenaltyValidation, Errors) {
  EXPECT_EQ(code_of([] { smtl::validate_penalty(smtl::SchattenPenalty{0.5, 1.0}, 2); }), smtl::Errc::BadPenaltyParam);
  EXPECT_EQ(code_of([] { smtl::validate_penalty(smtl::SchattenPenalty{1.0, 0.0}, 2); }), smtl::Errc::BadPenaltyParam);
  EXPECT_EQ(code_of([] { smtl::validate_penalty(smtl::ClusterPenalty{5.0, 1, 1, 2}, 3); }), smtl::Errc::BadRank);
  EXPECT_THROW(smtl::validate_penalty(smtl::FixedPenalty{Matrix::Identity(3, 3)}, 2), smtl::Error);
}

TEST(UnsupervisedMin, SchattenTraceDiagonal) {
  const auto a = smtl::unsupervised_min(smtl::SchattenPenalty{1.0, 1.0}, smtl::psd_clip(diag({4, 1})), 1.0);
  expect_near(a.data(), diag({2, 1}), 1e-12);
}

TEST(UnsupervisedMin, TraceOneDiagonal) {
  const auto a = smtl::unsupervised_min(smtl::TraceOnePenalty{}, smtl::psd_clip(diag({4, 1})), 1.0);
  expect_near(a.data(), diag({2.0 / 3.0, 1.0 / 3.0}), 1e-12);
  // brute force over diag(a, 1 - a)
  double best = 1e300;
  double arg = 0;
  for (int i = 1; i < 10000; ++i) {
    const double x = i / 10000.0;
    const double v = 4.0 / x + 1.0 / (1.0 - x);
    if (v < best) {
      best = v;
      arg = x;
    }
  }
  EXPECT_NEAR(arg, 2.0 / 3.0, 1e-4);
}

TEST(UnsupervisedMin, SchattenRandomProbes) {
  smtl::Rng rng(21);
  const Matrix b = rng.random_pd(3, 0.1);
  const smtl::SchattenPenalty spec{2.0, 1.0};
  const auto a = smtl::unsupervised_min(spec, smtl::psd_clip(b), 1.0);
  const double f0 = inner_objective(spec, a.data(), b, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const Matrix e = rng.normal_matrix(3, 3);
    const Matrix pert = a.data() + 0.05 * rng.uniform() * (e + e.transpose());
    if (smtl::sym_eig(pert).values.minCoeff() <= 1e-6) continue;
    EXPECT_LE(f0, inner_objective(spec, pert, b, 1.0) + 1e-12);
  }
}

TEST(UnsupervisedMin, ClosedFormSchattenP) {
  // A = (lam B / (mu p))^{1/(p+1)}
  smtl::Rng rng(22);
  const Matrix b = rng.random_pd(4, 0.1);
  const double lam = 0.7;
  const smtl::SchattenPenalty spec{1.5, 2.0};
  const auto a = smtl::unsupervised_min(spec, smtl::psd_clip(b), lam);
  const Matrix expected =
      smtl::psd_power(smtl::psd_clip(lam * b / (spec.mu * spec.p)), 1.0 / (spec.p + 1.0)).data();
  expect_near(a.data(), expected, 1e-10);
}

TEST(UnsupervisedMin, FixedReturnsA0) {
  const Matrix a0 = diag({1, 3});
  smtl::Rng rng(23);
  const auto a = smtl::unsupervised_min(smtl::FixedPenalty{a0}, smtl::psd_clip(rng.random_pd(2)), 1.0);
  expect_near(a.data(), a0, 1e-14);
}

TEST(UnsupervisedMin, ClusterBeatsFeasibleProbes) {
  smtl::Rng rng(24);
  const smtl::ClusterPenalty c{1.0, 1.0, 1.0, 2.0};
  const Matrix b = rng.random_pd(3, 0.1);
  const auto a = smtl::unsupervised_min(c, smtl::psd_clip(b), 1.0);
  EXPECT_EQ(smtl::penalty_value(c, a), 0.0);
  const double f0 = (smtl::inverse_pd(a) * b).trace();
  for (int k = 0; k < 500; ++k) {
    // random M in S_c: random eigenbasis, capped-simplex eigenvalues
    const auto q = smtl::sym_eig(rng.random_pd(3)).vectors;
    const Vector w = smtl::project_capped_simplex(Vector::NullaryExpr(3, [&] { return rng.uniform(-0.5, 1.5); }), 1.0);
    const auto am = smtl::cluster_structure(c, q * w.asDiagonal() * q.transpose());
    EXPECT_LE(f0, (smtl::inverse_pd(am) * b).trace() + 1e-10);
  }
}

TEST(UnsupervisedMin, RequiresStrictlyPdB) {
  EXPECT_EQ(code_of([] { smtl::unsupervised_min(smtl::SchattenPenalty{}, smtl::psd_clip(diag({1, 0})), 1.0); }),
            smtl::Errc::NotStrictlyPd);
}

TEST(CappedSimplex, Examples) {
  expect_near(smtl::project_capped_simplex(vec({0.9, 0.5, 0.2}), 1.0), vec({0.7, 0.3, 0.0}), 1e-12);
  expect_near(smtl::project_capped_simplex(vec({0.5, 0.25, 0.25}), 1.0), vec({0.5, 0.25, 0.25}), 1e-12);
  expect_near(smtl::project_capped_simplex(vec({5, 5}), 2.0), vec({1, 1}), 1e-12);
}

TEST(CappedSimplex, IsClosestFeasiblePoint) {
  smtl::Rng rng(31);
  for (int k = 0; k < 20; ++k) {
    const Vector v = Vector::NullaryExpr(5, [&] { return rng.uniform(-1, 2); });
    const Vector p = smtl::project_capped_simplex(v, 2.0);
    EXPECT_NEAR(p.sum(), 2.0, 1e-10);
    EXPECT_GE(p.minCoeff(), -1e-12);
    EXPECT_LE(p.maxCoeff(), 1.0 + 1e-12);
    for (int j = 0; j < 50; ++j) {
      const Vector q = smtl::project_capped_simplex(Vector::NullaryExpr(5, [&] { return rng.uniform(-1, 2); }), 2.0);
      EXPECT_LE((v - p).norm(), (v - q).norm() + 1e-12);
    }
  }
}

TEST(ProjectStructure, Examples) {
  expect_near(smtl::project_structure(smtl::TraceOnePenalty{}, diag({2, 2})).data(), diag({0.5, 0.5}), 1e-12);
  const Matrix a0 = diag({2, 5});
  expect_near(smtl::project_structure(smtl::FixedPenalty{a0}, diag({9, 9})).data(), a0, 1e-14);

  const smtl::ClusterPenalty c{1.0, 1.0, 1.0, 2.0};
  const auto from = smtl::cluster_structure(c, diag({0.9, 0.5, 0.2}));
  const auto to = smtl::project_structure(c, from.data());
  expect_near(to.data(), smtl::cluster_structure(c, diag({0.7, 0.3, 0.0})).data(), 1e-10);
  expect_near(smtl::cluster_m_from_structure(c, smtl::inverse_pd(to)), diag({0.7, 0.3, 0.0}), 1e-10);

  EXPECT_EQ(code_of([] { smtl::project_structure(smtl::SchattenPenalty{}, diag({1, 1})); }),
            smtl::Errc::UnsupportedPenalty);
}

TEST(FixedStructure, Builders) {
  expect_near(smtl::build_fixed_structure(smtl::MeanVarianceStructure{2, 0.0}).a.data(), Matrix::Identity(2, 2), 1e-14);
  expect_near(smtl::build_fixed_structure(smtl::GraphStructure{Matrix::Zero(3, 3), 2.0}).a.data(),
              0.5 * Matrix::Identity(3, 3), 1e-14);
  expect_near(smtl::build_fixed_structure(smtl::CodingStructure{Matrix::Identity(3, 3)}).a.data(),
              Matrix::Identity(3, 3), 1e-14);
  const Matrix theta = diag({1, 2});
  expect_near(smtl::build_fixed_structure(smtl::MetricStructure{theta}).a.data(), theta, 1e-14);
}

TEST(FixedStructure, MeanVarianceMatchesPseudoinverse) {
  const double g = 3.0;
  const Matrix u = Matrix::Constant(4, 4, 0.25);
  const Matrix expected = (Matrix::Identity(4, 4) + g * u).inverse();
  expect_near(smtl::build_fixed_structure(smtl::MeanVarianceStructure{4, g}).a.data(), expected, 1e-12);
}

TEST(FixedStructure, GraphErrors) {
  Matrix w(2, 2);
  w << 0, 1, 2, 0;
  EXPECT_EQ(code_of([&] { smtl::build_fixed_structure(smtl::GraphStructure{w, 1.0}); }),
            smtl::Errc::AsymmetricAdjacency);
}
