#include <cmath>

#include <gtest/gtest.h>

#include "smtl/linalg.hpp"
#include "smtl/synth.hpp"
#include "test_util.hpp"

using smtl::Matrix;
using smtl::Vector;

using smtl_test::code_of;
using smtl_test::diag;
using smtl_test::expect_near;

TEST(SymEig, DiagonalInputIsSortedDescending) {
  const auto e = smtl::sym_eig(diag({3, 1}));
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
  expect_near(e.vectors.cwiseAbs(), Matrix::Identity(2, 2), 1e-14);
}

TEST(SymEig, SwapMatrix) {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const auto e = smtl::sym_eig(a);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), -1.0, 1e-14);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), s, 1e-12);
  EXPECT_NEAR(e.vectors(0, 0) * e.vectors(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(e.vectors(0, 1) * e.vectors(1, 1), -0.5, 1e-12);
}

TEST(SymEig, RandomReconstruction) {
  smtl::Rng rng(7);
  const Matrix g = rng.normal_matrix(6, 6);
  const Matrix a = g + g.transpose();
  EXPECT_LT((smtl::sym_eig(a).reconstruct() - a).norm(), 1e-10);
}

TEST(SymEig, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(smtl::sym_eig(Matrix::Zero(2, 3)), smtl::Error);
  Matrix a = Matrix::Identity(2, 2);
  a(0, 0) = NAN;
  EXPECT_EQ(code_of([&] { smtl::sym_eig(a); }), smtl::Errc::NonFinite);
}

TEST(PsdClip, TinyNegativeIsZeroed) {
  const auto p = smtl::psd_clip(diag({1, -1e-14}), 1e-10);
  expect_near(p.data(), diag({1, 0}), 0.0);
  EXPECT_FALSE(p.strictly_pd());
}

TEST(PsdClip, GenuineNegativityThrows) {
  EXPECT_EQ(code_of([] { smtl::psd_clip(diag({1, -0.5}), 1e-10); }), smtl::Errc::NotPsd);
}

TEST(PsdClip, IdentityUnchanged) {
  const auto p = smtl::psd_clip(Matrix::Identity(3, 3));
  expect_near(p.data(), Matrix::Identity(3, 3), 1e-15);
  EXPECT_TRUE(p.strictly_pd());
}

TEST(PinvPsd, RankDeficientDiagonal) {
  expect_near(smtl::pinv_psd(smtl::psd_clip(diag({2, 0}))).data(), diag({0.5, 0}), 1e-15);
}

TEST(PinvPsd, Identity) {
  expect_near(smtl::pinv_psd(smtl::identity_psd(4)).data(), Matrix::Identity(4, 4), 1e-15);
}

TEST(PinvPsd, MoorePenroseIdentities) {
  smtl::Rng rng(3);
  const Matrix g = rng.normal_matrix(5, 2);
  const auto a = smtl::psd_clip(g * g.transpose());
  const Matrix p = smtl::pinv_psd(a).data();
  EXPECT_LT((a.data() * p * a.data() - a.data()).norm(), 1e-9);
  EXPECT_LT((p * a.data() * p - p).norm(), 1e-9);
}

TEST(PsdPower, DiagonalRoot) {
  expect_near(smtl::psd_power(smtl::psd_clip(diag({4, 9})), 0.5).data(), diag({2, 3}), 1e-14);
  expect_near(smtl::psd_power(smtl::psd_clip(diag({8})), 1.0 / 3.0).data(), diag({2}), 1e-14);
}

TEST(PsdPower, NegativeExponentNeedsStrictPd) {
  EXPECT_THROW(smtl::psd_power(smtl::psd_clip(diag({1, 0})), -1.0), smtl::Error);
  expect_near(smtl::psd_power(smtl::psd_clip(diag({4, 2})), -1.0).data(), diag({0.25, 0.5}), 1e-14);
}

TEST(Schatten, DiagonalValues) {
  const auto a = smtl::psd_clip(diag({3, 4}));
  EXPECT_NEAR(smtl::schatten(a, 1.0), 7.0, 1e-14);
  EXPECT_NEAR(smtl::schatten(a, 2.0), 5.0, 1e-14);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    EXPECT_NEAR(smtl::schatten(smtl::identity_psd(3), p), std::pow(3.0, 1.0 / p), 1e-13);
  }
}

TEST(Schatten, RejectsSmallExponent) {
  EXPECT_EQ(code_of([] { smtl::schatten(smtl::identity_psd(2), 0.5); }), smtl::Errc::BadExponent);
}

TEST(RangeContained, Examples) {
  EXPECT_TRUE(smtl::range_contained(smtl::psd_clip(diag({1, 0})), smtl::psd_clip(diag({2, 3})), 1e-10));
  EXPECT_FALSE(smtl::range_contained(smtl::psd_clip(diag({0, 1})), smtl::psd_clip(diag({1, 0})), 1e-10));
}

TEST(RangeContained, GramAndRootShareRange) {
  smtl::Rng rng(11);
  const Matrix g = rng.normal_matrix(6, 6);
  const Matrix k = g * g.transpose();
  const Matrix c = rng.normal_matrix(6, 2) * rng.normal_matrix(2, 4);  // rank 2, T = 4
  const Matrix ckc = c.transpose() * k * c;
  const Matrix root = smtl::psd_power(smtl::psd_clip(k), 0.5).data();
  const Matrix ck = c.transpose() * root;  // 4 x 6
  EXPECT_TRUE(smtl::range_contained(ckc, ck, 1e-8));
  EXPECT_TRUE(smtl::range_contained(ck, ckc, 1e-8));
  EXPECT_FALSE(smtl::range_contained(Matrix::Identity(4, 4), ckc, 1e-8));
}

TEST(Sylvester, AllIdentity) {
  smtl::Rng rng(1);
  const Matrix y = rng.normal_matrix(2, 2);
  const Matrix c = smtl::sylvester_ls_solve(smtl::identity_psd(2), smtl::identity_psd(2), 1.0, y);
  expect_near(c, y / 2.0, 1e-14);
}

TEST(Sylvester, DiagonalExample) {
  Matrix y(2, 2);
  y << 1, 1, 1, 1;
  Matrix expected(2, 2);
  expected << 1.0 / 3, 1.0 / 4, 1.0 / 2, 1.0 / 3;
  const auto k = smtl::psd_clip(diag({2, 1}));
  const auto a = smtl::psd_clip(diag({1, 0.5}));
  expect_near(smtl::sylvester_ls_solve(k, a, 1.0, y), expected, 1e-14);
  expect_near(smtl::kron_ls_solve(k, a, 1.0, y), expected, 1e-14);
}

TEST(Sylvester, MatchesKroneckerOnRandomInstance) {
  smtl::Rng rng(5);
  const auto k = smtl::psd_clip(rng.random_pd(8, 0.0));
  const auto a = smtl::psd_clip(rng.random_pd(3, 0.2));
  const Matrix y = rng.normal_matrix(8, 3);
  for (double ridge : {0.0, 0.3}) {
    const Matrix c1 = smtl::sylvester_ls_solve(k, a, 0.7, y, ridge);
    const Matrix c2 = smtl::kron_ls_solve(k, a, 0.7, y, ridge);
    EXPECT_LT((c1 - c2).cwiseAbs().maxCoeff(), 1e-8);
    // residual of K C + lam C A^{-1} + ridge C = Y
    const Matrix r = k.data() * c1 + 0.7 * c1 * smtl::inverse_pd(a) + ridge * c1 - y;
    EXPECT_LT(r.norm(), 1e-9);
  }
}

TEST(Sylvester, Errors) {
  const auto k = smtl::identity_psd(2);
  EXPECT_EQ(code_of([&] { smtl::sylvester_ls_solve(k, smtl::psd_clip(diag({1, 0})), 1.0, Matrix::Ones(2, 2)); }),
            smtl::Errc::SingularA);
  EXPECT_EQ(code_of([&] { smtl::sylvester_ls_solve(k, smtl::identity_psd(2), 1.0, Matrix::Ones(3, 2)); }),
            smtl::Errc::DimensionMismatch);
  EXPECT_THROW(smtl::sylvester_ls_solve(k, smtl::identity_psd(2), 0.0, Matrix::Ones(2, 2)), smtl::Error);
}
