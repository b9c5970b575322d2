#pragma once

#include <initializer_list>

#include <gtest/gtest.h>

#include "smtl/error.hpp"
#include "smtl/linalg.hpp"

namespace smtl_test {

inline smtl::Matrix diag(std::initializer_list<double> v) {
  smtl::Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

inline void expect_near(const smtl::Matrix& a, const smtl::Matrix& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << "got\n" << a << "\nexpected\n" << b;
}

// Error code thrown by fn; records a failure when nothing is thrown.
template <class F>
smtl::Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const smtl::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no smtl::Error thrown";
  return smtl::Errc::IoError;
}

}  // namespace smtl_test
