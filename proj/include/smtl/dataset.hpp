#pragma once

// Multi-task datasets in stacked (long) layout and the weighted loss V.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smtl/linalg.hpp"
#include "smtl/numfmt.hpp"

namespace smtl {

/// Row i of X is observation i; it belongs to task task_ids[i] and its output
/// sits in Y(i, task_ids[i]). W masks and normalizes the loss entrywise.
struct TaskDataset {
  Matrix X;
  Matrix Y;
  Matrix W;
  std::vector<Eigen::Index> task_sizes;
  std::vector<Eigen::Index> task_ids;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
  Eigen::Index tasks() const { return static_cast<Eigen::Index>(task_sizes.size()); }

  /// The observed output of each row (Y(i, task_ids[i])).
  Vector observed() const {
    Vector y(n());
    for (Eigen::Index i = 0; i < n(); ++i) y(i) = Y(i, task_ids[static_cast<std::size_t>(i)]);
    return y;
  }
};

enum class TaskWeighting {
  PerTask,  // 1/n_t on each observation's own task
  Uniform,  // 1/n
};

/// Assembles a long-format dataset from per-row task ids and outputs.
inline TaskDataset make_long_dataset(Matrix x, const std::vector<Eigen::Index>& task_ids, const Vector& y,
                                     Eigen::Index tasks = -1,
                                     TaskWeighting weighting = TaskWeighting::PerTask) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(task_ids.size()) != n || y.size() != n) {
    throw Error(Errc::InconsistentDimension, "task ids / outputs do not match the number of rows");
  }
  Eigen::Index t_count = tasks;
  if (t_count < 0) {
    t_count = 0;
    for (auto t : task_ids) t_count = std::max(t_count, t + 1);
  }
  TaskDataset ds;
  ds.task_sizes.assign(static_cast<std::size_t>(t_count), 0);
  for (auto t : task_ids) {
    if (t < 0 || t >= t_count) throw Error(Errc::InconsistentDimension, "task id out of range");
    ++ds.task_sizes[static_cast<std::size_t>(t)];
  }
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (ds.task_sizes[static_cast<std::size_t>(t)] == 0) {
      throw Error(Errc::EmptyTask, "task " + std::to_string(t) + " has no observations");
    }
  }
  ds.X = std::move(x);
  ds.Y = Matrix::Zero(n, t_count);
  ds.W = Matrix::Zero(n, t_count);
  ds.task_ids = task_ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto t = task_ids[static_cast<std::size_t>(i)];
    ds.Y(i, t) = y(i);
    ds.W(i, t) = weighting == TaskWeighting::PerTask
                     ? 1.0 / static_cast<double>(ds.task_sizes[static_cast<std::size_t>(t)])
                     : 1.0 / static_cast<double>(n);
  }
  return ds;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Rows of a long-format file before assembly into a dataset.
struct LongRows {
  Matrix X;
  std::vector<Eigen::Index> task_ids;
  Vector y;
};

/// Parses long-format CSV text: header `task,y,x1,...,xd`, then `t,y,v1,...,vd`.
inline LongRows parse_long_rows(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index d = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  {
    const auto header = detail::split_commas(trim(line));
    if (header.size() < 2 || trim(header[0]) != "task" || trim(header[1]) != "y") {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": header must start with task,y",
                  lineno);
    }
    d = static_cast<Eigen::Index>(header.size()) - 2;
  }
  std::vector<Eigen::Index> ids;
  std::vector<double> ys;
  std::vector<double> xs;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = detail::split_commas(body);
    if (static_cast<Eigen::Index>(fields.size()) != d + 2) {
      throw Error(Errc::InconsistentDimension,
                  "line " + std::to_string(lineno) + ": expected " + std::to_string(d + 2) + " fields, got " +
                      std::to_string(fields.size()),
                  lineno);
    }
    const auto t = parse_int(fields[0]);
    if (!t || *t < 0) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad task id '" +
                                        std::string(trim(fields[0])) + "'",
                  lineno);
    }
    ids.push_back(static_cast<Eigen::Index>(*t));
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto v = parse_double(fields[f]);
      if (!v || !std::isfinite(*v)) {
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": non-numeric field '" +
                                          std::string(trim(fields[f])) + "'",
                    lineno);
      }
      if (f == 1) {
        ys.push_back(*v);
      } else {
        xs.push_back(*v);
      }
    }
  }
  if (ids.empty()) throw Error(Errc::EmptyTask, "dataset has no observations");
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = xs[static_cast<std::size_t>(i * d + j)];
  }
  return LongRows{std::move(x), std::move(ids), Eigen::Map<const Vector>(ys.data(), n)};
}

inline TaskDataset parse_long_csv(std::istream& in, TaskWeighting weighting = TaskWeighting::PerTask) {
  LongRows rows = parse_long_rows(in);
  return make_long_dataset(std::move(rows.X), rows.task_ids, rows.y, -1, weighting);
}

inline TaskDataset load_dataset(const std::string& path, TaskWeighting weighting = TaskWeighting::PerTask) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open dataset '" + path + "'");
  return parse_long_csv(in, weighting);
}

inline LongRows load_long_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open data file '" + path + "'");
  return parse_long_rows(in);
}

inline void write_long_csv(std::ostream& out, const TaskDataset& ds) {
  out << "task,y";
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const auto t = ds.task_ids[static_cast<std::size_t>(i)];
    out << t << ',' << format_double(ds.Y(i, t));
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << ',' << format_double(ds.X(i, j));
    out << '\n';
  }
}

inline void save_dataset(const std::string& path, const TaskDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write dataset '" + path + "'");
  write_long_csv(out, ds);
}

enum class LossKind {
  Squared,
  Logistic,  // W log(1 + exp(-Y Z)) entrywise, labels in {-1, +1}
};

struct LossEval {
  double value = 0.0;
  Matrix grad;
};

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::DimensionMismatch, std::string(what) + ": " + shape_of(a) + " vs " + shape_of(b));
  }
}

inline double loss_value(LossKind kind, const Matrix& y, const Matrix& z, const Matrix& w) {
  check_same_shape(y, z, "loss Y/Z");
  check_same_shape(y, w, "loss Y/W");
  if (kind == LossKind::Squared) return (w.array() * (y - z).array().square()).sum();
  double v = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (w(i, j) == 0.0) continue;
      const double m = -y(i, j) * z(i, j);
      v += w(i, j) * (m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)));
    }
  }
  return v;
}

/// Value and gradient with respect to the predictions Z.
inline LossEval loss_value_grad(LossKind kind, const Matrix& y, const Matrix& z, const Matrix& w) {
  LossEval out;
  out.value = loss_value(kind, y, z, w);
  if (kind == LossKind::Squared) {
    out.grad = -2.0 * (w.array() * (y - z).array()).matrix();
    return out;
  }
  out.grad = Matrix::Zero(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (w(i, j) == 0.0) continue;
      const double m = y(i, j) * z(i, j);
      out.grad(i, j) = -w(i, j) * y(i, j) / (1.0 + std::exp(m));
    }
  }
  return out;
}

}  // namespace smtl
