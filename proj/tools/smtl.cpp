// smtl: fit / predict / benchmark / verify front end.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smtl/benchmark.hpp"
#include "smtl/io.hpp"
#include "smtl/metrics.hpp"
#include "smtl/oracles.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 4;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw smtl::Error(smtl::Errc::IoError, "cannot write '" + path + "'");
  return out;
}

int cmd_fit(const std::string& data_path, const std::string& cfg_path, const std::string& out_path) {
  const smtl::RunConfig cfg = smtl::load_config(cfg_path);
  const smtl::TaskDataset ds = smtl::load_dataset(data_path, cfg.weighting);
  const auto t = ds.tasks();
  const smtl::FitResult fr = smtl::fit(ds, cfg.kernel, smtl::params_for(cfg, t), smtl::solver_for(cfg, t));
  smtl::save_model(fr.model, out_path);
  auto rep = open_out(out_path + ".report.json");
  rep << smtl::report_to_json(fr.report).dump(2) << '\n';
  std::cout << "fit: n=" << ds.n() << " d=" << ds.d() << " T=" << t << " iters=" << fr.report.iters << " ("
            << smtl::to_string(fr.report.termination) << ") objective="
            << smtl::format_double(fr.report.objective_trajectory.back()) << " path=" << fr.report.supervised_path
            << '\n';
  std::cout << "wrote " << out_path << " and " << out_path << ".report.json\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path,
                bool labels) {
  const smtl::ModelState model = smtl::load_model(model_path);
  const smtl::LongRows rows = smtl::load_long_rows(data_path);
  const Eigen::Index t = model.C.cols();
  const smtl::Matrix z = smtl::predict(model, rows.X);
  auto out = open_out(out_path);
  std::ofstream metrics;
  const std::string metrics_path = out_path + ".metrics.txt";

  if (labels) {
    std::vector<Eigen::Index> lab;
    for (Eigen::Index i = 0; i < rows.y.size(); ++i) {
      const double v = rows.y(i);
      if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(t)) {
        throw smtl::Error(smtl::Errc::BadLabel, "row " + std::to_string(i + 1) + ": label " + smtl::format_double(v) +
                                                    " is not in 0.." + std::to_string(t - 1));
      }
      lab.push_back(static_cast<Eigen::Index>(v));
    }
    out << "row,label,predicted";
    for (Eigen::Index c = 0; c < t; ++c) out << ",score" << c;
    out << '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      out << i << ',' << lab[static_cast<std::size_t>(i)] << ',' << smtl::argmax_row(z, i);
      for (Eigen::Index c = 0; c < t; ++c) out << ',' << smtl::format_double(z(i, c));
      out << '\n';
    }
    const double acc = smtl::accuracy(lab, z);
    metrics = open_out(metrics_path);
    metrics << "accuracy " << smtl::format_double(acc) << '\n';
    std::cout << "accuracy " << smtl::format_double(acc) << '\n';
    return 0;
  }

  smtl::Vector zi(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto task = rows.task_ids[static_cast<std::size_t>(i)];
    if (task >= t) {
      throw smtl::Error(smtl::Errc::InconsistentDimension,
                        "row " + std::to_string(i + 1) + ": task " + std::to_string(task) + " but the model has " +
                            std::to_string(t) + " tasks");
    }
    zi(i) = z(i, task);
  }
  out << "task,y,prediction\n";
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out << rows.task_ids[static_cast<std::size_t>(i)] << ',' << smtl::format_double(rows.y(i)) << ','
        << smtl::format_double(zi(i)) << '\n';
  }
  const auto per = smtl::nmse_long(rows.y, zi, rows.task_ids, t);
  metrics = open_out(metrics_path);
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (std::isnan(per[k])) continue;
    metrics << "nmse_task" << k << ' ' << smtl::format_double(per[k]) << '\n';
    sum += per[k];
    ++present;
  }
  const double mean = present ? sum / present : 0.0;
  metrics << "nmse " << smtl::format_double(mean) << '\n';
  std::cout << "nmse " << smtl::format_double(mean) << " over " << present << " tasks\n";
  return 0;
}

std::vector<Eigen::Index> parse_index_list(std::string_view s, const char* what) {
  std::vector<Eigen::Index> out;
  for (auto f : smtl::detail::split_commas(s)) {
    const auto v = smtl::parse_int(f);
    if (!v || *v < 1) throw smtl::Error(smtl::Errc::BadConfig, std::string("bad ") + what + " entry '" + std::string(f) + "'");
    out.push_back(static_cast<Eigen::Index>(*v));
  }
  return out;
}

int cmd_benchmark(const std::string& cfg_path, const std::string& grid, const std::string& out_path) {
  const smtl::RunConfig cfg = smtl::load_config(cfg_path);
  const auto x = grid.find('x');
  if (x == std::string::npos) throw smtl::Error(smtl::Errc::BadConfig, "grid must look like <d list>x<T list>, e.g. 5,50x10");
  const auto ds = parse_index_list(std::string_view(grid).substr(0, x), "d");
  const auto ts = parse_index_list(std::string_view(grid).substr(x + 1), "T");
  const int threads = smtl::benchmark_threads();
  const auto cells = smtl::benchmark_cells(ds, ts, cfg.repeats);
  const auto rows = smtl::run_benchmark(cfg, cells, threads);
  auto out = open_out(out_path);
  smtl::write_benchmark_csv(out, rows);
  std::cout << "benchmark: " << cells.size() << " cells, " << rows.size() << " rows, " << threads
            << " thread(s), wrote " << out_path << '\n';
  return 0;
}

int cmd_verify(const std::string& filter, const std::string& csv_path, std::uint64_t seed) {
  smtl::OracleOptions opt;
  opt.seed = seed;
  const auto reports = smtl::run_verification_suite(filter, opt);
  if (reports.empty()) throw smtl::Error(smtl::Errc::BadConfig, "no check matches filter '" + filter + "'");
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << smtl::format_report_line(r) << '\n';
    ok = ok && r.passed;
  }
  if (!csv_path.empty()) {
    auto out = open_out(csv_path);
    smtl::write_reports_csv(out, reports);
  }
  return ok ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task kernel learning with a learned task-structure matrix"};
  app.require_subcommand(1);

  std::string data;
  std::string config;
  std::string out;
  auto* fit = app.add_subcommand("fit", "fit a model to a long-format CSV");
  fit->add_option("--data", data, "training CSV (task,y,x1..xd)")->required();
  fit->add_option("--config", config, "key = value configuration file")->required();
  fit->add_option("--out", out, "model file to write")->required();

  std::string model;
  bool labels = false;
  auto* pred = app.add_subcommand("predict", "predict with a saved model");
  pred->add_option("--model", model, "model file")->required();
  pred->add_option("--data", data, "CSV with the training column layout")->required();
  pred->add_option("--out", out, "predictions CSV")->required();
  pred->add_flag("--labels", labels, "treat y as a class label and score one-vs-all");

  std::string grid;
  auto* bench = app.add_subcommand("benchmark", "timing sweep over synthetic problems");
  bench->add_option("--config", config, "configuration file")->required();
  bench->add_option("--grid", grid, "<d list>x<T list>, e.g. 5,50,150x20")->required();
  bench->add_option("--out", out, "CSV to write")->required();

  std::string filter;
  std::string csv;
  std::uint64_t seed = smtl::OracleOptions{}.seed;
  auto* verify = app.add_subcommand("verify", "run the oracle checks");
  verify->add_option("--filter", filter, "only checks whose name contains this");
  verify->add_option("--csv", csv, "also write results as CSV");
  verify->add_option("--seed", seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit) return cmd_fit(data, config, out);
    if (*pred) return cmd_predict(model, data, out, labels);
    if (*bench) return cmd_benchmark(config, grid, out);
    if (*verify) return cmd_verify(filter, csv, seed);
  } catch (const smtl::Error& e) {
    std::cerr << "smtl: " << e.what() << '\n';
    return smtl::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "smtl: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
