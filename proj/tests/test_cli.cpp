#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("smtl_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run(const std::string& args) {
  const fs::path log = scratch() / "last.log";
  const std::string cmd = std::string("\"") + SMTL_BIN + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  return r;
}

std::string data(const std::string& name) { return std::string("\"") + SMTL_DATA_DIR + "/" + name + "\""; }

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

double metric(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string k;
  double v = 0;
  while (in >> k >> v) {
    if (k == key) return v;
  }
  ADD_FAILURE() << "no " << key << " in\n" << text;
  return 0;
}

// Fits the bundled toy problem once and shares the model file.
const fs::path& toy_model() {
  static const fs::path model = [] {
    const fs::path m = scratch() / "toy.model";
    const CliRun r = run("fit --data " + data("toy_two_task.csv") + " --config " + data("toy.cfg") + " --out " + quoted(m));
    EXPECT_EQ(r.code, 0) << r.out;
    return m;
  }();
  return model;
}

}  // namespace

TEST(Cli, FitWritesModelAndReport) {
  const auto& m = toy_model();
  ASSERT_TRUE(fs::exists(m));
  const std::string report = slurp(m.string() + ".report.json");
  EXPECT_NE(report.find("\"objective_trajectory\""), std::string::npos);
  EXPECT_NE(report.find("\"supervised_path\": \"direct\""), std::string::npos) << report;
  EXPECT_EQ(slurp(m).rfind("SMTL-MODEL v1\n", 0), 0u);
}

TEST(Cli, TrainingFitIsAccurate) {
  const fs::path out = scratch() / "train_pred.csv";
  const CliRun r = run("predict --model " + quoted(toy_model()) + " --data " + data("toy_two_task.csv") + " --out " +
                    quoted(out));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string metrics = slurp(out.string() + ".metrics.txt");
  EXPECT_LT(metric(metrics, "nmse"), 0.05);
  EXPECT_EQ(slurp(out).rfind("task,y,prediction\n", 0), 0u);
}

TEST(Cli, HeldOutFitIsAccurate) {
  const fs::path out = scratch() / "test_pred.csv";
  const CliRun r = run("predict --model " + quoted(toy_model()) + " --data " + data("toy_two_task_test.csv") +
                    " --out " + quoted(out));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string metrics = slurp(out.string() + ".metrics.txt");
  EXPECT_LT(metric(metrics, "nmse_task0"), 0.1);
  EXPECT_LT(metric(metrics, "nmse_task1"), 0.1);
}

TEST(Cli, WrongFeatureCountExitsTwoNamingDimension) {
  const fs::path bad = scratch() / "bad.csv";
  std::ofstream(bad) << "task,y,x1,x2\n0,1,2,3\n1,2,3,4\n";
  const CliRun r = run("predict --model " + quoted(toy_model()) + " --data " + quoted(bad) + " --out " +
                    quoted(scratch() / "bad_pred.csv"));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("expected 3 features"), std::string::npos) << r.out;
}

TEST(Cli, LabelsModeReportsAccuracy) {
  const fs::path lab = scratch() / "labels.csv";
  std::ofstream(lab) << "task,y,x1,x2,x3\n0,0,1,0,0\n0,1,0,1,0\n0,1,0,0,1\n";
  const fs::path out = scratch() / "labels_pred.csv";
  const CliRun r = run("predict --labels --model " + quoted(toy_model()) + " --data " + quoted(lab) + " --out " + quoted(out));
  ASSERT_EQ(r.code, 0) << r.out;
  const double acc = metric(slurp(out.string() + ".metrics.txt"), "accuracy");
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(slurp(out).rfind("row,label,predicted,score0,score1\n", 0), 0u);

  std::ofstream(lab) << "task,y,x1,x2,x3\n0,5,1,0,0\n";
  EXPECT_EQ(run("predict --labels --model " + quoted(toy_model()) + " --data " + quoted(lab) + " --out " + quoted(out)).code,
            2);
}

TEST(Cli, ConfigErrorsExitOne) {
  const fs::path cfg = scratch() / "bad.cfg";
  std::ofstream(cfg) << "lambda = 1\nbogus = 3\n";
  const CliRun r = run("fit --data " + data("toy_two_task.csv") + " --config " + quoted(cfg) + " --out " +
                    quoted(scratch() / "x.model"));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
  EXPECT_EQ(run("fit --data x.csv").code, 1);
  EXPECT_EQ(run("").code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
  const fs::path bad = scratch() / "nonnumeric.csv";
  std::ofstream(bad) << "task,y,x1\n0,1,2\n0,oops,3\n";
  const CliRun r = run("fit --data " + quoted(bad) + " --config " + data("toy.cfg") + " --out " +
                    quoted(scratch() / "x.model"));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
  const fs::path model = scratch() / "trunc.model";
  std::ofstream(model) << "SMTL-MODEL v1\n[kernel]\ntype linear\ngamma 1\n[X] 2 3\n1 2 3\n";
  EXPECT_EQ(run("predict --model " + quoted(model) + " --data " + data("toy_two_task.csv") + " --out " +
                quoted(scratch() / "t.csv"))
                .code,
            2);
}

TEST(Cli, VerifyFilterPasses) {
  const fs::path csv = scratch() / "verify.csv";
  const CliRun r = run("verify --filter gradients --csv " + quoted(csv));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS gradients"), std::string::npos) << r.out;
  EXPECT_NE(slurp(csv).find("gradients,1,"), std::string::npos);
  EXPECT_EQ(run("verify --filter nothing_matches").code, 1);
}

TEST(Cli, BenchmarkSmallGrid) {
  const fs::path cfg = scratch() / "bench.cfg";
  std::ofstream(cfg) << "lambda = 0.1\nmax_iter = 30\nsynth.n_per_task = 5\nbenchmark.repeats = 2\n"
                        "benchmark.methods = altmin,stl\n";
  const fs::path out = scratch() / "bench.csv";
  const CliRun r = run("benchmark --config " + quoted(cfg) + " --grid 2,4x3 --out " + quoted(out));
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2 * 1 * 2 * 2);
  EXPECT_EQ(run("benchmark --config " + quoted(cfg) + " --grid 2,4 --out " + quoted(out)).code, 1);
}
