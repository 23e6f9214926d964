#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rdsopt/bench.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string output;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(RDSOPT_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rdsopt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& leaf) const { return (dir_ / leaf).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunWritesOneRowPerTau) {
  const Outcome o = cli("run --problems largest-eig --dims 10 --seeds 0 --solvers rds-sb --out " +
                        path("r"));
  ASSERT_EQ(o.status, 0) << o.output;
  std::ifstream f(path("r/results.csv"));
  const rdsopt::ResultTable t = rdsopt::read_result_table(f);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].tau, 0.1);
  EXPECT_EQ(t.rows[1].tau, 1e-3);
  EXPECT_LE(t.rows[0].evals_used, 100 * 11);
  EXPECT_TRUE(fs::exists(path("r/instances.csv")));
  EXPECT_NE(slurp(path("r/instances.csv")).find("shape-v1"), std::string::npos);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  const std::string grid = "run --problems largest-eig,procrustes --dims 4,9 --seeds 0,1 "
                           "--solvers rds-sb,rdse-sb --budget-mult 20 ";
  ASSERT_EQ(cli(grid + "--threads 4 --out " + path("a")).status, 0);
  ASSERT_EQ(cli(grid + "--threads 1 --out " + path("b")).status, 0);
  EXPECT_EQ(slurp(path("a/results.csv")), slurp(path("b/results.csv")));
  for (const auto& e : fs::directory_iterator(path("a/traces")))
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(path("b/traces")) / e.path().filename()))
        << e.path();
}

TEST_F(Cli, TracesNeverExceedBudget) {
  ASSERT_EQ(cli("run --problems largest-sv,gmm --dims 6 --solvers rds-sb,rdse-sb,zo-rgd "
                "--budget-mult 10 --out " + path("r")).status,
            0);
  long files = 0;
  for (const auto& e : fs::directory_iterator(path("r/traces"))) {
    ++files;
    std::ifstream f(e.path());
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, rdsopt::kTraceHeader);
    long rows = 0;
    while (std::getline(f, line)) ++rows;
    EXPECT_LE(rows, 10 * 7) << e.path();
  }
  EXPECT_EQ(files, 6);
}

TEST_F(Cli, UnknownSolverNamesKey) {
  const Outcome o = cli("run --solvers xyz --out " + path("r"));
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.output.find("solvers"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("xyz"), std::string::npos) << o.output;
}

TEST_F(Cli, BadSetValueNamesKey) {
  const Outcome o = cli("run --set rds-sb.gamma1=2 --out " + path("r"));
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.output.find("rds-sb.gamma1"), std::string::npos) << o.output;
}

TEST_F(Cli, ConfigFileAndOverride) {
  std::ofstream(path("grid.cfg")) << "# tiny grid\nproblems = largest-eig\ndims = 3\n"
                                     "solvers = rdse-sb\nbudget_mult = 5\n";
  const Outcome o = cli("run --config " + path("grid.cfg") + " --seeds 0,1 --out " + path("r"));
  ASSERT_EQ(o.status, 0) << o.output;
  std::ifstream f(path("r/results.csv"));
  EXPECT_EQ(rdsopt::read_result_table(f).rows.size(), 4u);
}

TEST_F(Cli, ProfileBucketWithoutRowsFails) {
  ASSERT_EQ(cli("run --problems largest-eig --dims 10 --solvers rds-sb --budget-mult 5 --out " +
                path("r")).status,
            0);
  const Outcome o = cli("profile --in " + path("r/results.csv") + " --bucket large --out " +
                        path("p"));
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.output.find("EmptyInput"), std::string::npos) << o.output;
}

TEST_F(Cli, DataProfileSpansBudget) {
  ASSERT_EQ(cli("run --problems largest-eig,procrustes --dims 5 --solvers rds-sb,rdse-sb "
                "--budget-mult 20 --out " + path("r")).status,
            0);
  const Outcome o = cli("profile --in " + path("r/results.csv") +
                        " --kind data --tau 0.1 --svg --out " + path("p"));
  ASSERT_EQ(o.status, 0) << o.output;
  const std::string csv = slurp(path("p/data_tau0.1_rdse-sb.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), rdsopt::kProfileHeader);
  std::istringstream rows(csv);
  std::string line, last;
  while (std::getline(rows, line))
    if (!line.empty()) last = line;
  EXPECT_EQ(last.rfind("rdse-sb,data,0.1,100,", 0), 0u) << last;
  EXPECT_TRUE(fs::exists(path("p/data_tau0.1.svg")));
  EXPECT_FALSE(fs::exists(path("p/performance_tau0.1_rds-sb.csv")));
}

TEST_F(Cli, CheckPassesAndDetectsFault) {
  const Outcome ok = cli("check --suite geometry,spanning");
  EXPECT_EQ(ok.status, 0) << ok.output;
  const Outcome bad = cli("check --suite geometry --inject-fault");
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.output.find("FAIL geometry/feasibility"), std::string::npos) << bad.output;
}

TEST_F(Cli, MissingSubcommandIsAnError) {
  EXPECT_EQ(cli("").status, 1);
  EXPECT_EQ(cli("--help").status, 0);
  EXPECT_EQ(cli("profile").status, 1);
}
