#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hisd_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string &args) const {
    const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = std::string("\"") + HISD_CLI_PATH + "\" " + args +
                            " >\"" + out.string() + "\" 2>\"" + err.string() +
                            "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string &s) {
  std::size_t n = 0;
  for (char c : s)
    n += c == '\n';
  return n;
}

} // namespace

TEST_F(Cli, RunEmitsOneRecordPerNode) {
  const Result r = run("run --preset a --tau 2^-6 --T 10");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 641u);
  EXPECT_EQ(r.out.rfind("{", 0), 0u);
}

TEST_F(Cli, RunCsvToFile) {
  const fs::path f = dir_ / "traj.csv";
  const Result r =
      run("run --preset d --tau 2^-4 --T 1 --format csv --out " + f.string());
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(f);
  EXPECT_EQ(count_lines(csv), 18u);
  EXPECT_EQ(csv.rfind("n,t,x1,x2,x3,v1_1", 0), 0u);
}

TEST_F(Cli, NonOrthogonalDirectionNamesTheRelation) {
  const Result r = run("run --x0 0,0,1 --v 0,0.6,0.8 --tau 0.1 --T 1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("\"error\""), std::string::npos);
  EXPECT_NE(r.err.find("v1.x"), std::string::npos) << r.err;
}

TEST_F(Cli, ValidationFailuresExitOne) {
  EXPECT_EQ(run("run --preset z").code, 1);
  EXPECT_EQ(run("run --tau 0.3 --T 10").code, 1);
  EXPECT_EQ(run("run --tau -1").code, 1);
  EXPECT_EQ(run("run --energy banana").code, 1);
  EXPECT_EQ(run("run --no-such-flag").code, 1);
  EXPECT_EQ(run("converge --tau 2^-6 --tau 2^-8").code, 1);
}

TEST_F(Cli, IoFailuresExitThree) {
  EXPECT_EQ(run("run --tau 2^-2 --T 1 --out /nonexistent/dir/x.jsonl").code,
            3);
  EXPECT_EQ(run("run --config " + (dir_ / "missing.toml").string()).code, 3);
}

TEST_F(Cli, NumericalFailureExitsTwo) {
  const Result r = run(
      "run --energy quadratic --matrix \"0,0,0;0,0,0;0,0,-29\" --x0 1,1,1 "
      "--k 0 --splitting hessian0 --tau 0.1 --T 1");
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("StepTooLarge"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("\"step\":1"), std::string::npos) << r.err;
}

TEST_F(Cli, CheckPassesOnPresetAndFixture) {
  const Result a = run("check --preset a");
  EXPECT_EQ(a.code, 0) << a.out << a.err;
  EXPECT_EQ(a.out.find("FAIL"), std::string::npos) << a.out;
  const Result q = run("check --energy quadratic --tau 0.1 --T 1");
  EXPECT_EQ(q.code, 0) << q.out << q.err;
}

TEST_F(Cli, CheckFailsForHugeSteps) {
  const Result r = run("check --preset a --tau 0.5 --T 10");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, ConvergeIsByteIdenticalAcrossRuns) {
  const fs::path f1 = dir_ / "c1.csv", f2 = dir_ / "c2.csv";
  const std::string args =
      "converge --preset b --tau 2^-6 --tau 2^-7 --tau-ref 2^-10 --out ";
  const Result r1 = run(args + f1.string());
  const Result r2 = run(args + f2.string());
  ASSERT_EQ(r1.code, 0) << r1.err;
  ASSERT_EQ(r2.code, 0) << r2.err;
  const std::string c1 = slurp(f1);
  EXPECT_EQ(c1, slurp(f2));
  EXPECT_EQ(count_lines(c1), 3u);
  EXPECT_NE(r1.out.find("2^-7"), std::string::npos);
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  const fs::path cfg = dir_ / "run.toml";
  std::ofstream(cfg) << "preset = \"c\"\ntau = \"2^-2\"\nT = 1\n";
  const Result fromfile = run("run --config " + cfg.string());
  ASSERT_EQ(fromfile.code, 0) << fromfile.err;
  EXPECT_EQ(count_lines(fromfile.out), 5u);
  const Result flag = run("run --config " + cfg.string() + " --T 2");
  ASSERT_EQ(flag.code, 0) << flag.err;
  EXPECT_EQ(count_lines(flag.out), 9u);

  const fs::path js = dir_ / "run.json";
  std::ofstream(js) << R"({"preset": "a", "tau": "2^-3", "T": 1})";
  const Result j = run("run --config " + js.string());
  ASSERT_EQ(j.code, 0) << j.err;
  EXPECT_EQ(count_lines(j.out), 9u);
}
