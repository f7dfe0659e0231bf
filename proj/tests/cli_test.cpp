#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("recloop_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(RECLOOP_CLI_PATH) + " " + args + " > " +
                            (dir_ / "stdout").string() + " 2> " + (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

const std::string kBaseArgs = "--alpha 0.15 --beta 0.70 --gamma 0.15 --prejudice 0.30 --epsilon 0.05";

TEST_F(Cli, OracleReportsDiscrepancy) {
  ASSERT_EQ(run("oracle " + kBaseArgs), 0) << read("stderr");
  EXPECT_NE(read("stdout").find("discrepancy,0.90000000000000002"), std::string::npos);
}

TEST_F(Cli, SimulateWritesFile) {
  ASSERT_EQ(run("simulate " + kBaseArgs + " --tmax 100 --seed 4 --out " + path("t.csv").string()), 0)
      << read("stderr");
  std::ifstream in(path("t.csv"));
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "t,position,click,opinion,rho_plus,rho_minus,c_plus,c_minus,ctr,avg_opinion,avg_position");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 100);
  EXPECT_TRUE(read("stdout").empty());
}

TEST_F(Cli, SameConfigSameBytes) {
  const std::string args = "ensemble " + kBaseArgs + " --tmax 200 --n 50 --seed 11 --threads 2 --out ";
  ASSERT_EQ(run(args + path("a.csv").string()), 0);
  ASSERT_EQ(run(args + path("b.csv").string()), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  EXPECT_FALSE(read("a.csv").empty());
}

TEST_F(Cli, ConfigFileWithOverride) {
  {
    std::ofstream f(path("cfg.json"));
    f << R"({"alpha":0.15,"beta":0.70,"gamma":0.15,"prejudice":0.30,"epsilon":0.05,"tmax":1000})";
  }
  ASSERT_EQ(run("simulate --config " + path("cfg.json").string() + " --tmax 20 --format json"), 0)
      << read("stderr");
  EXPECT_NE(read("stdout").find("\"tmax\": 20"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate --bogus"), 2);
  {
    std::ofstream f(path("bad.json"));
    f << "{\"alpha\": ";
  }
  EXPECT_EQ(run("simulate --config " + path("bad.json").string()), 2);
  EXPECT_EQ(run("oracle --alpha 0.15 --beta 0.70 --gamma 0.15 --prejudice 0.3 --epsilon 0.7"), 3);
  EXPECT_NE(read("stderr").find("epsilon"), std::string::npos);
  EXPECT_EQ(run("ensemble " + kBaseArgs), 4);
  EXPECT_EQ(run("sweep-epsilon --alpha 0.2 --beta 0.7 --gamma 0.1 --prejudice 0.33 --seed 1"), 4);
  EXPECT_EQ(run("simulate --config " + path("missing.json").string()), 5);
  EXPECT_EQ(run("oracle " + kBaseArgs + " --out /nonexistent-dir/x.csv"), 5);
}

}  // namespace
