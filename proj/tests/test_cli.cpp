#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = -1;
  std::string output;
};

CliRun run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "eldtn_cli_output.txt";
  const std::string cmd = std::string("\"") + ELDTN_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eldtn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& body) {
    const fs::path p = dir_ / "run.cfg";
    std::ofstream(p) << body;
    return p;
  }

  static std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  fs::path dir_;
};

const char* kSmall = "divisions = 4 4 2\nmax_dofs = 100000\n";

TEST_F(Cli, DryRunPrintsNAndWritesNothing) {
  const CliRun r = run_cli("adapt \"" + write_config(kSmall).string() + "\" --dry-run");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("N = 8"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, InvalidLameParameterExitsWithStatus2) {
  const CliRun r = run_cli("solve \"" + write_config("lambda = -3\n").string() + "\"");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("lambda"), std::string::npos) << r.output;
  EXPECT_EQ(run_cli("solve \"" + write_config("bogus = 1\n").string() + "\"").status, 2);
  EXPECT_EQ(run_cli("solve \"" + (dir_ / "missing.cfg").string() + "\"").status, 2);
}

TEST_F(Cli, SolveWritesExportsAndConservesEnergy) {
  const CliRun r = run_cli("solve \"" + write_config(kSmall).string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  const fs::path out = dir_ / "out";
  EXPECT_TRUE(fs::exists(out / "config.txt"));
  const auto vtk = lines(out / "solution.vtk");
  ASSERT_GT(vtk.size(), 5u);
  EXPECT_EQ(vtk[0].rfind("# vtk DataFile", 0), 0u);
  const auto eff = lines(out / "efficiencies.csv");
  ASSERT_GE(eff.size(), 2u);
  EXPECT_EQ(eff[0], "n1,n2,type,efficiency");
  double sum = 0.0;
  for (std::size_t i = 1; i < eff.size(); ++i) {
    const std::size_t comma = eff[i].rfind(',');
    sum += std::stod(eff[i].substr(comma + 1));
    const char type = eff[i][comma - 1];
    EXPECT_TRUE(type == 'c' || type == 's') << eff[i];
  }
  EXPECT_NEAR(sum, 1.0, 5e-2);
}

TEST_F(Cli, AdaptWithOneIterationWritesOneRecord) {
  const CliRun r = run_cli("adapt \"" + write_config(std::string(kSmall) + "max_iters = 1\nexport_vtk = false\n").string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto csv = lines(dir_ / "out" / "convergence.csv");
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[0], "iter,n_dofs,n_tets,N,eps_h,eps_N,h1_error,efficiency_sum,wall_seconds");
  EXPECT_EQ(csv[1].rfind("0,96,", 0), 0u) << csv[1];
  EXPECT_FALSE(fs::exists(dir_ / "out" / "solution.vtk"));
}

TEST_F(Cli, AdaptOnBumpsLeavesTheErrorColumnEmpty) {
  const CliRun r = run_cli("adapt \"" +
                        write_config("geometry = bumps\nbumps = 0.25,0.5,0.25,0.5,0.2\ndivisions = 4 4 3\n"
                                     "max_iters = 2\n")
                            .string() +
                        "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto csv = lines(dir_ / "out" / "convergence.csv");
  ASSERT_EQ(csv.size(), 3u);
  for (std::size_t i = 1; i < csv.size(); ++i) EXPECT_NE(csv[i].find(",,"), std::string::npos) << csv[i];
}

TEST_F(Cli, VerifySingleGroup) {
  const CliRun r = run_cli("verify --group spectral");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("PASS spectral"), std::string::npos);
  EXPECT_EQ(r.output.find("fourier"), std::string::npos);
  const CliRun bad = run_cli("verify --group positivity --flip-dtn-sign");
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.output.find("FAIL positivity"), std::string::npos);
  EXPECT_NE(run_cli("verify --group nonsense").status, 0);
}

}  // namespace
