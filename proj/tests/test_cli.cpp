#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "erosim/config.hpp"
#include "erosim/io.hpp"

using namespace erosim;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("erosim_cli_" + std::to_string(std::random_device{}()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the tool with stdout and stderr captured; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + EROSIM_CLI_PATH + "\" " + args + " > \"" +
                            (dir_ / "stdout.txt").string() + "\" 2> \"" +
                            (dir_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    out_ = slurp(dir_ / "stdout.txt");
    err_ = slurp(dir_ / "stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::string out_, err_;
};

const char* kShortRun = R"(scenario:
  kind: catastrophic_1d
grid:
  N: 40
time:
  duration: 120
  dt: 10
output:
  snapshot_times: [60, 1y]
  front_interval: 30
)";

}  // namespace

TEST_F(Cli, HelpAndUnknownOptions) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_NE(out_.find("run"), std::string::npos);
  EXPECT_EQ(run("run --no-such-flag x.yaml"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, PrintDefaultsParsesBack) {
  for (const char* kind : {"standard_1d", "standard_2d", "catastrophic_1d"}) {
    ASSERT_EQ(run(std::string("print-defaults --scenario ") + kind), 0) << err_;
    const Config c = parse_config(out_);
    EXPECT_EQ(c.scenario.name, kind);
    EXPECT_EQ(emit_config(c), out_);
  }
  EXPECT_EQ(run("print-defaults --scenario wet_3d"), 2);
}

TEST_F(Cli, ValidateConfig) {
  const auto good = write("good.yaml", kShortRun);
  EXPECT_EQ(run("validate-config " + good.string()), 0) << err_;
  EXPECT_NE(out_.find("ok"), std::string::npos);
  const auto bad = write("bad.yaml", "grid:\n  N: 40\n  M: 3\n");
  EXPECT_EQ(run("validate-config " + bad.string()), 2);
  EXPECT_NE(err_.find("bad.yaml:3: config error"), std::string::npos) << err_;
  EXPECT_EQ(run("validate-config " + (dir_ / "missing.yaml").string()), 4);
}

TEST_F(Cli, ShortRunWritesOutputsAndManifest) {
  const auto cfg = write("run.yaml", kShortRun);
  const auto out = dir_ / "out";
  ASSERT_EQ(run("run " + cfg.string() + " -o " + out.string()), 0) << err_;
  EXPECT_NE(out_.find("left"), std::string::npos);
  for (const char* f : {"config.yaml", "front.csv", "final.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto m = read_manifest(out / "manifest.json");
  EXPECT_EQ(m.status, "completed");
  EXPECT_EQ(m.exit_code, 0);
  EXPECT_EQ(m.command, "run");
  EXPECT_EQ(m.scenario, "catastrophic_1d");
  for (const auto& f : m.files) EXPECT_TRUE(fs::exists(out / f)) << f;
  // snapshot at 60 s is written; 1 y lies beyond the run
  int snaps = 0;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename().string().rfind("snapshot_", 0) == 0) ++snaps;
  EXPECT_EQ(snaps, 1);
  const auto log = read_front_log(out / "front.csv");
  EXPECT_EQ(log.samples.size(), 5u);
  EXPECT_EQ(log.samples.back().t, 120.0);
  // the canonical configuration reproduces the run settings
  const auto back = load_config((out / "config.yaml").string());
  EXPECT_EQ(back.scenario.N, 40);
  EXPECT_EQ(back.scenario.dt, 10.0);
  EXPECT_EQ(m.config_hash, "fnv1a64:" + hex64(fnv1a(emit_config(back))));
}

TEST_F(Cli, ConfigErrorStillWritesManifest) {
  const auto cfg = write("bad.yaml", "model:\n  n_tilde: 0.0063\n  n_max: 0.001\n");
  const auto out = dir_ / "out";
  EXPECT_EQ(run("run " + cfg.string() + " -o " + out.string()), 2);
  EXPECT_NE(err_.find(":3: config error"), std::string::npos) << err_;
  const auto m = read_manifest(out / "manifest.json");
  EXPECT_EQ(m.status, "config_error");
  EXPECT_EQ(m.exit_code, 2);
}

TEST_F(Cli, IoErrors) {
  EXPECT_EQ(run("run " + (dir_ / "missing.yaml").string() + " -o " + (dir_ / "o").string()), 4);
  const auto cfg = write("run.yaml", kShortRun);
  const auto blocker = write("file", "x");
  EXPECT_EQ(run("run " + cfg.string() + " -o " + (blocker / "sub").string()), 4);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  const auto cfg = write("run.yaml", kShortRun);
  const auto out = dir_ / "env_out";
  ASSERT_EQ(std::system(("cd \"" + dir_.string() + "\" && EROSIM_OUTPUT_DIR=\"" + out.string() +
                         "\" \"" + EROSIM_CLI_PATH + "\" run run.yaml > /dev/null")
                            .c_str()),
            0);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST_F(Cli, StudyCommand) {
  const auto cfg = write("s.yaml", R"(grid:
  N: 25
time:
  dt: 1
study:
  levels: 3
  manufactured: true
  threads: 1
)");
  const auto out = dir_ / "study";
  ASSERT_EQ(run("study " + cfg.string() + " -o " + out.string()), 0) << err_;
  const auto rows = read_study_table(out / "study.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].N, 100);
  EXPECT_NEAR(*rows[2].order_theta, 1.0, 0.1);
  EXPECT_EQ(read_manifest(out / "manifest.json").command, "study");
  EXPECT_EQ(run("study " + cfg.string() + " --levels 1 -o " + out.string()), 2);
}
