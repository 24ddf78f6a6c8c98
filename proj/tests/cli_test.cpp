// Drives the installed binary end to end: exit codes, CSV artifacts,
// determinism of the compare subcommand.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include "test_support.hpp"

namespace stepahead {
namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

CliResult run_cli(const std::string& args, const std::string& capture_path) {
    const std::string command = std::string(STEPAHEAD_CLI_PATH) + " " + args +
                                " > " + capture_path + " 2>&1";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = testing::read_file(capture_path);
    return result;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

std::string quad_config() {
    return "problem.kind = \"quadratic\"\n"
           "problem.dim = 8\n"
           "problem.steps_per_epoch = 120\n"
           "optimizer.gamma = 0.05\n"
           "optimizer.s = 1\n"
           "train.epochs = 1\n"
           "train.batch_size = 1\n"
           "train.shuffle = false\n"
           "run.modes = \"baseline,s1,s2\"\n"
           "run.seeds = \"1,2\"\n";
}

class CliTest : public ::testing::Test {
protected:
    testing::TempDir dir{"cli"};

    std::string config_path(const std::string& name,
                            const std::string& contents) {
        const std::string path = dir.str() + "/" + name;
        write_file(path, contents);
        return path;
    }

    std::string capture() { return dir.str() + "/capture.txt"; }
};

TEST_F(CliTest, TrainHappyPathWritesCsv) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const std::string out = dir.str() + "/run1";
    const CliResult r =
        run_cli("train --config " + cfg + " --out " + out, capture());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_TRUE(std::filesystem::exists(out + "/metrics.csv")) << r.output;
    EXPECT_NE(r.output.find("final train loss"), std::string::npos);
}

TEST_F(CliTest, TrainAcceptsOverrides) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const std::string out = dir.str() + "/run2";
    const CliResult r = run_cli("train --config " + cfg +
                                    " --set train.mode=predictive"
                                    " --set optimizer.s=2 --out " +
                                    out,
                                capture());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("mode: s2"), std::string::npos) << r.output;
}

TEST_F(CliTest, MissingConfigExitsTwoAndNamesPath) {
    const CliResult r =
        run_cli("train --config /nonexistent/quad.toml", capture());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("/nonexistent/quad.toml"), std::string::npos)
        << r.output;
}

TEST_F(CliTest, UnknownOverrideKeyExitsTwo) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const CliResult r =
        run_cli("train --config " + cfg + " --set no.such=1", capture());
    EXPECT_EQ(r.exit_code, 2);
}

TEST_F(CliTest, HugeGammaDivergesWithExitThree) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const CliResult r = run_cli(
        "train --config " + cfg + " --set optimizer.gamma=1e6", capture());
    EXPECT_EQ(r.exit_code, 3) << r.output;
    EXPECT_NE(r.output.find("diverged at step"), std::string::npos) << r.output;
}

TEST_F(CliTest, CompareProducesTableAndCsv) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const std::string out = dir.str() + "/cmp";
    const CliResult r =
        run_cli("compare --config " + cfg + " --out " + out, capture());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_TRUE(std::filesystem::exists(out + "/metrics.csv"));
    EXPECT_NE(r.output.find("baseline"), std::string::npos);
    EXPECT_NE(r.output.find("s1"), std::string::npos);
    EXPECT_NE(r.output.find("s2"), std::string::npos);
}

TEST_F(CliTest, CompareSurvivesDivergingRuns) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const std::string out = dir.str() + "/cmp_div";
    const CliResult r = run_cli("compare --config " + cfg +
                                    " --set optimizer.gamma=1e6 --out " + out,
                                capture());
    EXPECT_EQ(r.exit_code, 0) << r.output; // divergence recorded, not fatal
}

TEST_F(CliTest, CompareS0RowEqualsBaselineRows) {
    const std::string cfg = config_path(
        "quad_s0.toml",
        quad_config() + "run.modes = \"baseline,s0\"\nrun.seeds = \"3\"\n");
    const std::string out = dir.str() + "/cmp_s0";
    const CliResult r =
        run_cli("compare --config " + cfg + " --out " + out, capture());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    std::ifstream in(out + "/metrics.csv");
    std::string line;
    std::getline(in, line); // header
    std::vector<std::string> baseline_rows, s0_rows;
    while (std::getline(in, line)) {
        if (line.rfind("baseline,", 0) == 0) {
            baseline_rows.push_back(line.substr(9));
        } else if (line.rfind("s0,", 0) == 0) {
            s0_rows.push_back(line.substr(3));
        }
    }
    ASSERT_FALSE(baseline_rows.empty());
    ASSERT_EQ(baseline_rows.size(), s0_rows.size());
    for (std::size_t i = 0; i < baseline_rows.size(); ++i) {
        EXPECT_EQ(baseline_rows[i], s0_rows[i]);
    }
}

TEST_F(CliTest, CompareIsByteDeterministic) {
    const std::string cfg = config_path("quad.toml", quad_config());
    const std::string out_a = dir.str() + "/det_a";
    const std::string out_b = dir.str() + "/det_b";
    ASSERT_EQ(run_cli("compare --config " + cfg + " --out " + out_a, capture())
                  .exit_code,
              0);
    ASSERT_EQ(run_cli("compare --config " + cfg + " --out " + out_b, capture())
                  .exit_code,
              0);
    const std::string a = testing::read_file(out_a + "/metrics.csv");
    const std::string b = testing::read_file(out_b + "/metrics.csv");
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}

TEST_F(CliTest, ProbeRunsOnLogregProblem) {
    const std::string cfg = config_path(
        "probe.toml",
        "problem.kind = \"logreg_blobs\"\n"
        "problem.classes = 2\n"
        "problem.per_class = 40\n"
        "problem.dim = 4\n"
        "optimizer.gamma = 0.02\n"
        "optimizer.lambda = 0\n"
        "train.epochs = 4\n"
        "train.batch_size = 16\n"
        "probe.s_max = 2\n");
    const CliResult r = run_cli("probe --config " + cfg, capture());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("sum err"), std::string::npos);
}

TEST_F(CliTest, VerifyPassesOnCleanBuild) {
    const CliResult r = run_cli("verify", capture());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    // at least four named checks, all passing
    std::size_t passes = 0;
    std::size_t pos = 0;
    while ((pos = r.output.find("[PASS]", pos)) != std::string::npos) {
        ++passes;
        pos += 6;
    }
    EXPECT_GE(passes, 4u) << r.output;
    EXPECT_EQ(r.output.find("[FAIL]"), std::string::npos) << r.output;
}

TEST_F(CliTest, VerifyDetectsInjectedEpsFault) {
    const CliResult r = run_cli("verify --misplace-eps", capture());
    EXPECT_NE(r.exit_code, 0);
    EXPECT_NE(r.output.find("[FAIL] adamw-step-hand-values"),
              std::string::npos)
        << r.output;
}

TEST_F(CliTest, ShippedConfigsAreRunnable) {
    const std::string configs = STEPAHEAD_CONFIG_DIR;
    const std::string out = dir.str() + "/shipped";
    EXPECT_EQ(run_cli("train --config " + configs + "/quadratic.toml --out " +
                          out + "/quad --seeds 1",
                      capture())
                  .exit_code,
              0);
    EXPECT_EQ(run_cli("compare --config " + configs +
                          "/blobs_logreg.toml --out " + out +
                          "/logreg --seeds 1",
                      capture())
                  .exit_code,
              0);
    EXPECT_EQ(run_cli("compare --config " + configs + "/blobs_mlp.toml --out " +
                          out + "/mlp --seeds 1",
                      capture())
                  .exit_code,
              0);
    EXPECT_EQ(
        run_cli("probe --config " + configs + "/probe_logreg.toml", capture())
            .exit_code,
        0);
}

TEST_F(CliTest, StepStreamsWrittenWhenEnabled) {
    const std::string cfg = config_path(
        "steps.toml", quad_config() + "train.record_steps = true\n");
    const std::string out = dir.str() + "/steps";
    const CliResult r = run_cli("train --config " + cfg + " --out " + out,
                                capture());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_TRUE(
        std::filesystem::exists(out + "/steps_baseline_seed1.csv"));
}

} // namespace
} // namespace stepahead
