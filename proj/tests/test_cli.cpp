#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "automode/ensemble.hpp"
#include "automode/wav.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

// Runs the CLI through the shell, capturing stdout; stderr is discarded.
CliResult cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + AUTOMODE_CLI_PATH + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("automode_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
        std::ofstream(dir_ / "run.json") << R"({"seed": 4, "hyperparams": {"n_rounds": 10, "max_depth": 3},
                                                "paths": {"dataset": "data.jsonl", "model": "router.json"}})";
        ASSERT_EQ(cli("synth -n 500 -o " + path("data.jsonl") + " --seed 2").code, 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }
    static std::string config() { return "-c " + path("run.json"); }

    static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("train --no-such-flag").code, 2);
    EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, MissingInputsExitTwo) {
    EXPECT_EQ(cli("train -d " + path("missing.jsonl") + " -m " + path("m.json")).code, 2);
    EXPECT_EQ(cli("evaluate -m " + path("missing.json") + " -d " + path("data.jsonl")).code, 2);
    EXPECT_EQ(cli("train", "AUTOMODE_CONFIG=" + path("nope.json")).code, 2);
    std::ofstream(path("broken.json")) << "{not json";
    EXPECT_EQ(cli("train -c " + path("broken.json")).code, 2);
}

TEST_F(Cli, TrainRouteEvaluateImportance) {
    ASSERT_EQ(cli("train " + config() + " --out-dir " + path("train_out")).code, 0);
    ASSERT_TRUE(fs::exists(path("router.json")));
    EXPECT_NO_THROW(automode::load_router(path("router.json")));

    const CliResult routed = cli("route " + config() + " -o -");
    ASSERT_EQ(routed.code, 0);
    std::istringstream in(routed.out);
    EXPECT_FALSE(automode::read_decisions(in).empty());

    const CliResult eval = cli("evaluate " + config() + " --rescoring pivot-vs-selected --out-dir " + path("eval_out"));
    ASSERT_EQ(eval.code, 0);
    EXPECT_NE(eval.out.find("+ QE rescoring"), std::string::npos);
    EXPECT_NE(eval.out.find("Oracle"), std::string::npos);

    const CliResult imp = cli("importance " + config() + " --out-dir " + path("imp_out"));
    ASSERT_EQ(imp.code, 0);
    EXPECT_NE(imp.out.find("Feature groups"), std::string::npos);

    EXPECT_EQ(cli("add-system " + config() + " -s C -o " + path("dup.json")).code, 2);
    EXPECT_EQ(cli("evaluate " + config() + " --rescoring sometimes").code, 2);
}

TEST_F(Cli, EnvironmentConfigAndOverrides) {
    const std::string env = "AUTOMODE_CONFIG=" + path("run.json");
    EXPECT_EQ(cli("train --seed 9 --pivot A -m " + path("pivot_a.json"), env).code, 0);
    EXPECT_EQ(automode::load_router(path("pivot_a.json")).pivot_id(), "A");
    EXPECT_EQ(cli("train --pivot Z -m " + path("pivot_z.json"), env).code, 2);
}

TEST_F(Cli, FeaturesFromWav) {
    std::vector<double> tone(1600);
    for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = (i / 8) % 2 == 0 ? 0.5 : -0.5;
    const auto bytes = automode::encode_wav_pcm16(tone, 16000);
    std::ofstream(path("tone.wav"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                            static_cast<std::streamsize>(bytes.size()));
    const CliResult r = cli("features " + path("tone.wav"));
    ASSERT_EQ(r.code, 0);
    const auto j = automode::json::parse(r.out);
    EXPECT_NE(r.out.find("zero_crossing_rate"), std::string::npos);
    EXPECT_FALSE(j.empty());

    std::ofstream(path("junk.wav")) << "not a wav file at all";
    EXPECT_EQ(cli("features " + path("junk.wav")).code, 2);
}
