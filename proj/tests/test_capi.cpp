// Copyright 2026 The qsync Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exercises libqsync through its C header only, plus the CLI binary.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "qsync/qsync.h"

namespace fs = std::filesystem;

namespace {

const char* kScenario = R"(
[scenario]
name = capi
backend = qcm
seed = 5

[physics]
omega_tau = 0.02
g_sq_tau = 2
n_collisions = 40
initial_state = 1, 0, 1, 0
schedule = I@0, III@20

[metrics]
window = 8
)";

fs::path scratch(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / ("qsync_capi_" + std::to_string(::getpid())) / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string summary(const qsync_result* r) {
    size_t len = 0;
    EXPECT_EQ(qsync_result_summary_json(r, nullptr, 0, &len), QSYNC_OK);
    std::string s(len + 1, '\0');
    EXPECT_EQ(qsync_result_summary_json(r, s.data(), s.size(), &len), QSYNC_OK);
    s.resize(len);
    return s;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QSYNC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

class CApi : public ::testing::Test {
protected:
    void SetUp() override { ASSERT_EQ(qsync_scenario_parse(kScenario, &scenario_), QSYNC_OK) << qsync_last_error(); }
    void TearDown() override { qsync_scenario_free(scenario_); }
    qsync_scenario* scenario_ = nullptr;
};

}  // namespace

TEST_F(CApi, VersionAndScenarioAccessors) {
    EXPECT_GT(std::string(qsync_version()).size(), 0u);
    char buf[64];
    size_t len = 0;
    ASSERT_EQ(qsync_scenario_name(scenario_, buf, sizeof buf, &len), QSYNC_OK);
    EXPECT_STREQ(buf, "capi");
    EXPECT_EQ(len, 4u);
    ASSERT_EQ(qsync_scenario_backend(scenario_, buf, sizeof buf, nullptr), QSYNC_OK);
    EXPECT_STREQ(buf, "qcm");
    int has = -1;
    ASSERT_EQ(qsync_scenario_has_sweep(scenario_, &has), QSYNC_OK);
    EXPECT_EQ(has, 0);
    size_t count = 0;
    ASSERT_EQ(qsync_scenario_run_count(scenario_, &count), QSYNC_OK);
    EXPECT_EQ(count, 1u);
}

TEST_F(CApi, TruncatedBufferReportsFullLength) {
    char small[4];
    size_t len = 0;
    ASSERT_EQ(qsync_scenario_resolved(scenario_, small, sizeof small, &len), QSYNC_OK);
    EXPECT_GT(len, 100u);
    EXPECT_EQ(small[3], '\0');
    EXPECT_EQ(std::string(small), "[sc");
}

TEST_F(CApi, SetBackend) {
    EXPECT_EQ(qsync_scenario_set_backend(scenario_, "lindblad"), QSYNC_OK);
    EXPECT_EQ(qsync_scenario_set_backend(scenario_, "warp"), QSYNC_ERR_ARGUMENT);
    EXPECT_NE(std::string(qsync_last_error()).find("warp"), std::string::npos);
    // SSE needs [sse] dt, so switching is a validation failure and leaves the handle unchanged.
    EXPECT_EQ(qsync_scenario_set_backend(scenario_, "sse"), QSYNC_ERR_VALIDATION);
    char buf[32];
    qsync_scenario_backend(scenario_, buf, sizeof buf, nullptr);
    EXPECT_STREQ(buf, "lindblad");
}

TEST_F(CApi, SimulateExposesTable) {
    qsync_result* res = nullptr;
    ASSERT_EQ(qsync_simulate(scenario_, &res), QSYNC_OK) << qsync_last_error();
    size_t rows = 0, cols = 0;
    ASSERT_EQ(qsync_result_shape(res, &rows, &cols), QSYNC_OK);
    EXPECT_EQ(rows, 41u);
    EXPECT_EQ(cols, 10u);
    char name[32];
    ASSERT_EQ(qsync_result_column_name(res, 6, name, sizeof name, nullptr), QSYNC_OK);
    EXPECT_STREQ(name, "pearson");
    double v = 0.0;
    ASSERT_EQ(qsync_result_value(res, 0, 9, &v), QSYNC_OK);
    EXPECT_NEAR(v, 1.0, 1e-12);
    ASSERT_EQ(qsync_result_value(res, 3, 6, &v), QSYNC_OK);
    EXPECT_TRUE(std::isnan(v));
    long n = 0;
    double t = 0.0;
    ASSERT_EQ(qsync_result_collision(res, 40, &n, &t), QSYNC_OK);
    EXPECT_EQ(n, 40);
    EXPECT_NEAR(t, 0.8, 1e-12);
    int found = -1;
    ASSERT_EQ(qsync_result_transition(res, &n, &found), QSYNC_OK);
    EXPECT_TRUE(found == 0 || found == 1);

    EXPECT_EQ(qsync_result_value(res, 41, 0, &v), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_result_value(res, 0, 10, &v), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_result_column_name(res, 99, name, sizeof name, nullptr), QSYNC_ERR_ARGUMENT);
    qsync_result_free(res);
}

TEST_F(CApi, RunWritesFiles) {
    const fs::path dir = scratch("run");
    qsync_result* res = nullptr;
    ASSERT_EQ(qsync_run(scenario_, dir.c_str(), &res), QSYNC_OK) << qsync_last_error();
    EXPECT_NE(summary(res).find("\"tag\": \"capi\""), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "capi.csv"));
    EXPECT_TRUE(fs::exists(dir / "capi.json"));
    qsync_result_free(res);
}

TEST_F(CApi, CompareAndSweep) {
    const fs::path dir = scratch("compare");
    qsync_result* res = nullptr;
    ASSERT_EQ(qsync_compare(scenario_, "qcm, lindblad", dir.c_str(), &res), QSYNC_OK) << qsync_last_error();
    EXPECT_NE(summary(res).find("max_deviation"), std::string::npos);
    qsync_result_free(res);
    res = nullptr;
    EXPECT_EQ(qsync_compare(scenario_, "qcm", dir.c_str(), &res), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_compare(scenario_, "qcm,teleport", dir.c_str(), &res), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(res, nullptr);

    qsync_scenario* sw = nullptr;
    const std::string text = std::string(kScenario) + "[noise]\nxi_bar = 0.1\n[sweep]\nparameter = xi_bar\n"
                                                      "values = 0.1, 0.2\nruns = 2\n";
    ASSERT_EQ(qsync_scenario_parse(text.c_str(), &sw), QSYNC_OK) << qsync_last_error();
    size_t count = 0;
    qsync_scenario_run_count(sw, &count);
    EXPECT_EQ(count, 4u);
    ASSERT_EQ(qsync_sweep(sw, dir.c_str(), 2, &res), QSYNC_OK) << qsync_last_error();
    EXPECT_TRUE(fs::exists(dir / "capi_grid.csv"));
    EXPECT_TRUE(fs::exists(dir / "capi_v01_r01.csv"));
    size_t rows = 1, cols = 1;
    qsync_result_shape(res, &rows, &cols);
    EXPECT_EQ(rows, 0u);
    qsync_result_free(res);
    qsync_scenario_free(sw);
}

TEST(CApiErrors, StatusCodes) {
    qsync_scenario* s = nullptr;
    EXPECT_EQ(qsync_scenario_parse("[scenario]\nname = x\n", &s), QSYNC_ERR_VALIDATION);
    EXPECT_EQ(s, nullptr);
    EXPECT_NE(std::string(qsync_last_error()).size(), 0u);
    EXPECT_EQ(qsync_scenario_parse(nullptr, &s), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_scenario_parse(kScenario, nullptr), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_scenario_load("/nonexistent/file.ini", &s), QSYNC_ERR_VALIDATION);
    qsync_result* r = nullptr;
    EXPECT_EQ(qsync_simulate(nullptr, &r), QSYNC_ERR_ARGUMENT);
    EXPECT_EQ(qsync_result_summary_json(nullptr, nullptr, 0, nullptr), QSYNC_ERR_ARGUMENT);
    qsync_scenario_free(nullptr);
    qsync_result_free(nullptr);
}

TEST(CApiErrors, RuntimeFailureOnUnwritableOutput) {
    qsync_scenario* s = nullptr;
    ASSERT_EQ(qsync_scenario_parse(kScenario, &s), QSYNC_OK);
    const fs::path dir = scratch("blocked");
    write_text(dir / "file", "x");
    qsync_result* r = nullptr;
    EXPECT_EQ(qsync_run(s, (dir / "file").c_str(), &r), QSYNC_ERR_RUNTIME);
    EXPECT_EQ(r, nullptr);
    qsync_scenario_free(s);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    const fs::path good = dir / "good.ini";
    const fs::path bad = dir / "bad.ini";
    write_text(good, kScenario);
    write_text(bad, std::string(kScenario) + "[metrics2]\nx = 1\n");
    write_text(dir / "blocker", "x");
    const std::string out = "-o " + (dir / "out").string();

    EXPECT_EQ(run_cli("validate " + good.string()), 0);
    EXPECT_EQ(run_cli(out + " run " + good.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "capi.csv"));
    EXPECT_EQ(run_cli("run " + good.string() + " " + out), 0);
    EXPECT_EQ(run_cli(out + " compare " + good.string() + " --backends qcm,lindblad"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "capi_compare.json"));

    EXPECT_EQ(run_cli("validate " + bad.string()), 1);
    EXPECT_EQ(run_cli("run " + (dir / "missing.ini").string()), 1);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("frobnicate"), 1);
    EXPECT_EQ(run_cli("sweep " + good.string()), 1);
    EXPECT_EQ(run_cli(out + " compare " + good.string() + " --backends qcm"), 1);

    EXPECT_EQ(run_cli("-o " + (dir / "blocker").string() + " run " + good.string()), 2);
}
