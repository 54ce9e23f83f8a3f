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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qsync/error.hpp"
#include "qsync/runner.hpp"
#include "qsync/scenario.hpp"

using namespace qsync;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[scenario]
name = minimal
backend = qcm

[physics]
omega_tau = 0.02
g_sq_tau = 2
n_collisions = 50
initial_state = 0.8579+0.2631i, 0.2392+0.1113i, 0.2366+0.1341i, 0.1678+0.1844i
schedule = I@0
)";

std::string with_lines(const std::string& base, const std::string& extra) { return base + "\n" + extra + "\n"; }

// Message of the ValidationError thrown while parsing `text`, or "" if none.
std::string parse_error(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("qsync_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

ObservableSeries pearson_series(const std::vector<double>& p) {
    ObservableSeries s({"pearson"});
    for (std::size_t n = 0; n < p.size(); ++n) s.append(static_cast<long>(n), static_cast<double>(n), {p[n]});
    return s;
}

double column_max_diff(const ObservableSeries& a, const ObservableSeries& b, const std::string& label) {
    const auto ca = a.column(label), cb = b.column(label);
    double worst = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) worst = std::max(worst, std::abs(ca[i] - cb[i]));
    return worst;
}

}  // namespace

TEST(ScenarioParse, MinimalFileGetsDefaults) {
    const Scenario s = parse_scenario_text(kMinimal);
    EXPECT_EQ(s.name, "minimal");
    EXPECT_EQ(s.backend, Backend::qcm);
    EXPECT_EQ(s.seed, 0u);
    EXPECT_EQ(s.metrics.window, 140);
    EXPECT_DOUBLE_EQ(s.metrics.transition_threshold, 0.9);
    EXPECT_TRUE(s.metrics.pearson && s.metrics.concurrence && s.metrics.mutual_info && s.metrics.purity);
    EXPECT_DOUBLE_EQ(s.tau, 0.02);
    EXPECT_FALSE(s.noise.has_value());
    EXPECT_FALSE(s.sweep.has_value());
    EXPECT_EQ(s.output_directory, ".");
    EXPECT_NEAR(s.initial_state.matrix().trace().real(), 1.0, 1e-12);
}

TEST(ScenarioParse, InitialStateForms) {
    const DensityMatrix ud = parse_initial_state("ud");
    EXPECT_NEAR(std::abs(ud.matrix()(1, 1) - 1.0), 0.0, 1e-15);
    const DensityMatrix mixed = parse_initial_state("mixed");
    EXPECT_NEAR(mixed.matrix()(2, 2).real(), 0.25, 1e-15);
    const DensityMatrix sup = parse_initial_state("1, 0, 1, 0");
    EXPECT_NEAR(sup.matrix()(0, 2).real(), 0.5, 1e-12);
    const DensityMatrix im = parse_initial_state("0, 1i, 0, 0");
    EXPECT_NEAR(im.matrix()(1, 1).real(), 1.0, 1e-15);
    EXPECT_THROW(parse_initial_state("1, 0, 0"), ValidationError);
    EXPECT_THROW(parse_initial_state("0, 0, 0, 0"), ValidationError);
    EXPECT_THROW(parse_initial_state("up"), ValidationError);
}

TEST(ScenarioParse, ScheduleAndCustomAncilla) {
    const Scenario s = parse_scenario_text(R"(
[scenario]
name = sched
backend = qcm
[physics]
omega_tau = 0.01
g_sq_tau = 1
n_collisions = 30
initial_state = dd
schedule = I@0, tilt@10, III@20
[ancilla:tilt]
theta = 1.0
phi = 0.5
)");
    ASSERT_EQ(s.schedule.size(), 3u);
    EXPECT_EQ(s.schedule[1].ancilla, "tilt");
    EXPECT_EQ(s.schedule[2].start_n, 20);
    const QuenchSchedule q = s.quench_schedule();
    EXPECT_EQ(q.active(9).label(), "I");
    EXPECT_EQ(q.active(10).label(), "tilt");
    EXPECT_EQ(q.active(25).label(), "III");
}

TEST(ScenarioParse, ErrorsNameTheField) {
    EXPECT_NE(parse_error(with_lines(kMinimal, "[bogus]\nx = 1")).find("bogus: unknown section"), std::string::npos);
    EXPECT_NE(parse_error(with_lines(kMinimal, "[metrics]\nwindo = 10")).find("metrics.windo"), std::string::npos);
    EXPECT_NE(parse_error(with_lines(kMinimal, "[metrics]\nwindow = ten")).find("metrics.window"), std::string::npos);
    EXPECT_NE(parse_error(with_lines(kMinimal, "[metrics]\nwindow = 0")).find("metrics.window"), std::string::npos);
    EXPECT_NE(parse_error(with_lines(kMinimal, "[noise]\nxi_bar = -1")).find("noise.xi_bar"), std::string::npos);
    EXPECT_NE(parse_error(with_lines(kMinimal, "[sweep]\nparameter = spin\nvalues = 1")).find("sweep.parameter"),
              std::string::npos);
    std::string no_schedule = kMinimal;
    no_schedule.replace(no_schedule.find("schedule = I@0"), 14, "schedule = IV@0");
    EXPECT_FALSE(parse_error(no_schedule).empty());
    std::string bad_backend = kMinimal;
    bad_backend.replace(bad_backend.find("backend = qcm"), 13, "backend = magic");
    EXPECT_NE(parse_error(bad_backend).find("scenario.backend"), std::string::npos);
}

TEST(ScenarioParse, SseRequiresDt) {
    std::string text = kMinimal;
    text.replace(text.find("backend = qcm"), 13, "backend = sse");
    const std::string err = parse_error(text);
    EXPECT_NE(err.find("missing dt"), std::string::npos) << err;
    EXPECT_NE(err.find("sse.dt"), std::string::npos) << err;
}

TEST(ScenarioParse, BackendRequirements) {
    std::string noisy = kMinimal;
    noisy.replace(noisy.find("backend = qcm"), 13, "backend = circuit-noisy");
    EXPECT_NE(parse_error(noisy).find("missing shots"), std::string::npos);

    std::string emission = kMinimal;
    emission.replace(emission.find("backend = qcm"), 13, "backend = qutrit-emission");
    EXPECT_NE(parse_error(emission).find("missing gamma"), std::string::npos);

    std::string reduced = kMinimal;
    reduced.replace(reduced.find("backend = qcm"), 13, "backend = lindblad-reduced");
    EXPECT_FALSE(parse_error(with_lines(reduced, "[noise]\nxi_bar = 0.1")).empty());
    EXPECT_TRUE(parse_error(reduced).empty());
}

TEST(ScenarioParse, ResolvedTextRoundTrips) {
    const Scenario s = parse_scenario_text(with_lines(
        kMinimal,
        "[ancilla:mix]\neta = 0.5 0.5 0 0.5 0.5 0 0 0 0\n[noise]\nxi_bar = 0.21\n[sweep]\nparameter = xi_bar\n"
        "values = 0.07, 0.21\nruns = 3\n[output]\ndirectory = somewhere\ngnuplot = true"));
    const std::string text = s.to_ini();
    const Scenario again = parse_scenario_text(text);
    EXPECT_EQ(again.to_ini(), text);
    EXPECT_EQ(again.name, s.name);
    ASSERT_TRUE(again.noise.has_value());
    EXPECT_DOUBLE_EQ(again.noise->xi_bar, 0.21);
    ASSERT_TRUE(again.sweep.has_value());
    EXPECT_EQ(again.sweep->runs, 3);
    EXPECT_EQ(again.output_directory, "somewhere");
    EXPECT_TRUE(again.gnuplot);
    EXPECT_LT((again.initial_state.matrix() - s.initial_state.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ScenarioSweep, SeedsAreDistinctAndStable) {
    std::ostringstream values;
    for (int v = 0; v < 10; ++v) values << (v ? ", " : "") << 0.05 * (v + 1);
    const Scenario s = parse_scenario_text(with_lines(
        kMinimal, "[noise]\nxi_bar = 0.1\n[sweep]\nparameter = xi_bar\nvalues = " + values.str() + "\nruns = 20"));
    const auto runs = expand_sweep(s);
    ASSERT_EQ(runs.size(), 200u);
    std::set<std::uint64_t> seeds;
    std::set<std::string> tags;
    for (const auto& r : runs) {
        seeds.insert(r.seed);
        tags.insert(r.tag);
        EXPECT_FALSE(r.scenario.sweep.has_value());
        ASSERT_TRUE(r.value.has_value());
        EXPECT_DOUBLE_EQ(r.scenario.noise->xi_bar, *r.value);
    }
    EXPECT_EQ(seeds.size(), 200u);
    EXPECT_EQ(tags.size(), 200u);
    EXPECT_EQ(runs[0].tag, "minimal_v00_r00");
    EXPECT_EQ(runs[199].tag, "minimal_v09_r19");

    const auto again = expand_sweep(s);
    for (std::size_t i = 0; i < runs.size(); ++i) EXPECT_EQ(runs[i].seed, again[i].seed);
}

TEST(ScenarioSweep, NoSweepKeepsMasterSeed) {
    const Scenario s = parse_scenario_text(kMinimal);
    const auto runs = expand_sweep(s);
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_EQ(runs[0].seed, s.seed);
    EXPECT_EQ(runs[0].tag, "minimal");
}

TEST(ScenarioSweep, ParameterSetter) {
    const Scenario s = parse_scenario_text(kMinimal);
    EXPECT_DOUBLE_EQ(with_parameter(s, "g_sq_tau", 3.0).g_sq_tau, 3.0);
    EXPECT_DOUBLE_EQ(with_parameter(s, "omega_tau", 0.05).omega_tau, 0.05);
    EXPECT_THROW(with_parameter(s, "colour", 1.0), ValidationError);
}

TEST(Runner, TrailingPearsonWindow) {
    std::vector<double> a, b;
    for (int n = 0; n < 40; ++n) {
        a.push_back(std::sin(0.5 * n));
        b.push_back(n < 20 ? std::sin(0.5 * n) : -std::sin(0.5 * n));
    }
    const auto p = trailing_pearson(a, b, 5);
    for (int n = 0; n < 5; ++n) EXPECT_TRUE(std::isnan(p[n]));
    EXPECT_NEAR(p[10], 1.0, 1e-12);
    EXPECT_NEAR(p[39], -1.0, 1e-12);
    // Window [15, 20] straddles the sign flip.
    EXPECT_GT(p[20], -1.0);
    EXPECT_LT(p[20], 1.0);
    const std::vector<double> flat(40, 0.3);
    for (double v : trailing_pearson(a, flat, 5)) EXPECT_TRUE(std::isnan(v));
}

TEST(Runner, DetectTransitionExamples) {
    std::vector<double> monotone;
    for (int n = 0; n < 200; ++n) monotone.push_back(-1.0 + 2.0 * n / 199.0);
    EXPECT_FALSE(detect_transition(pearson_series(monotone), 0.9).has_value());

    std::vector<double> step(200, 0.95);
    for (int n = 100; n < 200; ++n) step[n] = -0.95;
    const auto tr = detect_transition(pearson_series(step), 0.9);
    ASSERT_TRUE(tr.has_value());
    EXPECT_EQ(*tr, 100);

    std::vector<double> gaps(10, std::numeric_limits<double>::quiet_NaN());
    gaps[3] = 0.99;
    gaps[7] = -0.99;
    EXPECT_EQ(detect_transition(pearson_series(gaps), 0.9).value_or(-1), 7);

    std::vector<double> only_negative(50, -0.99);
    EXPECT_FALSE(detect_transition(pearson_series(only_negative), 0.9).has_value());
}

TEST(Runner, SimulateShapeAndMetricColumns) {
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[metrics]\nwindow = 10\ncompute = pearson, purity"));
    const ObservableSeries out = simulate(s);
    ASSERT_EQ(out.size(), 51u);
    EXPECT_EQ(out.labels(), run_columns());
    const auto purity = out.column("purity");
    const auto conc = out.column("concurrence");
    const auto pear = out.column("pearson");
    EXPECT_NEAR(purity[0], 1.0, 1e-12);
    EXPECT_TRUE(std::isnan(conc[5]));
    EXPECT_TRUE(std::isnan(pear[9]));
    EXPECT_FALSE(std::isnan(pear[10]));
    for (std::size_t n = 0; n < out.size(); ++n) {
        EXPECT_EQ(out.records()[n].n, static_cast<long>(n));
        EXPECT_NEAR(out.records()[n].t, 0.02 * n, 1e-15);
        EXPECT_EQ(out.records()[n].phase, "I");
    }
}

TEST(Runner, LindbladAgreesWithCollisionsForMixedAncilla) {
    std::string text = with_lines(kMinimal, "[ancilla:mix]\neta = 0.5 0.5 0 0.5 0.5 0 0 0 0\n[metrics]\ncompute = none");
    text.replace(text.find("schedule = I@0"), 14, "schedule = mix@0");
    const Scenario s = parse_scenario_text(text);
    const ObservableSeries qcm = simulate(s, Backend::qcm);
    const ObservableSeries me = simulate(s, Backend::lindblad);
    for (const char* c : {"sx1", "sy1", "sz1", "sx2", "sy2", "sz2"}) EXPECT_LT(column_max_diff(qcm, me, c), 0.02) << c;
}

TEST(Runner, NoisyLindbladTracksNoisyCollisions) {
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[noise]\nxi_bar = 0.5\n[metrics]\ncompute = none"));
    const ObservableSeries qcm = simulate(s, Backend::qcm);
    const ObservableSeries me = simulate(s, Backend::lindblad);
    EXPECT_LT(column_max_diff(qcm, me, "sx1"), 0.02);
    EXPECT_LT(column_max_diff(qcm, me, "sz2"), 0.02);
}

TEST(Runner, SeedReproducibility) {
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[noise]\nxi_bar = 0.3"));
    Scenario other = s;
    other.seed = 99;
    const auto a = simulate(s), b = simulate(s), c = simulate(other);
    EXPECT_EQ(column_max_diff(a, b, "sx1"), 0.0);
    EXPECT_GT(column_max_diff(a, c, "sx1"), 0.0);
}

TEST(Runner, CsvIsByteIdenticalAcrossRuns) {
    TempDir d1, d2;
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[noise]\nxi_bar = 0.3\n[metrics]\nwindow = 10"));
    run_scenario(s, {d1.path(), 0});
    run_scenario(s, {d2.path(), 0});
    const std::string a = read_file(d1.path() / "minimal.csv");
    const std::string b = read_file(d2.path() / "minimal.csv");
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.rfind("# qsync ", 0), 0u);
    EXPECT_NE(a.find("n,t,sx1,sy1,sz1,sx2,sy2,sz2,pearson,concurrence,mutual_info,purity,phase\n"), std::string::npos);
    EXPECT_NE(a.find("# xi_bar = 0.3"), std::string::npos);
    EXPECT_TRUE(fs::exists(d1.path() / "minimal.json"));
    EXPECT_FALSE(fs::exists(d1.path() / "minimal.gp"));
}

TEST(Runner, SweepResultsIndependentOfThreads) {
    TempDir serial, parallel;
    const Scenario s = parse_scenario_text(with_lines(
        kMinimal, "[noise]\nxi_bar = 0.2\n[metrics]\nwindow = 10\n[sweep]\nparameter = xi_bar\nvalues = 0.1, 0.4\n"
                  "runs = 3\n[output]\ngnuplot = true"));
    const SweepSummary a = run_sweep(s, {serial.path(), 1});
    const SweepSummary b = run_sweep(s, {parallel.path(), 4});
    ASSERT_EQ(a.runs.size(), 6u);
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        EXPECT_EQ(a.runs[i].tag, b.runs[i].tag);
        EXPECT_EQ(a.runs[i].seed, b.runs[i].seed);
        EXPECT_EQ(read_file(a.runs[i].csv_path), read_file(b.runs[i].csv_path));
    }
    EXPECT_EQ(read_file(a.grid_path), read_file(b.grid_path));
    EXPECT_TRUE(fs::exists(serial.path() / "minimal_grid.gp"));
    EXPECT_TRUE(fs::exists(serial.path() / "minimal_sweep.json"));
    ASSERT_EQ(a.values.size(), 2u);
    EXPECT_DOUBLE_EQ(a.values[1], 0.4);
    EXPECT_EQ(a.mean_pearson[0].size(), 51u);
    for (double f : a.run_transition_fraction) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
    }
}

TEST(Runner, CompareReportsDeviations) {
    TempDir dir;
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[metrics]\ncompute = purity"));
    const CompareSummary c = run_compare(s, {Backend::qcm, Backend::lindblad}, {dir.path(), 0});
    ASSERT_EQ(c.backends.size(), 2u);
    EXPECT_EQ(c.backends[1], "lindblad");
    ASSERT_TRUE(c.max_deviation.count("sx1"));
    EXPECT_LT(c.max_deviation.at("sx1"), 0.05);
    EXPECT_FALSE(c.max_deviation.count("pearson"));
    EXPECT_TRUE(fs::exists(dir.path() / "minimal_qcm.csv"));
    EXPECT_TRUE(fs::exists(dir.path() / "minimal_lindblad.csv"));
    EXPECT_TRUE(fs::exists(dir.path() / "minimal_compare.json"));
    EXPECT_THROW(run_compare(s, {Backend::qcm}, {dir.path(), 0}), ValidationError);
}

TEST(Runner, OutputDirectoryPrecedence) {
    TempDir env_dir, cli_dir;
    const Scenario s = parse_scenario_text(with_lines(kMinimal, "[output]\ndirectory = from_file"));
    ::unsetenv("QSYNC_OUTPUT_DIR");
    EXPECT_EQ(resolve_output_dir(s, std::nullopt), fs::path("from_file"));
    ::setenv("QSYNC_OUTPUT_DIR", env_dir.path().c_str(), 1);
    EXPECT_EQ(resolve_output_dir(s, std::nullopt), env_dir.path());
    EXPECT_EQ(resolve_output_dir(s, cli_dir.path()), cli_dir.path());
    run_scenario(s);
    EXPECT_TRUE(fs::exists(env_dir.path() / "minimal.csv"));
    ::unsetenv("QSYNC_OUTPUT_DIR");
}

TEST(Runner, AtomicWriteLeavesNoTemporaries) {
    TempDir dir;
    const fs::path target = dir.path() / "nested" / "file.txt";
    write_file_atomic(target, "first\n");
    write_file_atomic(target, "second\n");
    EXPECT_EQ(read_file(target), "second\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++entries;
    EXPECT_EQ(entries, 1u);
    EXPECT_THROW(write_file_atomic(target / "under_a_file", "x"), std::exception);
}

TEST(Runner, EveryBackendProducesFullTable) {
    const std::string base = R"(
[scenario]
name = smoke
backend = qcm
seed = 3
[physics]
omega_tau = 0.3
g_sq_tau = 1
n_collisions = 6
initial_state = 1, 0, 1, 0
schedule = III@0
[metrics]
window = 3
[sse]
dt = 0.01
trajectories = 4
[circuit]
shots = 200
[emission]
gamma = 20
)";
    const Scenario s = parse_scenario_text(base);
    for (Backend b : {Backend::qcm, Backend::lindblad, Backend::lindblad_reduced, Backend::qutrit_emission,
                      Backend::sse, Backend::circuit_ideal, Backend::circuit_noisy}) {
        const ObservableSeries out = simulate(s, b);
        ASSERT_EQ(out.size(), 7u) << backend_name(b);
        for (const auto& r : out.records()) {
            EXPECT_FALSE(std::isnan(r.values[0])) << backend_name(b);
            EXPECT_LE(std::abs(r.values[0]), 1.0 + 1e-9) << backend_name(b);
        }
        const bool circuit = b == Backend::circuit_ideal || b == Backend::circuit_noisy;
        EXPECT_EQ(std::isnan(out.column("purity")[2]), circuit) << backend_name(b);
    }
}

TEST(Runner, SseRejectsQuenches) {
    std::string text = with_lines(kMinimal, "[sse]\ndt = 0.001");
    text.replace(text.find("backend = qcm"), 13, "backend = sse");
    EXPECT_NO_THROW(parse_scenario_text(text));
    std::string quenched = text;
    quenched.replace(quenched.find("schedule = I@0"), 14, "schedule = I@0, III@10");
    EXPECT_THROW(parse_scenario_text(quenched), ValidationError);
}
