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

// Command-line front end. Exit status: 0 success, 1 validation or usage
// error, 2 runtime error.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "qsync/qsync.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code(qsync_status st) {
    switch (st) {
        case QSYNC_OK: return 0;
        case QSYNC_ERR_RUNTIME: return kExitRuntime;
        default: return kExitValidation;
    }
}

int report(qsync_status st, const std::string& context) {
    if (st != QSYNC_OK) std::cerr << "qsync: " << context << ": " << qsync_last_error() << "\n";
    return exit_code(st);
}

using ScenarioPtr = std::unique_ptr<qsync_scenario, decltype(&qsync_scenario_free)>;
using ResultPtr = std::unique_ptr<qsync_result, decltype(&qsync_result_free)>;

template <class Getter, class Handle>
std::string fetch_string(Getter get, const Handle* h) {
    size_t len = 0;
    if (get(h, nullptr, 0, &len) != QSYNC_OK) return {};
    std::string s(len + 1, '\0');
    get(h, s.data(), s.size(), &len);
    s.resize(len);
    return s;
}

int load(const std::string& path, ScenarioPtr& out) {
    qsync_scenario* raw = nullptr;
    const qsync_status st = qsync_scenario_load(path.c_str(), &raw);
    out.reset(raw);
    return report(st, "invalid scenario");
}

const char* dir_or_null(const std::string& d) { return d.empty() ? nullptr : d.c_str(); }

int print_result(qsync_status st, qsync_result* raw, const std::string& verb) {
    ResultPtr res(raw, qsync_result_free);
    if (st != QSYNC_OK) return report(st, verb + " failed");
    std::cout << fetch_string(qsync_result_summary_json, res.get());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsync: two-qubit synchronization simulator driven by scenario files"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(qsync_version()));

    std::string output_dir;
    app.add_option("-o,--output-dir", output_dir, "Output directory (overrides $QSYNC_OUTPUT_DIR and [output])");

    std::string file;
    auto* run = app.add_subcommand("run", "Run a scenario once and write CSV and JSON summary");
    run->add_option("file", file, "Scenario file")->required();

    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run every value and repeat of the scenario's [sweep] section");
    sweep->add_option("file", file, "Scenario file")->required();
    sweep->add_option("-j,--threads", threads, "Parallel runs (0 = hardware concurrency)");

    std::string backends;
    auto* compare = app.add_subcommand("compare", "Run the scenario on several backends and report deviations");
    compare->add_option("file", file, "Scenario file")->required();
    compare->add_option("--backends", backends, "Comma-separated backend list, e.g. qcm,lindblad")->required();

    auto* validate = app.add_subcommand("validate", "Parse a scenario and print its resolved form");
    validate->add_option("file", file, "Scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    ScenarioPtr scenario(nullptr, qsync_scenario_free);
    if (const int rc = load(file, scenario)) return rc;

    if (*validate) {
        std::cout << fetch_string(qsync_scenario_resolved, scenario.get());
        return 0;
    }
    qsync_result* raw = nullptr;
    if (*run) {
        const qsync_status st = qsync_run(scenario.get(), dir_or_null(output_dir), &raw);
        return print_result(st, raw, "run");
    }
    if (*sweep) {
        int has_sweep = 0;
        qsync_scenario_has_sweep(scenario.get(), &has_sweep);
        if (!has_sweep) {
            std::cerr << "qsync: sweep: scenario has no [sweep] section\n";
            return kExitValidation;
        }
        const qsync_status st = qsync_sweep(scenario.get(), dir_or_null(output_dir), threads, &raw);
        return print_result(st, raw, "sweep");
    }
    const qsync_status st = qsync_compare(scenario.get(), backends.c_str(), dir_or_null(output_dir), &raw);
    return print_result(st, raw, "compare");
}
