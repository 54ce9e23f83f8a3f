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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsync/scenario.hpp"
#include "qsync/series.hpp"

namespace qsync {

/// Column order of every run table (n, t and phase are added by the CSV
/// writer).
const std::vector<std::string>& run_columns();

/// Simulates one scenario with `backend` and returns the run table. Rows are
/// collision indices 0..n_collisions at t = n tau; quantities a backend
/// cannot provide (or that were not requested) are NaN. The pearson column
/// at row n covers the trailing window [n - window, n].
ObservableSeries simulate(const Scenario& s, Backend backend);
inline ObservableSeries simulate(const Scenario& s) { return simulate(s, s.backend); }

/// Smallest n whose pearson value is <= -threshold after an earlier row with
/// pearson >= +threshold. NaN rows are skipped.
std::optional<long> detect_transition(const ObservableSeries& series, double threshold);

/// Last non-NaN pearson value.
std::optional<double> final_pearson(const ObservableSeries& series);

/// Mean pearson over rows n >= from (NaN rows skipped).
std::optional<double> mean_pearson_after(const ObservableSeries& series, long from);

/// Pearson of a and b over the trailing window [n - window, n] for every n;
/// NaN where the window is incomplete or a variance vanishes.
std::vector<double> trailing_pearson(const std::vector<double>& a, const std::vector<double>& b, long window);

/// Output directory: `override_dir` if set, else $QSYNC_OUTPUT_DIR, else
/// the scenario's [output] directory.
std::filesystem::path resolve_output_dir(const Scenario& s, const std::optional<std::filesystem::path>& override_dir);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// CSV text with a `#` provenance block (version and resolved scenario).
std::string csv_with_provenance(const ObservableSeries& series, const Scenario& s);

struct RunSummary {
    std::string tag;
    std::string backend;
    std::uint64_t seed = 0;
    std::optional<double> value;
    std::optional<double> final_pearson;
    std::optional<long> transition_n;
    double wall_time_s = 0.0;
    std::filesystem::path csv_path;
};

struct SweepSummary {
    std::string name;
    std::optional<std::string> parameter;
    std::vector<RunSummary> runs;
    std::vector<double> values;
    /// Per value: mean of the per-run pearson at each n (NaN where
    /// undefined), with its transition and post-transition mean.
    std::vector<std::vector<double>> mean_pearson;
    std::vector<std::optional<long>> transition_n;
    std::vector<std::optional<double>> post_transition_mean;
    /// Per value: pearson of the run-averaged <sigma^x_1>, <sigma^x_2>
    /// (the noise-averaged state), with its transition and post-transition
    /// mean.
    std::vector<std::vector<double>> ensemble_pearson;
    std::vector<std::optional<long>> ensemble_transition_n;
    std::vector<std::optional<double>> ensemble_post_transition_mean;
    /// Per value: fraction of runs whose own series shows a transition.
    std::vector<double> run_transition_fraction;
    std::filesystem::path grid_path;
    std::filesystem::path summary_path;
};

struct CompareSummary {
    std::string name;
    std::vector<std::string> backends;
    /// Max |a - b| per column over rows where both values are defined.
    std::map<std::string, double> max_deviation;
    std::vector<std::filesystem::path> csv_paths;
    std::filesystem::path summary_path;
};

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;
    /// Parallel runs in a sweep; 0 uses the hardware concurrency.
    unsigned threads = 0;
};

/// Runs the scenario once with its master seed, ignoring any [sweep]
/// section: writes <name>.csv, <name>.json and, if requested, <name>.gp.
RunSummary run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Every (value, run) of the sweep, one CSV per run, a grid CSV
/// (n, value, mean_pearson, ensemble_pearson) and a JSON summary. Results do not depend on
/// the thread count.
SweepSummary run_sweep(const Scenario& s, const RunOptions& opts = {});

/// Runs the scenario on each backend and writes <name>_<backend>.csv plus
/// <name>_compare.json.
CompareSummary run_compare(const Scenario& s, const std::vector<Backend>& backends, const RunOptions& opts = {});

std::string summary_json(const RunSummary& r);
std::string summary_json(const SweepSummary& s);
std::string summary_json(const CompareSummary& c);

}  // namespace qsync
