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

// Scenario files: INI text with flat sections.
//
//   [scenario]   name, backend, seed (default 0)
//   [physics]    omega_tau, g_sq_tau, tau (default omega_tau), n_collisions,
//                initial_state, schedule
//   [ancilla:X]  theta + phi, or eta (9 reals, row-major) + optional eta_imag
//   [noise]      xi_bar, axes (default xy), during_interaction (default false)
//   [metrics]    window (default 140), compute (default all),
//                transition_threshold (default 0.9)
//   [sse]        dt, trajectories (default 1), renormalize (default true),
//                threads (default 0 = hardware)
//   [circuit]    refresh (default reset), shots, p1q, p2q,
//                amplitude_damping, dephasing, qubit_budget
//   [emission]   gamma
//   [sweep]      parameter, values, runs (default 1)
//   [output]     directory (default "."), gnuplot (default false)
//
// Every key is checked: unknown sections or keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsync/circuit.hpp"
#include "qsync/collision.hpp"

namespace qsync {

enum class Backend { qcm, lindblad, lindblad_reduced, qutrit_emission, sse, circuit_ideal, circuit_noisy };

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend b);

struct NamedAncilla {
    std::string name;
    AncillaSpec spec;
};

struct ScheduleEntry {
    long start_n = 0;
    std::string ancilla;  // preset I/II/III or a [ancilla:X] name
};

struct MetricsSettings {
    long window = 140;
    bool pearson = true;
    bool concurrence = true;
    bool mutual_info = true;
    bool purity = true;
    double transition_threshold = 0.9;
};

struct SseSettings {
    std::optional<double> dt;
    long trajectories = 1;
    bool renormalize = true;
    unsigned threads = 0;
};

struct CircuitSettings {
    RefreshKind refresh = RefreshKind::reset;
    std::optional<long> shots;
    NoiseChannelSpec channels{};
    std::optional<int> qubit_budget;
};

struct NoiseSettings {
    double xi_bar = 0.0;
    std::string axes = "xy";
    bool during_interaction = false;
};

struct SweepSettings {
    std::optional<std::string> parameter;
    std::vector<double> values;
    long runs = 1;
};

/// Parameters accepted by [sweep] parameter.
const std::vector<std::string>& sweepable_parameters();

struct Scenario {
    std::string name;
    Backend backend = Backend::qcm;
    std::uint64_t seed = 0;

    double omega_tau = 0.0;
    double g_sq_tau = 0.0;
    double tau = 0.0;
    long n_collisions = 0;
    /// Source text of initial_state, kept for the provenance echo.
    std::string initial_state_text;
    DensityMatrix initial_state = DensityMatrix::maximally_mixed(4);
    std::vector<ScheduleEntry> schedule;
    std::vector<NamedAncilla> ancillas;

    std::optional<NoiseSettings> noise;
    MetricsSettings metrics;
    SseSettings sse;
    CircuitSettings circuit;
    std::optional<double> emission_gamma;
    std::optional<SweepSettings> sweep;

    std::string output_directory = ".";
    bool gnuplot = false;

    /// Backend-independent checks plus the requirements of `backend`.
    /// Throws ValidationError naming the offending field.
    void validate() const;
    /// Checks only the requirements of `b` (used by compare mode).
    void validate_for(Backend b) const;

    AncillaSpec resolve_ancilla(std::string_view name) const;
    QuenchSchedule quench_schedule() const;
    /// CollisionConfig for a run with the given seed (drives noise draws).
    CollisionConfig collision_config(std::uint64_t run_seed) const;

    /// Canonical INI text with every default filled in. Parsing it yields
    /// an equivalent Scenario.
    std::string to_ini() const;
};

Scenario parse_scenario_text(std::string_view text, std::string_view origin = "<text>");
Scenario parse_scenario(const std::filesystem::path& path);

/// Parses a list of complex amplitudes ("0.6+0.2i, -0.1i, 1, 0") or a basis
/// label (uu, ud, du, dd) or "mixed".
DensityMatrix parse_initial_state(std::string_view text);

struct RunDescriptor {
    std::size_t value_index = 0;
    std::size_t run_index = 0;
    std::optional<double> value;
    std::uint64_t seed = 0;
    Scenario scenario;  // parameter applied, sweep cleared
    std::string tag;    // file stem, e.g. name_v02_r13
};

/// Sets a sweepable parameter on a copy of `s`.
Scenario with_parameter(const Scenario& s, std::string_view parameter, double value);

/// One descriptor per (value, run) with seed derive_seed(seed, value_index,
/// run_index). A scenario without [sweep] yields a single descriptor that
/// keeps the master seed.
std::vector<RunDescriptor> expand_sweep(const Scenario& s);

}  // namespace qsync
