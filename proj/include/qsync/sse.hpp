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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qsync/collision.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/rng.hpp"

namespace qsync {

// Homodyne stochastic Schrödinger equation, Euler-Maruyama:
//   d|psi> = [ -i H_eff dt
//              + sum_k rate_k (X_k/2)(o_k - X_k/4) dt
//              + sum_k sqrt(rate_k) (o_k - X_k/2) dW_k ] |psi>
// with H_eff = H - (i/2) sum_k rate_k o_k^dag o_k and X_k = <o_k + o_k^dag>.

struct SseConfig {
    LindbladModel model;
    double dt = 1e-3;
    long n_steps = 1000;
    std::uint64_t seed = 0;
    bool renormalize = true;
    /// Keep every k-th state in Trajectory::states and ensemble records.
    long record_every = 1;
    /// Piecewise-constant sigma^{x,y} noise on a two-qubit model, redrawn
    /// every `noise_period` time units from sample_noise(noise, k).
    std::optional<NoiseSpec> noise;
    double noise_period = 0.0;

    /// Throws ValidationError; enforces dt * max_rate <= 1e-2.
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;        // recorded times, n_steps / record_every + 1
    std::vector<PureState> states;    // normalized state at each recorded time
    std::vector<double> norms;        // integrator norm (1 when renormalizing)
    std::vector<std::vector<double>> x_records;  // <X_k> before every step, [step][channel]
};

/// One Euler-Maruyama step without renormalization, with explicit Wiener
/// increments (one per jump, in model order). `extra_h` is added to the
/// Hamiltonian. Throws NumericalError on non-finite or exploding amplitudes.
Ket sse_step_raw(const Ket& psi, const LindbladModel& model, double dt, std::span<const double> dw,
                 const Operator* extra_h = nullptr);

/// Renormalized step with explicit increments.
PureState sse_step(const PureState& psi, const LindbladModel& model, double dt, std::span<const double> dw,
                   const Operator* extra_h = nullptr);

/// Renormalized step drawing dW_k ~ Normal(0, dt) from `rng`.
PureState sse_step(const PureState& psi, const LindbladModel& model, double dt, CounterRng& rng);

/// Trajectory with seed cfg.seed (stream 0). Deterministic in the config.
Trajectory run_trajectory(const SseConfig& cfg, const PureState& psi0);

struct EnsembleResult {
    ObservableSeries mean;
    ObservableSeries standard_error;   // zeros when undefined
    bool standard_error_defined = false;
    std::vector<DensityMatrix> mean_states;  // only if requested
};

/// Averages n_traj trajectories. Trajectory j uses seed
/// derive_seed(cfg.seed, 0, j). Reduction is done in fixed blocks so the
/// result is bit-identical for any thread count (0 = hardware threads).
EnsembleResult ensemble_average(const SseConfig& cfg, const PureState& psi0, long n_traj,
                                const std::vector<NamedObservable>& observables, bool keep_states = false,
                                unsigned threads = 0);

}  // namespace qsync
