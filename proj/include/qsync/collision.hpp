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

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsync/qops.hpp"
#include "qsync/series.hpp"

namespace qsync {

/// Qutrit ancilla levels, in basis order.
enum class Qutrit : int { g = 0, e = 1, r = 2 };

/// State of one ancilla: either cos(theta)|g> + sin(theta) e^{i phi}|e>, or
/// an explicit 3x3 density matrix.
class AncillaSpec {
public:
    static AncillaSpec pure(double theta, double phi, std::string label = "custom");
    static AncillaSpec mixed(const DensityMatrix& eta, std::string label = "custom");

    static AncillaSpec phase_I();    // theta = pi/4, phi = pi
    static AncillaSpec phase_II();   // theta = 0
    static AncillaSpec phase_III();  // theta = pi/4, phi = 0
    /// "I", "II" or "III"; throws ValidationError otherwise.
    static AncillaSpec preset(std::string_view name);

    bool is_pure() const { return pure_; }
    double theta() const;
    double phi() const;
    const DensityMatrix& eta() const { return eta_; }
    const std::string& label() const { return label_; }

private:
    AncillaSpec(bool pure, double theta, double phi, DensityMatrix eta, std::string label);
    bool pure_;
    double theta_;
    double phi_;
    DensityMatrix eta_;
    std::string label_;
};

struct QuenchSegment {
    long start_n;
    AncillaSpec ancilla;
};

/// Piecewise-constant ancilla preparation. Collision k (0-based, producing
/// rho_{k+1} from rho_k) uses the last segment whose start_n <= k.
class QuenchSchedule {
public:
    explicit QuenchSchedule(std::vector<QuenchSegment> segments);
    static QuenchSchedule constant(const AncillaSpec& ancilla);

    const std::vector<QuenchSegment>& segments() const { return segments_; }
    std::size_t segment_index(long k) const;
    const AncillaSpec& active(long k) const { return segments_[segment_index(k)].ancilla; }
    /// Label for the record of rho_n: the phase of the collision that
    /// produced it, or of the first segment when n = 0.
    const std::string& record_label(long n) const;

private:
    std::vector<QuenchSegment> segments_;
};

struct NoiseSpec {
    double xi_bar = 0.0;
    std::uint64_t seed = 0;
    bool axis_x = true;
    bool axis_y = true;
    /// When set, the noise term is also added to the interaction generator.
    bool during_interaction = false;

    void validate() const;
};

/// One draw of the noise amplitudes for a collision, order (x1, y1, x2, y2).
struct NoiseSample {
    std::array<double, 4> xi{};
    /// sum_j (xi^x_j sigma^x_j + xi^y_j sigma^y_j) on the two-qubit space.
    Operator hamiltonian() const;
};

/// Deterministic in (spec.seed, n, stream). Each component is
/// xi_bar * (2u - 1) with u = unit_interval(hash_words(seed, {n, stream, c}))
/// for component index c; disabled axes are zeroed.
NoiseSample sample_noise(const NoiseSpec& spec, long n, std::uint64_t stream = 0);

struct CollisionConfig {
    double omega_tau = 0.01;
    double g_sq_tau = 1.0;
    double tau = 0.01;
    long n_collisions = 1;
    DensityMatrix initial_state = DensityMatrix::maximally_mixed(4);
    QuenchSchedule schedule = QuenchSchedule::constant(AncillaSpec::phase_I());
    std::optional<NoiseSpec> noise;

    double omega() const { return omega_tau / tau; }
    double g() const;
    /// Effective dissipation rate g^2 tau.
    double gamma() const { return g_sq_tau; }
    void validate() const;
};

/// omega (sigma^z_1 + sigma^z_2).
Operator system_hamiltonian(double omega);

/// g (sigma^-_1 |r><g| + sigma^-_2 |r><e| + h.c.) on qubit1 x qubit2 x qutrit.
Operator build_interaction_hamiltonian(double g);

/// Holds the precomputed propagators for one configuration.
class CollisionEngine {
public:
    explicit CollisionEngine(const CollisionConfig& cfg);

    /// tr_E[U (rho x eta) U^dag] with U = U_I U_S.
    DensityMatrix step(const DensityMatrix& rho, const AncillaSpec& ancilla,
                       const std::optional<NoiseSample>& noise) const;

private:
    double tau_;
    bool noisy_;
    bool noise_in_interaction_;
    Operator h_s_;
    Operator h_i_;
    Operator u_s_;
    Operator u_i_;
};

/// Single collision; throws ValidationError if `noise_draw` presence does
/// not match cfg.noise.
DensityMatrix collision_step(const DensityMatrix& rho, const AncillaSpec& ancilla, const CollisionConfig& cfg,
                             const std::optional<NoiseSample>& noise_draw);

struct NamedObservable {
    std::string name;
    Operator op;
};

/// sx1, sy1, sz1, sx2, sy2, sz2 on the two-qubit space.
std::vector<NamedObservable> standard_observables();

using CollisionVisitor = std::function<void(long n, const DensityMatrix& rho, const std::string& phase)>;

/// Runs cfg.n_collisions collisions and calls `visit` for rho_0 .. rho_N.
void propagate(const CollisionConfig& cfg, const CollisionVisitor& visit);

/// n_collisions + 1 records with t = n tau.
ObservableSeries run_sequence(const CollisionConfig& cfg, const std::vector<NamedObservable>& observables);

}  // namespace qsync
