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

#include "qsync/collision.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qsync/rng.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// AncillaSpec

AncillaSpec::AncillaSpec(bool pure, double theta, double phi, DensityMatrix eta, std::string label)
    : pure_(pure), theta_(theta), phi_(phi), eta_(std::move(eta)), label_(std::move(label)) {}

AncillaSpec AncillaSpec::pure(double theta, double phi, std::string label) {
    if (!std::isfinite(theta) || !std::isfinite(phi)) throw ValidationError("AncillaSpec: theta and phi must be finite");
    Ket psi = Ket::Zero(3);
    psi(0) = std::cos(theta);
    psi(1) = std::sin(theta) * std::polar(1.0, phi);
    return AncillaSpec(true, theta, phi, DensityMatrix::trusted(psi * psi.adjoint()), std::move(label));
}

AncillaSpec AncillaSpec::mixed(const DensityMatrix& eta, std::string label) {
    if (eta.dim() != 3) throw DimensionError("AncillaSpec: ancilla density matrix must be 3x3");
    return AncillaSpec(false, 0.0, 0.0, eta, std::move(label));
}

AncillaSpec AncillaSpec::phase_I() { return pure(std::numbers::pi / 4, std::numbers::pi, "I"); }
AncillaSpec AncillaSpec::phase_II() { return pure(0.0, 0.0, "II"); }
AncillaSpec AncillaSpec::phase_III() { return pure(std::numbers::pi / 4, 0.0, "III"); }

AncillaSpec AncillaSpec::preset(std::string_view name) {
    if (name == "I") return phase_I();
    if (name == "II") return phase_II();
    if (name == "III") return phase_III();
    throw ValidationError("unknown ancilla preset '" + std::string(name) + "' (expected I, II or III)");
}

double AncillaSpec::theta() const {
    if (!pure_) throw ValidationError("AncillaSpec: theta is undefined for an explicit density matrix");
    return theta_;
}

double AncillaSpec::phi() const {
    if (!pure_) throw ValidationError("AncillaSpec: phi is undefined for an explicit density matrix");
    return phi_;
}

// ---------------------------------------------------------------------------
// QuenchSchedule

QuenchSchedule::QuenchSchedule(std::vector<QuenchSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw ValidationError("schedule: at least one segment is required");
    if (segments_.front().start_n != 0) throw ValidationError("schedule: first segment must start at collision 0");
    for (std::size_t i = 1; i < segments_.size(); ++i)
        if (segments_[i].start_n <= segments_[i - 1].start_n)
            throw ValidationError("schedule: segment start indices must be strictly increasing");
}

QuenchSchedule QuenchSchedule::constant(const AncillaSpec& ancilla) {
    return QuenchSchedule({QuenchSegment{0, ancilla}});
}

std::size_t QuenchSchedule::segment_index(long k) const {
    std::size_t idx = 0;
    for (std::size_t i = 1; i < segments_.size() && segments_[i].start_n <= k; ++i) idx = i;
    return idx;
}

const std::string& QuenchSchedule::record_label(long n) const {
    return active(n > 0 ? n - 1 : 0).label();
}

// ---------------------------------------------------------------------------
// Noise

void NoiseSpec::validate() const {
    if (!std::isfinite(xi_bar) || xi_bar < 0.0) throw ValidationError("noise: xi_bar must be finite and >= 0");
}

Operator NoiseSample::hamiltonian() const {
    const Operator i2 = ops::identity(2);
    return xi[0] * kron(ops::sigma_x(), i2) + xi[1] * kron(ops::sigma_y(), i2) +
           xi[2] * kron(i2, ops::sigma_x()) + xi[3] * kron(i2, ops::sigma_y());
}

NoiseSample sample_noise(const NoiseSpec& spec, long n, std::uint64_t stream) {
    NoiseSample s;
    for (std::uint64_t c = 0; c < 4; ++c) {
        const double u = unit_interval(hash_words(spec.seed, {static_cast<std::uint64_t>(n), stream, c}));
        const bool enabled = (c % 2 == 0) ? spec.axis_x : spec.axis_y;
        s.xi[c] = enabled ? spec.xi_bar * (2.0 * u - 1.0) : 0.0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Config and Hamiltonians

double CollisionConfig::g() const { return std::sqrt(g_sq_tau / tau); }

void CollisionConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
    if (n_collisions < 1) throw ValidationError("n_collisions must be >= 1");
    if (!std::isfinite(omega_tau)) throw ValidationError("omega_tau must be finite");
    if (!(g_sq_tau >= 0.0) || !std::isfinite(g_sq_tau)) throw ValidationError("g_sq_tau must be finite and >= 0");
    if (initial_state.dim() != 4) throw DimensionError("initial_state must be a two-qubit state");
    if (noise) noise->validate();
}

Operator system_hamiltonian(double omega) {
    const Operator i2 = ops::identity(2);
    return omega * (kron(ops::sigma_z(), i2) + kron(i2, ops::sigma_z()));
}

Operator build_interaction_hamiltonian(double g) {
    const Operator i2 = ops::identity(2);
    Operator r_g = Operator::Zero(3, 3), r_e = Operator::Zero(3, 3);
    r_g(2, 0) = 1.0;
    r_e(2, 1) = 1.0;
    const Operator a = kron(kron(ops::sigma_minus(), i2), r_g) + kron(kron(i2, ops::sigma_minus()), r_e);
    return g * (a + a.adjoint());
}

// ---------------------------------------------------------------------------
// Engine

CollisionEngine::CollisionEngine(const CollisionConfig& cfg)
    : tau_((cfg.validate(), cfg.tau)),
      noisy_(cfg.noise.has_value()),
      noise_in_interaction_(cfg.noise && cfg.noise->during_interaction),
      h_s_(system_hamiltonian(cfg.omega())),
      h_i_(build_interaction_hamiltonian(cfg.g())) {
    u_s_ = matexp(h_s_, cplx(0.0, -tau_));
    u_i_ = matexp(h_i_, cplx(0.0, -tau_));
}

DensityMatrix CollisionEngine::step(const DensityMatrix& rho, const AncillaSpec& ancilla,
                                    const std::optional<NoiseSample>& noise) const {
    if (rho.dim() != 4) throw DimensionError("collision step: system state must be 4-dimensional");
    if (noise.has_value() != noisy_)
        throw ValidationError(noisy_ ? "collision step: noise sample required by config"
                                     : "collision step: noise sample given but config has no noise");
    Operator u_s = u_s_;
    Operator u_i = u_i_;
    if (noise) {
        const Operator hn = noise->hamiltonian();
        u_s = matexp(h_s_ + hn, cplx(0.0, -tau_));
        if (noise_in_interaction_) u_i = matexp(h_i_ + kron(hn, ops::identity(3)), cplx(0.0, -tau_));
    }
    const Operator u = u_i * kron(u_s, ops::identity(3));
    const Operator joint = u * kron(rho.matrix(), ancilla.eta().matrix()) * u.adjoint();
    static constexpr std::array<int, 2> dims{4, 3};
    static constexpr std::array<int, 1> keep{0};
    return DensityMatrix::trusted(partial_trace(joint, dims, keep));
}

DensityMatrix collision_step(const DensityMatrix& rho, const AncillaSpec& ancilla, const CollisionConfig& cfg,
                             const std::optional<NoiseSample>& noise_draw) {
    return CollisionEngine(cfg).step(rho, ancilla, noise_draw);
}

std::vector<NamedObservable> standard_observables() {
    const Operator i2 = ops::identity(2);
    return {
        {"sx1", kron(ops::sigma_x(), i2)}, {"sy1", kron(ops::sigma_y(), i2)}, {"sz1", kron(ops::sigma_z(), i2)},
        {"sx2", kron(i2, ops::sigma_x())}, {"sy2", kron(i2, ops::sigma_y())}, {"sz2", kron(i2, ops::sigma_z())},
    };
}

void propagate(const CollisionConfig& cfg, const CollisionVisitor& visit) {
    const CollisionEngine engine(cfg);
    DensityMatrix rho = cfg.initial_state;
    visit(0, rho, cfg.schedule.record_label(0));
    for (long k = 0; k < cfg.n_collisions; ++k) {
        std::optional<NoiseSample> draw;
        if (cfg.noise) draw = sample_noise(*cfg.noise, k);
        rho = engine.step(rho, cfg.schedule.active(k), draw);
        visit(k + 1, rho, cfg.schedule.record_label(k + 1));
    }
}

ObservableSeries run_sequence(const CollisionConfig& cfg, const std::vector<NamedObservable>& observables) {
    std::vector<std::string> labels;
    for (const auto& o : observables) {
        if (o.op.rows() != 4 || o.op.cols() != 4) throw DimensionError("run_sequence: observable " + o.name + " is not 4x4");
        labels.push_back(o.name);
    }
    ObservableSeries series(labels);
    propagate(cfg, [&](long n, const DensityMatrix& rho, const std::string& phase) {
        std::vector<double> v;
        v.reserve(observables.size());
        for (const auto& o : observables) v.push_back(expectation(rho, o.op).real());
        series.append(n, static_cast<double>(n) * cfg.tau, std::move(v), phase);
    });
    return series;
}

}  // namespace qsync
