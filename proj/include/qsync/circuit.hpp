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

// Gate-level collision circuits.
//
// Circuit registers use the computational basis with |0> = spin down and
// |1> = spin up; qubit 0 is the most significant bit of a basis index. The
// physical two-qubit ordering (uu, ud, du, dd) used elsewhere is therefore
// the bitwise complement of the circuit index. A qutrit ancilla occupies two
// qubits (a0, a1) with g -> |00>, e -> |01>, r -> |10>.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsync/collision.hpp"
#include "qsync/qops.hpp"
#include "qsync/series.hpp"

namespace qsync {

enum class GateKind { U3, H, X, CNOT, SWAP, RESET, MEASURE };

std::string_view gate_name(GateKind kind);

struct Gate {
    GateKind kind;
    std::vector<int> targets;
    std::vector<double> params;
    /// Noise channels are applied after gates carrying this tag.
    bool noisy = true;

    static Gate u3(int q, double theta, double phi, double lambda);
    static Gate h(int q);
    static Gate x(int q);
    static Gate cnot(int control, int target);
    static Gate swap(int a, int b);
    static Gate reset(int q);
    static Gate measure(int q);

    bool is_unitary() const { return kind != GateKind::RESET && kind != GateKind::MEASURE; }
    /// Local matrix on `targets` (first target most significant). Throws for
    /// RESET and MEASURE.
    Operator matrix() const;
};

/// Minimum register: two system qubits plus one encoded ancilla.
inline constexpr int kMinCircuitQubits = 4;
inline constexpr int kMaxCircuitQubits = 24;

class CircuitProgram {
public:
    explicit CircuitProgram(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    const std::vector<Gate>& gates() const { return gates_; }
    std::size_t size() const { return gates_.size(); }

    CircuitProgram& append(Gate gate);
    CircuitProgram& append(const CircuitProgram& other);

    /// Targets in range and distinct, parameter counts, and no gate on a
    /// qubit after it has been measured. Throws ValidationError.
    void validate() const;
    bool has_reset() const;
    /// Qubits with a MEASURE gate, ascending; all qubits when there is none.
    std::vector<int> measured_qubits() const;

    /// Dense 2^n unitary of a program made only of unitary gates.
    Operator unitary() const;

    /// Line format: `QUBITS n` header, then `GATE q0 [q1] [params...]
    /// [noiseless]` per line; `#` starts a comment.
    std::string to_text() const;
    static CircuitProgram from_text(std::string_view text);

private:
    int n_qubits_;
    std::vector<Gate> gates_;
};

/// Euler angles with U = exp(i alpha) U3(theta, phi, lambda).
struct U3Angles {
    double theta = 0.0;
    double phi = 0.0;
    double lambda = 0.0;
    double alpha = 0.0;
};

U3Angles u3_from_unitary(const Operator& u);

// Encoding of qutrit levels onto a two-qubit index.
int encode_ancilla(Qutrit level);
Qutrit decode_ancilla(int index);

/// Physical two-qubit operator or ket (uu, ud, du, dd) in circuit order.
Operator system_to_circuit(const Operator& op);
Ket system_to_circuit(const Ket& psi);
/// 12-dim joint (system x qutrit) operator on the 16-dim circuit register
/// (s0, s1, a0, a1). Entries touching the unused ancilla code are zero.
Operator joint_to_circuit(const Operator& op12);

struct CircuitLayout {
    int s0 = 0;
    int s1 = 1;
    int a0 = 2;
    int a1 = 3;
    int n_qubits = kMinCircuitQubits;
};

/// Prepares the pure ancilla state on (a0, a1) from |00>. Throws
/// ValidationError for mixed ancillas.
CircuitProgram ancilla_preparation(const AncillaSpec& ancilla, const CircuitLayout& layout = {});

/// Prepares a pure physical two-qubit state on (s0, s1) from |00>.
CircuitProgram system_preparation(const PureState& psi, const CircuitLayout& layout = {});

/// exp(-i angle (sigma^-_j x |r><a| + h.c.)) for j = 1 (a = g) or j = 2
/// (a = e), with angle = g t.
CircuitProgram interaction_circuit(int term, double angle, const CircuitLayout& layout = {});

/// Free evolution followed by U_I1(tau/2) U_I2(tau) U_I1(tau/2) for
/// collision n (0-based); includes the noise draw for n when configured.
CircuitProgram collision_unitary_circuit(const CollisionConfig& cfg, long n, const CircuitLayout& layout = {});

/// Ancilla preparation, collision_unitary_circuit and a RESET of (a0, a1).
CircuitProgram build_collision_circuit(const CollisionConfig& cfg, long n, const CircuitLayout& layout = {});

enum class RefreshKind { reset, swap_train };

RefreshKind parse_refresh_kind(std::string_view name);
std::string_view refresh_kind_name(RefreshKind kind);
int required_qubits(RefreshKind kind, long n_collisions);

using ProgramBuilder = std::function<CircuitProgram(const CollisionConfig& cfg, long n_collisions)>;

/// Builder producing system preparation plus n_collisions collisions with
/// the given ancilla refresh scheme. With a qubit budget, building a program
/// that needs more qubits throws ValidationError.
ProgramBuilder refresh_strategy(RefreshKind kind, std::optional<int> qubit_budget = std::nullopt);

CircuitProgram build_program(const CollisionConfig& cfg, long n_collisions, RefreshKind kind = RefreshKind::reset,
                             std::optional<int> qubit_budget = std::nullopt);

/// Appends H and MEASURE on the two system qubits.
void append_x_measurement(CircuitProgram& prog, const CircuitLayout& layout = {});

using Counts = std::map<std::string, long>;

std::string counts_to_json(const Counts& counts);
Counts counts_from_json(std::string_view text);

/// <Z> of the bit at `position` of the count keys, (N0 - N1) / N.
double z_expectation(const Counts& counts, std::size_t position);

/// One run from |0...0>. RESET measures the qubit (outcome drawn from a
/// counter RNG keyed by `seed`) and flips it back to |0>; MEASURE is left
/// for the caller.
Ket simulate_statevector(const CircuitProgram& prog, std::uint64_t seed = 0);

/// `shots` independent runs, each sampled in the computational basis on
/// measured_qubits(). Bitstrings list those qubits in ascending order.
Counts simulate_statevector(const CircuitProgram& prog, long shots, std::uint64_t seed);

struct NoiseChannelSpec {
    double p1q = 1e-3;               // depolarizing probability after 1q gates
    double p2q = 1e-2;               // depolarizing probability after 2q gates
    double amplitude_damping = 0.0;  // per gate target
    double dephasing = 0.0;          // phase-flip probability per gate target

    static NoiseChannelSpec none() { return {0.0, 0.0, 0.0, 0.0}; }
    bool is_trivial() const;
    void validate() const;
};

std::vector<Operator> depolarizing_kraus(double p, int n_qubits);
std::vector<Operator> amplitude_damping_kraus(double gamma);
std::vector<Operator> dephasing_kraus(double p);
double kraus_completeness_error(const std::vector<Operator>& kraus);

/// Deterministic density-matrix run: RESET is the measure-and-flip channel,
/// MEASURE is ignored, and noise (when given) follows every tagged gate.
DensityMatrix simulate_density(const CircuitProgram& prog, const NoiseChannelSpec* noise = nullptr);

/// Born-rule samples of measured_qubits() on a density matrix.
Counts sample_counts(const DensityMatrix& rho, const std::vector<int>& qubits, long shots, std::uint64_t seed);

Counts simulate_noisy(const CircuitProgram& prog, const NoiseChannelSpec& noise, long shots, std::uint64_t seed);

struct CircuitTraceOptions {
    RefreshKind refresh = RefreshKind::reset;
    /// 0 gives exact expectations; otherwise estimates from this many shots.
    long shots = 0;
    std::uint64_t seed = 0;
    std::optional<NoiseChannelSpec> noise;
};

/// <sigma^x_1>, <sigma^x_2> after each collision n = 0..n_collisions, each
/// read out by H + Z measurement of a fresh run. Columns sx1, sx2 and their
/// shot standard errors se_sx1, se_sx2.
ObservableSeries circuit_sigma_x_trace(const CollisionConfig& cfg, const CircuitTraceOptions& options);

}  // namespace qsync
