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

#include "qsync/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "qsync/rng.hpp"

namespace qsync {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;

int param_count(GateKind k) { return k == GateKind::U3 ? 3 : 0; }
int target_count(GateKind k) { return (k == GateKind::CNOT || k == GateKind::SWAP) ? 2 : 1; }

std::size_t bit_of(int q, int n) { return std::size_t{1} << (n - 1 - q); }

// Applies `m` to the amplitudes in `amps` (a 2^n register) on `targets`.
void apply_matrix(cplx* amps, const Operator& m, const std::vector<int>& targets, int n) {
    const int k = static_cast<int>(targets.size());
    const std::size_t dim = std::size_t{1} << n, local = std::size_t{1} << k;
    std::size_t tmask = 0;
    std::vector<std::size_t> offs(local, 0);
    for (int t = 0; t < k; ++t) tmask |= bit_of(targets[t], n);
    for (std::size_t l = 0; l < local; ++l)
        for (int t = 0; t < k; ++t)
            if (l & (std::size_t{1} << (k - 1 - t))) offs[l] |= bit_of(targets[t], n);
    std::array<cplx, 4> in{}, out{};
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & tmask) continue;
        for (std::size_t l = 0; l < local; ++l) in[l] = amps[base | offs[l]];
        for (std::size_t r = 0; r < local; ++r) {
            cplx acc = 0.0;
            for (std::size_t c = 0; c < local; ++c) acc += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * in[c];
            out[r] = acc;
        }
        for (std::size_t l = 0; l < local; ++l) amps[base | offs[l]] = out[l];
    }
}

void apply_left(Operator& mat, const Operator& m, const std::vector<int>& targets, int n) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) apply_matrix(mat.col(c).data(), m, targets, n);
}

// rho -> m rho m^dag
void apply_conjugation(Operator& rho, const Operator& m, const std::vector<int>& targets, int n) {
    apply_left(rho, m, targets, n);
    Operator t = rho.adjoint();
    apply_left(t, m, targets, n);
    rho = t.adjoint();
}

void apply_channel(Operator& rho, const std::vector<Operator>& kraus, const std::vector<int>& targets, int n) {
    Operator acc = Operator::Zero(rho.rows(), rho.cols());
    for (const auto& k : kraus) {
        Operator term = rho;
        apply_conjugation(term, k, targets, n);
        acc += term;
    }
    rho = std::move(acc);
}

const std::vector<Operator>& reset_kraus() {
    static const std::vector<Operator> k = [] {
        Operator k0 = Operator::Zero(2, 2), k1 = Operator::Zero(2, 2);
        k0(0, 0) = 1.0;
        k1(0, 1) = 1.0;
        return std::vector<Operator>{k0, k1};
    }();
    return k;
}

Operator x_matrix() { return ops::sigma_x(); }

Operator pauli(int i) {
    switch (i) {
        case 0: return ops::identity(2);
        case 1: return ops::sigma_x();
        case 2: return ops::sigma_y();
        default: return ops::sigma_z();
    }
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

std::string format_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_register(const CircuitLayout& layout) {
    const std::array<int, 4> qs{layout.s0, layout.s1, layout.a0, layout.a1};
    std::set<int> seen;
    for (int q : qs) {
        if (q < 0 || q >= layout.n_qubits) throw ValidationError("circuit layout: qubit index out of range");
        if (!seen.insert(q).second) throw ValidationError("circuit layout: qubits must be distinct");
    }
}

void check_circuit_config(const CollisionConfig& cfg) {
    cfg.validate();
    if (cfg.noise && cfg.noise->during_interaction && cfg.noise->xi_bar > 0.0)
        throw ValidationError("circuit backend: noise inside the interaction is not supported");
}

// Single-qubit free propagator exp(-i tau (omega sz + xi_x sx + xi_y sy)),
// physical basis.
Operator free_propagator(double omega, double tau, double xi_x, double xi_y) {
    const Operator h = omega * ops::sigma_z() + xi_x * ops::sigma_x() + xi_y * ops::sigma_y();
    return matexp(h, cplx(0.0, -tau));
}

Gate u3_gate(int q, const Operator& u) {
    const U3Angles a = u3_from_unitary(u);
    return Gate::u3(q, a.theta, a.phi, a.lambda);
}

PureState pure_initial_state(const DensityMatrix& rho) {
    const EigenSystem es = herm_eig(rho.matrix());
    if (es.values(0) < 1.0 - 1e-9)
        throw ValidationError("circuit backend: initial state must be pure (purity " +
                              std::to_string(rho.matrix().squaredNorm()) + ")");
    return PureState(es.vectors.col(0));
}

}  // namespace

std::string_view gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::U3: return "U3";
        case GateKind::H: return "H";
        case GateKind::X: return "X";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SWAP: return "SWAP";
        case GateKind::RESET: return "RESET";
        case GateKind::MEASURE: return "MEASURE";
    }
    return "?";
}

Gate Gate::u3(int q, double theta, double phi, double lambda) { return {GateKind::U3, {q}, {theta, phi, lambda}}; }
Gate Gate::h(int q) { return {GateKind::H, {q}, {}}; }
Gate Gate::x(int q) { return {GateKind::X, {q}, {}}; }
Gate Gate::cnot(int control, int target) { return {GateKind::CNOT, {control, target}, {}}; }
Gate Gate::swap(int a, int b) { return {GateKind::SWAP, {a, b}, {}}; }
Gate Gate::reset(int q) { return {GateKind::RESET, {q}, {}, false}; }
Gate Gate::measure(int q) { return {GateKind::MEASURE, {q}, {}, false}; }

Operator Gate::matrix() const {
    switch (kind) {
        case GateKind::U3: {
            const double c = std::cos(params[0] / 2), s = std::sin(params[0] / 2);
            Operator m(2, 2);
            m << c, -s * std::polar(1.0, params[2]), s * std::polar(1.0, params[1]),
                c * std::polar(1.0, params[1] + params[2]);
            return m;
        }
        case GateKind::H: {
            Operator m(2, 2);
            m << kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2;
            return m;
        }
        case GateKind::X: return x_matrix();
        case GateKind::CNOT: {
            Operator m = Operator::Zero(4, 4);
            m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
            return m;
        }
        case GateKind::SWAP: {
            Operator m = Operator::Zero(4, 4);
            m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
            return m;
        }
        default: throw ValidationError("Gate::matrix: " + std::string(gate_name(kind)) + " is not unitary");
    }
}

CircuitProgram::CircuitProgram(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < kMinCircuitQubits || n_qubits > kMaxCircuitQubits)
        throw ValidationError("CircuitProgram: n_qubits must be in [4, 24], got " + std::to_string(n_qubits));
}

CircuitProgram& CircuitProgram::append(Gate gate) {
    gates_.push_back(std::move(gate));
    return *this;
}

CircuitProgram& CircuitProgram::append(const CircuitProgram& other) {
    if (other.n_qubits_ > n_qubits_) throw ValidationError("CircuitProgram::append: register too small");
    gates_.insert(gates_.end(), other.gates_.begin(), other.gates_.end());
    return *this;
}

void CircuitProgram::validate() const {
    std::vector<bool> measured(static_cast<std::size_t>(n_qubits_), false);
    for (std::size_t i = 0; i < gates_.size(); ++i) {
        const Gate& g = gates_[i];
        const std::string where = "gate " + std::to_string(i) + " (" + std::string(gate_name(g.kind)) + ")";
        if (static_cast<int>(g.targets.size()) != target_count(g.kind))
            throw ValidationError(where + ": wrong number of targets");
        if (static_cast<int>(g.params.size()) != param_count(g.kind))
            throw ValidationError(where + ": wrong number of parameters");
        for (double p : g.params)
            if (!std::isfinite(p)) throw ValidationError(where + ": non-finite parameter");
        for (int q : g.targets) {
            if (q < 0 || q >= n_qubits_) throw ValidationError(where + ": target out of range");
            if (measured[static_cast<std::size_t>(q)]) throw ValidationError(where + ": qubit already measured");
        }
        if (g.targets.size() == 2 && g.targets[0] == g.targets[1])
            throw ValidationError(where + ": targets must differ");
        if (g.kind == GateKind::MEASURE) measured[static_cast<std::size_t>(g.targets[0])] = true;
    }
}

bool CircuitProgram::has_reset() const {
    return std::any_of(gates_.begin(), gates_.end(), [](const Gate& g) { return g.kind == GateKind::RESET; });
}

std::vector<int> CircuitProgram::measured_qubits() const {
    std::set<int> qs;
    for (const auto& g : gates_)
        if (g.kind == GateKind::MEASURE) qs.insert(g.targets[0]);
    if (qs.empty())
        for (int q = 0; q < n_qubits_; ++q) qs.insert(q);
    return {qs.begin(), qs.end()};
}

Operator CircuitProgram::unitary() const {
    validate();
    if (n_qubits_ > 12) throw ValidationError("CircuitProgram::unitary: register too large for a dense matrix");
    const Eigen::Index d = Eigen::Index{1} << n_qubits_;
    Operator u = Operator::Identity(d, d);
    for (const auto& g : gates_) {
        if (!g.is_unitary()) throw ValidationError("CircuitProgram::unitary: program contains RESET or MEASURE");
        apply_left(u, g.matrix(), g.targets, n_qubits_);
    }
    return u;
}

std::string CircuitProgram::to_text() const {
    std::ostringstream os;
    os << "QUBITS " << n_qubits_ << '\n';
    for (const auto& g : gates_) {
        os << gate_name(g.kind);
        for (int q : g.targets) os << ' ' << q;
        for (double p : g.params) os << ' ' << format_param(p);
        const bool default_tag = g.is_unitary();
        if (g.noisy != default_tag) os << (g.noisy ? " noisy" : " noiseless");
        os << '\n';
    }
    return os.str();
}

CircuitProgram CircuitProgram::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<CircuitProgram> prog;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw ValidationError("circuit text line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (!prog) {
            if (tok.size() != 2 || tok[0] != "QUBITS") fail("expected 'QUBITS n' header");
            try {
                prog.emplace(std::stoi(tok[1]));
            } catch (const std::logic_error&) {
                fail("bad qubit count '" + tok[1] + "'");
            }
            continue;
        }
        static const std::map<std::string, GateKind> kinds{
            {"U3", GateKind::U3},     {"H", GateKind::H},         {"X", GateKind::X},
            {"CNOT", GateKind::CNOT}, {"SWAP", GateKind::SWAP},   {"RESET", GateKind::RESET},
            {"MEASURE", GateKind::MEASURE}};
        const auto it = kinds.find(tok[0]);
        if (it == kinds.end()) fail("unknown gate '" + tok[0] + "'");
        Gate g{it->second, {}, {}, it->second != GateKind::RESET && it->second != GateKind::MEASURE};
        std::size_t expect = 1 + static_cast<std::size_t>(target_count(g.kind) + param_count(g.kind));
        if (tok.size() == expect + 1 && (tok.back() == "noiseless" || tok.back() == "noisy")) {
            g.noisy = tok.back() == "noisy";
            tok.pop_back();
        }
        if (tok.size() != expect) fail("expected " + std::to_string(expect - 1) + " operands for " + tok[0]);
        try {
            std::size_t pos = 1;
            for (int t = 0; t < target_count(g.kind); ++t, ++pos) {
                std::size_t used = 0;
                g.targets.push_back(std::stoi(tok[pos], &used));
                if (used != tok[pos].size()) throw std::invalid_argument(tok[pos]);
            }
            for (int p = 0; p < param_count(g.kind); ++p, ++pos) {
                std::size_t used = 0;
                g.params.push_back(std::stod(tok[pos], &used));
                if (used != tok[pos].size()) throw std::invalid_argument(tok[pos]);
            }
        } catch (const std::logic_error&) {
            fail("malformed operand");
        }
        prog->append(std::move(g));
    }
    if (!prog) throw ValidationError("circuit text: missing 'QUBITS n' header");
    prog->validate();
    return *prog;
}

U3Angles u3_from_unitary(const Operator& u) {
    if (u.rows() != 2 || u.cols() != 2) throw DimensionError("u3_from_unitary: expected a 2x2 matrix");
    if (max_abs(u.adjoint() * u - ops::identity(2)) > 1e-10) throw ValidationError("u3_from_unitary: not unitary");
    U3Angles a;
    const double c = std::abs(u(0, 0)), s = std::abs(u(1, 0));
    a.theta = 2.0 * std::atan2(s, c);
    if (c > 1e-12) {
        a.alpha = std::arg(u(0, 0));
        if (s > 1e-12) {
            a.phi = std::arg(u(1, 0)) - a.alpha;
            a.lambda = std::arg(-u(0, 1)) - a.alpha;
        } else {
            a.phi = 0.0;
            a.lambda = std::arg(u(1, 1)) - a.alpha;
        }
    } else {
        a.alpha = std::arg(u(1, 0));
        a.phi = 0.0;
        a.lambda = std::arg(-u(0, 1)) - a.alpha;
    }
    a.phi = wrap_angle(a.phi);
    a.lambda = wrap_angle(a.lambda);
    return a;
}

int encode_ancilla(Qutrit level) {
    switch (level) {
        case Qutrit::g: return 0;
        case Qutrit::e: return 1;
        case Qutrit::r: return 2;
    }
    throw ValidationError("encode_ancilla: bad level");
}

Qutrit decode_ancilla(int index) {
    switch (index) {
        case 0: return Qutrit::g;
        case 1: return Qutrit::e;
        case 2: return Qutrit::r;
        default: throw ValidationError("decode_ancilla: code " + std::to_string(index) + " is not a qutrit level");
    }
}

Operator system_to_circuit(const Operator& op) {
    if (op.rows() != 4 || op.cols() != 4) throw DimensionError("system_to_circuit: expected a 4x4 operator");
    return op.reverse();
}

Ket system_to_circuit(const Ket& psi) {
    if (psi.size() != 4) throw DimensionError("system_to_circuit: expected a two-qubit ket");
    return psi.reverse();
}

Operator joint_to_circuit(const Operator& op12) {
    if (op12.rows() != 12 || op12.cols() != 12) throw DimensionError("joint_to_circuit: expected a 12x12 operator");
    auto index = [](int i) { return (3 - i / 3) * 4 + encode_ancilla(static_cast<Qutrit>(i % 3)); };
    Operator out = Operator::Zero(16, 16);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) out(index(i), index(j)) = op12(i, j);
    return out;
}

CircuitProgram ancilla_preparation(const AncillaSpec& ancilla, const CircuitLayout& layout) {
    check_register(layout);
    if (!ancilla.is_pure()) throw ValidationError("circuit backend: ancilla '" + ancilla.label() + "' is not pure");
    CircuitProgram p(layout.n_qubits);
    // a0 stays |0>; a1 carries cos(theta)|0> + e^{i phi} sin(theta)|1>.
    p.append(Gate::u3(layout.a1, 2.0 * ancilla.theta(), ancilla.phi(), 0.0));
    return p;
}

CircuitProgram system_preparation(const PureState& psi, const CircuitLayout& layout) {
    check_register(layout);
    if (psi.dim() != 4) throw DimensionError("system_preparation: expected a two-qubit state");
    const Ket v = system_to_circuit(psi.amplitudes());
    Operator c(2, 2);
    c << v(0), v(1), v(2), v(3);
    Eigen::JacobiSVD<Operator> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    CircuitProgram p(layout.n_qubits);
    p.append(Gate::u3(layout.s0, 2.0 * std::atan2(sv(1), sv(0)), 0.0, 0.0));
    p.append(Gate::cnot(layout.s0, layout.s1));
    p.append(u3_gate(layout.s0, svd.matrixU()));
    p.append(u3_gate(layout.s1, svd.matrixV().conjugate()));
    return p;
}

CircuitProgram interaction_circuit(int term, double angle, const CircuitLayout& layout) {
    check_register(layout);
    if (term != 1 && term != 2) throw ValidationError("interaction_circuit: term must be 1 or 2");
    const int s = term == 1 ? layout.s0 : layout.s1;
    const int a0 = layout.a0, a1 = layout.a1;
    CircuitProgram p(layout.n_qubits);
    // Permute the coupled pair onto {|0>, |1>} of s with (a0, a1) = (1, 0).
    auto permute = [&](bool forward) {
        if (term == 1) {
            p.append(Gate::cnot(s, a0));
        } else if (forward) {
            p.append(Gate::cnot(s, a0)).append(Gate::cnot(s, a1));
        } else {
            p.append(Gate::cnot(s, a1)).append(Gate::cnot(s, a0));
        }
    };
    permute(true);
    // Rx(2 angle) on s, conditioned on a0 = 1 and a1 = 0, as a doubly
    // controlled Ry conjugated by Rz(pi/2).
    const double q = 2.0 * angle / 4.0;
    p.append(Gate::x(a1));
    p.append(Gate::u3(s, 0.0, 0.0, kPi / 2));
    p.append(Gate::u3(s, q, 0.0, 0.0)).append(Gate::cnot(a1, s));
    p.append(Gate::u3(s, -q, 0.0, 0.0)).append(Gate::cnot(a0, s));
    p.append(Gate::u3(s, q, 0.0, 0.0)).append(Gate::cnot(a1, s));
    p.append(Gate::u3(s, -q, 0.0, 0.0)).append(Gate::cnot(a0, s));
    p.append(Gate::u3(s, 0.0, 0.0, -kPi / 2));
    p.append(Gate::x(a1));
    permute(false);
    return p;
}

CircuitProgram collision_unitary_circuit(const CollisionConfig& cfg, long n, const CircuitLayout& layout) {
    check_circuit_config(cfg);
    check_register(layout);
    if (n < 0) throw ValidationError("collision_unitary_circuit: negative collision index");
    std::array<double, 4> xi{};
    if (cfg.noise && cfg.noise->xi_bar > 0.0) xi = sample_noise(*cfg.noise, n).xi;
    CircuitProgram p(layout.n_qubits);
    const Operator x = ops::sigma_x();
    p.append(u3_gate(layout.s0, x * free_propagator(cfg.omega(), cfg.tau, xi[0], xi[1]) * x));
    p.append(u3_gate(layout.s1, x * free_propagator(cfg.omega(), cfg.tau, xi[2], xi[3]) * x));
    const double g = cfg.g();
    p.append(interaction_circuit(1, g * cfg.tau / 2, layout));
    p.append(interaction_circuit(2, g * cfg.tau, layout));
    p.append(interaction_circuit(1, g * cfg.tau / 2, layout));
    return p;
}

CircuitProgram build_collision_circuit(const CollisionConfig& cfg, long n, const CircuitLayout& layout) {
    CircuitProgram p = ancilla_preparation(cfg.schedule.active(n), layout);
    p.append(collision_unitary_circuit(cfg, n, layout));
    p.append(Gate::reset(layout.a0)).append(Gate::reset(layout.a1));
    return p;
}

RefreshKind parse_refresh_kind(std::string_view name) {
    if (name == "reset") return RefreshKind::reset;
    if (name == "swap-train" || name == "swap_train") return RefreshKind::swap_train;
    throw ValidationError("unknown refresh strategy '" + std::string(name) + "' (expected reset or swap-train)");
}

std::string_view refresh_kind_name(RefreshKind kind) { return kind == RefreshKind::reset ? "reset" : "swap-train"; }

int required_qubits(RefreshKind kind, long n_collisions) {
    if (n_collisions < 0) throw ValidationError("required_qubits: negative collision count");
    if (kind == RefreshKind::reset) return kMinCircuitQubits;
    return static_cast<int>(std::min<long>(2 + 2 * std::max(1L, n_collisions), 1L << 20));
}

CircuitProgram build_program(const CollisionConfig& cfg, long n_collisions, RefreshKind kind,
                             std::optional<int> qubit_budget) {
    check_circuit_config(cfg);
    if (n_collisions < 0) throw ValidationError("build_program: negative collision count");
    const int needed = required_qubits(kind, n_collisions);
    if (qubit_budget && needed > *qubit_budget)
        throw ValidationError("build_program: " + std::string(refresh_kind_name(kind)) + " with " +
                              std::to_string(n_collisions) + " collisions needs " + std::to_string(needed) +
                              " qubits, budget is " + std::to_string(*qubit_budget));
    if (needed > kMaxCircuitQubits)
        throw ValidationError("build_program: " + std::to_string(needed) + " qubits exceed the simulator limit");
    const PureState psi0 = pure_initial_state(cfg.initial_state);
    CircuitLayout layout;
    layout.n_qubits = needed;
    CircuitProgram p(needed);
    p.append(system_preparation(psi0, layout));
    if (kind == RefreshKind::reset) {
        for (long n = 0; n < n_collisions; ++n) p.append(build_collision_circuit(cfg, n, layout));
        return p;
    }
    // Swap train: pair k sits on qubits (2 + 2k, 3 + 2k); all are prepared
    // up front and pair k is swapped into the working slot before use.
    for (long k = 0; k < n_collisions; ++k) {
        CircuitLayout pair = layout;
        pair.a0 = 2 + 2 * static_cast<int>(k);
        pair.a1 = pair.a0 + 1;
        p.append(ancilla_preparation(cfg.schedule.active(k), pair));
    }
    for (long k = 0; k < n_collisions; ++k) {
        if (k > 0) {
            const int q = 2 + 2 * static_cast<int>(k);
            p.append(Gate::swap(layout.a0, q)).append(Gate::swap(layout.a1, q + 1));
        }
        p.append(collision_unitary_circuit(cfg, k, layout));
    }
    return p;
}

ProgramBuilder refresh_strategy(RefreshKind kind, std::optional<int> qubit_budget) {
    return [kind, qubit_budget](const CollisionConfig& cfg, long n_collisions) {
        return build_program(cfg, n_collisions, kind, qubit_budget);
    };
}

void append_x_measurement(CircuitProgram& prog, const CircuitLayout& layout) {
    prog.append(Gate::h(layout.s0)).append(Gate::h(layout.s1));
    prog.append(Gate::measure(layout.s0)).append(Gate::measure(layout.s1));
}

std::string counts_to_json(const Counts& counts) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : counts) j[k] = v;
    return j.dump();
}

Counts counts_from_json(std::string_view text) {
    Counts out;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw ValidationError("counts JSON must be an object");
        for (const auto& [k, v] : j.items()) {
            if (k.find_first_not_of("01") != std::string::npos || k.empty())
                throw ValidationError("counts JSON: key '" + k + "' is not a bitstring");
            if (!v.is_number_integer() || v.get<long>() < 0)
                throw ValidationError("counts JSON: count for '" + k + "' is not a non-negative integer");
            out[k] = v.get<long>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("counts JSON: ") + e.what());
    }
    return out;
}

double z_expectation(const Counts& counts, std::size_t position) {
    long total = 0, signed_sum = 0;
    for (const auto& [k, v] : counts) {
        if (position >= k.size()) throw DimensionError("z_expectation: bit position out of range");
        total += v;
        signed_sum += k[position] == '0' ? v : -v;
    }
    if (total == 0) throw ValidationError("z_expectation: empty counts");
    return static_cast<double>(signed_sum) / static_cast<double>(total);
}

namespace {

void run_statevector(const CircuitProgram& prog, Ket& psi, CounterRng& rng) {
    const int n = prog.n_qubits();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (const auto& g : prog.gates()) {
        if (g.kind == GateKind::MEASURE) continue;
        if (g.kind == GateKind::RESET) {
            const std::size_t b = bit_of(g.targets[0], n);
            double p1 = 0.0;
            for (Eigen::Index i = 0; i < psi.size(); ++i)
                if (static_cast<std::size_t>(i) & b) p1 += std::norm(psi(i));
            const bool one = uni(rng) < p1;
            const double keep = std::sqrt(one ? p1 : 1.0 - p1);
            Ket next = Ket::Zero(psi.size());
            for (Eigen::Index i = 0; i < psi.size(); ++i) {
                const bool set = static_cast<std::size_t>(i) & b;
                if (set != one) continue;
                next(static_cast<Eigen::Index>(static_cast<std::size_t>(i) & ~b)) = psi(i) / keep;
            }
            psi = std::move(next);
            continue;
        }
        apply_matrix(psi.data(), g.matrix(), g.targets, n);
    }
}

std::string bitstring(std::size_t index, const std::vector<int>& qubits, int n) {
    std::string s;
    for (int q : qubits) s.push_back(index & bit_of(q, n) ? '1' : '0');
    return s;
}

// Marginal distribution over `qubits`, keyed by their bit pattern.
std::vector<double> marginal(const Eigen::VectorXd& probs, const std::vector<int>& qubits, int n) {
    std::vector<double> out(std::size_t{1} << qubits.size(), 0.0);
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        std::size_t key = 0;
        for (int q : qubits) key = (key << 1) | ((static_cast<std::size_t>(i) & bit_of(q, n)) ? 1u : 0u);
        out[key] += std::max(0.0, probs(i));
    }
    return out;
}

std::string key_string(std::size_t key, std::size_t width) {
    std::string s(width, '0');
    for (std::size_t b = 0; b < width; ++b)
        if (key & (std::size_t{1} << (width - 1 - b))) s[b] = '1';
    return s;
}

Counts draw(const std::vector<double>& dist, std::size_t width, long shots, std::uint64_t seed) {
    CounterRng rng(seed);
    std::discrete_distribution<std::size_t> pick(dist.begin(), dist.end());
    std::vector<long> tally(dist.size(), 0);
    for (long s = 0; s < shots; ++s) ++tally[pick(rng)];
    Counts out;
    for (std::size_t k = 0; k < tally.size(); ++k)
        if (tally[k] > 0) out[key_string(k, width)] = tally[k];
    return out;
}

void check_shots(long shots) {
    if (shots < 1) throw ValidationError("shots must be >= 1");
}

void apply_gate_noise(Operator& rho, const Gate& g, const NoiseChannelSpec& noise, int n) {
    if (!g.noisy || !g.is_unitary()) return;
    if (g.targets.size() == 1) {
        if (noise.p1q > 0.0) apply_channel(rho, depolarizing_kraus(noise.p1q, 1), g.targets, n);
    } else if (noise.p2q > 0.0) {
        apply_channel(rho, depolarizing_kraus(noise.p2q, 2), g.targets, n);
    }
    for (int q : g.targets) {
        if (noise.amplitude_damping > 0.0) apply_channel(rho, amplitude_damping_kraus(noise.amplitude_damping), {q}, n);
        if (noise.dephasing > 0.0) apply_channel(rho, dephasing_kraus(noise.dephasing), {q}, n);
    }
}

void run_density(const CircuitProgram& prog, Operator& rho, const NoiseChannelSpec* noise) {
    const int n = prog.n_qubits();
    for (const auto& g : prog.gates()) {
        if (g.kind == GateKind::MEASURE) continue;
        if (g.kind == GateKind::RESET) {
            apply_channel(rho, reset_kraus(), g.targets, n);
            continue;
        }
        apply_conjugation(rho, g.matrix(), g.targets, n);
        if (noise) apply_gate_noise(rho, g, *noise, n);
    }
}

Operator ground_density(int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    Operator rho = Operator::Zero(d, d);
    rho(0, 0) = 1.0;
    return rho;
}

constexpr int kMaxDensityQubits = 10;

}  // namespace

Ket simulate_statevector(const CircuitProgram& prog, std::uint64_t seed) {
    prog.validate();
    Ket psi = Ket::Zero(Eigen::Index{1} << prog.n_qubits());
    psi(0) = 1.0;
    CounterRng rng(seed);
    run_statevector(prog, psi, rng);
    return psi;
}

Counts simulate_statevector(const CircuitProgram& prog, long shots, std::uint64_t seed) {
    check_shots(shots);
    prog.validate();
    const int n = prog.n_qubits();
    const std::vector<int> qubits = prog.measured_qubits();
    Ket start = Ket::Zero(Eigen::Index{1} << n);
    start(0) = 1.0;
    if (!prog.has_reset()) {
        // Without mid-circuit sampling every shot sees the same final state.
        Ket psi = start;
        CounterRng rng(seed);
        run_statevector(prog, psi, rng);
        return draw(marginal(psi.cwiseAbs2(), qubits, n), qubits.size(), shots, derive_seed(seed, 1, 0));
    }
    Counts out;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (long s = 0; s < shots; ++s) {
        CounterRng rng(derive_seed(seed, 0, static_cast<std::uint64_t>(s)));
        Ket psi = start;
        run_statevector(prog, psi, rng);
        double u = uni(rng), acc = 0.0;
        Eigen::Index pick = psi.size() - 1;
        for (Eigen::Index i = 0; i < psi.size(); ++i) {
            acc += std::norm(psi(i));
            if (u < acc) {
                pick = i;
                break;
            }
        }
        ++out[bitstring(static_cast<std::size_t>(pick), qubits, n)];
    }
    return out;
}

bool NoiseChannelSpec::is_trivial() const {
    return p1q == 0.0 && p2q == 0.0 && amplitude_damping == 0.0 && dephasing == 0.0;
}

void NoiseChannelSpec::validate() const {
    const std::array<std::pair<const char*, double>, 4> fields{
        {{"p1q", p1q}, {"p2q", p2q}, {"amplitude_damping", amplitude_damping}, {"dephasing", dephasing}}};
    for (const auto& [name, v] : fields)
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(std::string("noise channel: ") + name + " must lie in [0, 1]");
    const std::array<std::vector<Operator>, 4> channels{depolarizing_kraus(p1q, 1), depolarizing_kraus(p2q, 2),
                                                        amplitude_damping_kraus(amplitude_damping),
                                                        dephasing_kraus(dephasing)};
    for (const auto& k : channels)
        if (kraus_completeness_error(k) > 1e-12) throw ValidationError("noise channel: Kraus set is not trace preserving");
}

std::vector<Operator> depolarizing_kraus(double p, int n_qubits) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("depolarizing_kraus: p must lie in [0, 1]");
    if (n_qubits != 1 && n_qubits != 2) throw ValidationError("depolarizing_kraus: 1 or 2 qubits");
    // rho -> (1 - p) rho + p I/d, written over the d^2 Pauli strings.
    const int terms = n_qubits == 1 ? 4 : 16;
    const double rest = p / terms;
    std::vector<Operator> out;
    for (int i = 0; i < terms; ++i) {
        const double w = i == 0 ? 1.0 - p + rest : rest;
        if (w == 0.0) continue;
        const Operator pa = n_qubits == 1 ? pauli(i) : kron(pauli(i / 4), pauli(i % 4));
        out.push_back(std::sqrt(w) * pa);
    }
    return out;
}

std::vector<Operator> amplitude_damping_kraus(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("amplitude_damping_kraus: gamma must lie in [0, 1]");
    // Decay |1> (up) -> |0> (down).
    Operator k0 = Operator::Zero(2, 2), k1 = Operator::Zero(2, 2);
    k0(0, 0) = 1.0;
    k0(1, 1) = std::sqrt(1.0 - gamma);
    k1(0, 1) = std::sqrt(gamma);
    return {k0, k1};
}

std::vector<Operator> dephasing_kraus(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing_kraus: p must lie in [0, 1]");
    return {std::sqrt(1.0 - p) * ops::identity(2), std::sqrt(p) * ops::sigma_z()};
}

double kraus_completeness_error(const std::vector<Operator>& kraus) {
    if (kraus.empty()) throw ValidationError("kraus_completeness_error: empty Kraus set");
    Operator s = Operator::Zero(kraus.front().cols(), kraus.front().cols());
    for (const auto& k : kraus) s += k.adjoint() * k;
    return max_abs(s - Operator::Identity(s.rows(), s.cols()));
}

DensityMatrix simulate_density(const CircuitProgram& prog, const NoiseChannelSpec* noise) {
    prog.validate();
    if (noise) noise->validate();
    if (prog.n_qubits() > kMaxDensityQubits)
        throw ValidationError("simulate_density: at most 10 qubits, got " + std::to_string(prog.n_qubits()));
    Operator rho = ground_density(prog.n_qubits());
    run_density(prog, rho, noise);
    return DensityMatrix::trusted(rho);
}

Counts sample_counts(const DensityMatrix& rho, const std::vector<int>& qubits, long shots, std::uint64_t seed) {
    check_shots(shots);
    int n = 0;
    while ((Eigen::Index{1} << n) < rho.dim()) ++n;
    if ((Eigen::Index{1} << n) != rho.dim()) throw DimensionError("sample_counts: dimension is not a power of two");
    for (int q : qubits)
        if (q < 0 || q >= n) throw DimensionError("sample_counts: qubit out of range");
    const Eigen::VectorXd diag = rho.matrix().diagonal().real();
    return draw(marginal(diag, qubits, n), qubits.size(), shots, seed);
}

Counts simulate_noisy(const CircuitProgram& prog, const NoiseChannelSpec& noise, long shots, std::uint64_t seed) {
    check_shots(shots);
    const DensityMatrix rho = simulate_density(prog, &noise);
    return sample_counts(rho, prog.measured_qubits(), shots, seed);
}

ObservableSeries circuit_sigma_x_trace(const CollisionConfig& cfg, const CircuitTraceOptions& options) {
    check_circuit_config(cfg);
    if (options.shots < 0) throw ValidationError("circuit trace: shots must be >= 0");
    if (options.noise) options.noise->validate();
    const NoiseChannelSpec* noise = options.noise && !options.noise->is_trivial() ? &*options.noise : nullptr;
    const long n_max = cfg.n_collisions;
    ObservableSeries out({"sx1", "sx2", "se_sx1", "se_sx2"});
    const CircuitLayout layout;

    auto record = [&](long n, double x1, double x2) {
        double se1 = 0.0, se2 = 0.0;
        if (options.shots > 0) {
            const double s = static_cast<double>(options.shots);
            se1 = std::sqrt(std::max(0.0, 1.0 - x1 * x1) / s);
            se2 = std::sqrt(std::max(0.0, 1.0 - x2 * x2) / s);
        }
        out.append(n, static_cast<double>(n) * cfg.tau, {x1, x2, se1, se2}, cfg.schedule.record_label(n));
    };
    auto from_counts = [&](long n, const Counts& c) { record(n, z_expectation(c, 0), z_expectation(c, 1)); };
    auto from_probs = [&](long n, const Eigen::VectorXd& probs, int nq) {
        double z[2] = {0.0, 0.0};
        for (Eigen::Index i = 0; i < probs.size(); ++i)
            for (int j = 0; j < 2; ++j) z[j] += (static_cast<std::size_t>(i) & bit_of(j, nq) ? -1.0 : 1.0) * probs(i);
        record(n, z[0], z[1]);
    };

    if (options.refresh == RefreshKind::reset) {
        // Every run for n is a prefix of the run for n + 1, so one density
        // propagation serves all collision counts. Shots are then drawn from
        // the readout distribution, which equals that of per-shot runs.
        CircuitProgram readout(layout.n_qubits);
        append_x_measurement(readout, layout);
        Operator rho = ground_density(layout.n_qubits);
        run_density(build_program(cfg, 0, RefreshKind::reset), rho, noise);
        for (long n = 0; n <= n_max; ++n) {
            if (n > 0) run_density(build_collision_circuit(cfg, n - 1, layout), rho, noise);
            Operator measured = rho;
            run_density(readout, measured, noise);
            const DensityMatrix dm = DensityMatrix::trusted(measured);
            if (options.shots == 0) {
                from_probs(n, dm.matrix().diagonal().real(), layout.n_qubits);
            } else {
                from_counts(n, sample_counts(dm, {layout.s0, layout.s1}, options.shots,
                                             derive_seed(options.seed, static_cast<std::uint64_t>(n), 0)));
            }
        }
        return out;
    }

    for (long n = 0; n <= n_max; ++n) {
        CircuitProgram prog = build_program(cfg, n, options.refresh);
        append_x_measurement(prog, layout);
        const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(n), 0);
        if (options.shots > 0) {
            from_counts(n, noise ? simulate_noisy(prog, *noise, options.shots, seed)
                                 : simulate_statevector(prog, options.shots, seed));
        } else if (noise) {
            from_probs(n, simulate_density(prog, noise).matrix().diagonal().real(), prog.n_qubits());
        } else {
            // Swap-train programs contain no RESET, so the run is pure.
            from_probs(n, simulate_statevector(prog, seed).cwiseAbs2(), prog.n_qubits());
        }
    }
    return out;
}

}  // namespace qsync
