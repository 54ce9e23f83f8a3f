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

#include "qsync/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qsync/error.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/rng.hpp"
#include "qsync/sse.hpp"

namespace qsync {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> split_commas(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ValidationError(field + ": " + what);
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// One INI section with key bookkeeping for strict parsing.
class Section {
public:
    Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

    bool present() const { return tree_ != nullptr; }
    bool has(const std::string& key) const { return raw(key).has_value(); }

    std::optional<std::string> raw(const std::string& key) const {
        if (!tree_) return std::nullopt;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        used_.insert(key);
        return trim(it->second.data());
    }

    std::string field(const std::string& key) const { return name_ + "." + key; }

    std::string require_string(const std::string& key, const char* missing_name = nullptr) const {
        const auto v = raw(key);
        if (!v || v->empty()) fail(field(key), std::string("missing ") + (missing_name ? missing_name : key.c_str()));
        return *v;
    }

    std::optional<double> opt_double(const std::string& key) const {
        const auto v = raw(key);
        if (!v) return std::nullopt;
        const auto d = to_double(*v);
        if (!d) fail(field(key), "not a finite number: '" + *v + "'");
        return d;
    }

    double require_double(const std::string& key) const {
        const auto v = opt_double(key);
        if (!v) fail(field(key), "missing " + key);
        return *v;
    }

    std::optional<long> opt_long(const std::string& key) const {
        const auto v = raw(key);
        if (!v) return std::nullopt;
        long out = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc() || ptr != v->data() + v->size()) fail(field(key), "not an integer: '" + *v + "'");
        return out;
    }

    std::optional<std::uint64_t> opt_u64(const std::string& key) const {
        const auto v = raw(key);
        if (!v) return std::nullopt;
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc() || ptr != v->data() + v->size())
            fail(field(key), "not an unsigned integer: '" + *v + "'");
        return out;
    }

    std::optional<bool> opt_bool(const std::string& key) const {
        const auto v = raw(key);
        if (!v) return std::nullopt;
        std::string s = *v;
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
        if (s == "false" || s == "no" || s == "off" || s == "0") return false;
        fail(field(key), "not a boolean: '" + *v + "'");
    }

    void check_unknown() const {
        if (!tree_) return;
        for (const auto& [k, child] : *tree_)
            if (!used_.count(k)) fail(field(k), "unknown key");
    }

private:
    std::string name_;
    const pt::ptree* tree_;
    mutable std::set<std::string> used_;
};

const std::map<std::string, Backend>& backend_table() {
    static const std::map<std::string, Backend> t{
        {"qcm", Backend::qcm},
        {"lindblad", Backend::lindblad},
        {"lindblad-reduced", Backend::lindblad_reduced},
        {"qutrit-emission", Backend::qutrit_emission},
        {"sse", Backend::sse},
        {"circuit-ideal", Backend::circuit_ideal},
        {"circuit-noisy", Backend::circuit_noisy},
    };
    return t;
}

bool is_preset(std::string_view name) { return name == "I" || name == "II" || name == "III"; }

bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-' || c == '.'; });
}

std::optional<cplx> parse_complex(std::string_view tok) {
    std::string s = trim(tok);
    if (s.empty()) return std::nullopt;
    if (s.back() != 'i') {
        const auto re = to_double(s);
        if (!re) return std::nullopt;
        return cplx(*re, 0.0);
    }
    s.pop_back();
    // Split at the last sign that is not an exponent sign or the leading sign.
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    const std::string re_part = split == std::string::npos ? "" : s.substr(0, split);
    std::string im_part = split == std::string::npos ? s : s.substr(split);
    if (im_part == "+" || im_part == "-" || im_part.empty()) im_part += "1";
    if (im_part.front() == '+') im_part.erase(0, 1);
    const auto im = to_double(im_part);
    if (!im) return std::nullopt;
    double re = 0.0;
    if (!re_part.empty()) {
        const auto r = to_double(re_part);
        if (!r) return std::nullopt;
        re = *r;
    }
    return cplx(re, *im);
}

DensityMatrix eta_from_lists(const std::string& field, const std::string& real_text,
                             const std::optional<std::string>& imag_text) {
    auto read9 = [&](const std::string& text, const std::string& name) {
        const auto toks = split_list(text);
        if (toks.size() != 9) fail(field + "." + name, "expected 9 numbers, got " + std::to_string(toks.size()));
        std::array<double, 9> v{};
        for (std::size_t i = 0; i < 9; ++i) {
            const auto d = to_double(toks[i]);
            if (!d) fail(field + "." + name, "not a finite number: '" + toks[i] + "'");
            v[i] = *d;
        }
        return v;
    };
    const auto re = read9(real_text, "eta");
    std::array<double, 9> im{};
    if (imag_text) im = read9(*imag_text, "eta_imag");
    Operator m(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = cplx(re[3 * r + c], im[3 * r + c]);
    try {
        return DensityMatrix(m);
    } catch (const ValidationError& e) {
        fail(field + ".eta", e.what());
    }
}

std::vector<ScheduleEntry> parse_schedule(const std::string& text) {
    std::vector<ScheduleEntry> out;
    for (const auto& tok : split_commas(text)) {
        if (tok.empty()) fail("physics.schedule", "empty entry");
        ScheduleEntry e;
        const auto at = tok.find('@');
        if (at == std::string::npos) {
            e.ancilla = tok;
        } else {
            e.ancilla = trim(tok.substr(0, at));
            const std::string num = trim(tok.substr(at + 1));
            const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), e.start_n);
            if (ec != std::errc() || ptr != num.data() + num.size() || num.empty())
                fail("physics.schedule", "bad collision index in '" + tok + "'");
        }
        if (e.ancilla.empty()) fail("physics.schedule", "missing ancilla name in '" + tok + "'");
        out.push_back(e);
    }
    return out;
}

std::string schedule_text(const std::vector<ScheduleEntry>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += s[i].ancilla + "@" + std::to_string(s[i].start_n);
    }
    return out;
}

std::string metrics_compute_text(const MetricsSettings& m) {
    std::vector<std::string> v;
    if (m.pearson) v.emplace_back("pearson");
    if (m.concurrence) v.emplace_back("concurrence");
    if (m.mutual_info) v.emplace_back("mutual_info");
    if (m.purity) v.emplace_back("purity");
    if (v.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
}

std::string padded(std::size_t v, int width) {
    std::string t = std::to_string(v);
    if (static_cast<int>(t.size()) < width) t.insert(0, static_cast<std::size_t>(width) - t.size(), '0');
    return t;
}

bool is_pure_state(const DensityMatrix& rho) {
    return std::abs((rho.matrix() * rho.matrix()).trace().real() - 1.0) < 1e-10;
}

}  // namespace

Backend parse_backend(std::string_view name) {
    const auto it = backend_table().find(std::string(name));
    if (it == backend_table().end()) {
        std::string known;
        for (const auto& [k, v] : backend_table()) known += (known.empty() ? "" : ", ") + k;
        throw ValidationError("unknown backend '" + std::string(name) + "' (expected one of " + known + ")");
    }
    return it->second;
}

std::string_view backend_name(Backend b) {
    for (const auto& [k, v] : backend_table())
        if (v == b) return k;
    return "?";
}

const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{"omega_tau", "g_sq_tau", "tau",      "xi_bar",
                                                "shots",     "p1q",      "p2q",      "amplitude_damping",
                                                "dephasing", "dt",       "emission_gamma"};
    return names;
}

DensityMatrix parse_initial_state(std::string_view text) {
    const std::string t = trim(text);
    if (t == "mixed") return DensityMatrix::maximally_mixed(4);
    static const std::map<std::string, int> labels{{"uu", 0}, {"ud", 1}, {"du", 2}, {"dd", 3}};
    if (const auto it = labels.find(t); it != labels.end()) return DensityMatrix(PureState(ops::basis_ket(it->second, 4)));
    const auto toks = split_commas(t);
    if (toks.size() != 4)
        fail("physics.initial_state", "expected 4 amplitudes, a basis label (uu, ud, du, dd) or 'mixed'");
    Ket k(4);
    for (int i = 0; i < 4; ++i) {
        const auto c = parse_complex(toks[static_cast<std::size_t>(i)]);
        if (!c) fail("physics.initial_state", "cannot parse amplitude '" + toks[static_cast<std::size_t>(i)] + "'");
        k(i) = *c;
    }
    if (k.norm() < 1e-12) fail("physics.initial_state", "zero vector");
    return DensityMatrix(PureState(k));
}

AncillaSpec Scenario::resolve_ancilla(std::string_view name) const {
    if (is_preset(name)) return AncillaSpec::preset(name);
    for (const auto& a : ancillas)
        if (a.name == name) return a.spec;
    fail("physics.schedule", "unknown ancilla '" + std::string(name) + "'");
}

QuenchSchedule Scenario::quench_schedule() const {
    std::vector<QuenchSegment> segs;
    for (const auto& e : schedule) segs.push_back({e.start_n, resolve_ancilla(e.ancilla)});
    return QuenchSchedule(std::move(segs));
}

CollisionConfig Scenario::collision_config(std::uint64_t run_seed) const {
    CollisionConfig cfg;
    cfg.omega_tau = omega_tau;
    cfg.g_sq_tau = g_sq_tau;
    cfg.tau = tau;
    cfg.n_collisions = n_collisions;
    cfg.initial_state = initial_state;
    cfg.schedule = quench_schedule();
    if (noise && noise->xi_bar > 0.0) {
        NoiseSpec ns;
        ns.xi_bar = noise->xi_bar;
        ns.seed = run_seed;
        ns.axis_x = noise->axes.find('x') != std::string::npos;
        ns.axis_y = noise->axes.find('y') != std::string::npos;
        ns.during_interaction = noise->during_interaction;
        cfg.noise = ns;
    }
    return cfg;
}

void Scenario::validate() const {
    if (!valid_identifier(name)) fail("scenario.name", "must be non-empty and use only letters, digits, '_', '-', '.'");
    if (!(omega_tau >= 0.0)) fail("physics.omega_tau", "must be >= 0");
    if (!(g_sq_tau >= 0.0)) fail("physics.g_sq_tau", "must be >= 0");
    if (!(tau > 0.0)) fail("physics.tau", "must be > 0");
    if (n_collisions < 1) fail("physics.n_collisions", "must be >= 1");
    if (initial_state.dim() != 4) fail("physics.initial_state", "must be a two-qubit state");
    if (schedule.empty()) fail("physics.schedule", "missing schedule");
    if (schedule.front().start_n != 0) fail("physics.schedule", "first segment must start at collision 0");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i].start_n <= schedule[i - 1].start_n)
            fail("physics.schedule", "segment starts must be strictly increasing");
    if (schedule.back().start_n >= n_collisions) fail("physics.schedule", "segment starts beyond n_collisions");
    for (const auto& e : schedule) (void)resolve_ancilla(e.ancilla);
    for (const auto& a : ancillas) {
        if (is_preset(a.name)) fail("ancilla:" + a.name, "name clashes with a preset");
        if (!valid_identifier(a.name)) fail("ancilla:" + a.name, "invalid ancilla name");
    }

    if (noise) {
        if (!(noise->xi_bar >= 0.0)) fail("noise.xi_bar", "must be >= 0");
        if (noise->axes != "x" && noise->axes != "y" && noise->axes != "xy")
            fail("noise.axes", "must be x, y or xy");
    }
    if (metrics.window < 2) fail("metrics.window", "must be >= 2");
    if (!(metrics.transition_threshold > 0.0 && metrics.transition_threshold <= 1.0))
        fail("metrics.transition_threshold", "must be in (0, 1]");
    if (sse.dt && !(*sse.dt > 0.0)) fail("sse.dt", "must be > 0");
    if (sse.trajectories < 1) fail("sse.trajectories", "must be >= 1");
    if (circuit.shots && *circuit.shots < 1) fail("circuit.shots", "must be >= 1");
    try {
        circuit.channels.validate();
    } catch (const ValidationError& e) {
        fail("circuit", e.what());
    }
    if (circuit.qubit_budget && (*circuit.qubit_budget < kMinCircuitQubits || *circuit.qubit_budget > kMaxCircuitQubits))
        fail("circuit.qubit_budget", "must be in [" + std::to_string(kMinCircuitQubits) + ", " +
                                         std::to_string(kMaxCircuitQubits) + "]");
    if (emission_gamma && !(*emission_gamma > 0.0)) fail("emission.gamma", "must be > 0");
    if (sweep) {
        if (sweep->runs < 1) fail("sweep.runs", "must be >= 1");
        if (sweep->parameter) {
            const auto& names = sweepable_parameters();
            if (std::find(names.begin(), names.end(), *sweep->parameter) == names.end())
                fail("sweep.parameter", "'" + *sweep->parameter + "' cannot be swept");
            if (sweep->values.empty()) fail("sweep.values", "missing values");
        } else if (!sweep->values.empty()) {
            fail("sweep.parameter", "missing parameter for the given values");
        }
    }
    validate_for(backend);
}

void Scenario::validate_for(Backend b) const {
    const auto all_ancillas_pure = [&](const char* backend) {
        for (const auto& e : schedule)
            if (!resolve_ancilla(e.ancilla).is_pure())
                fail("physics.schedule", std::string(backend) + " backend needs pure ancillas ('" + e.ancilla + "')");
    };
    const bool noisy = noise && noise->xi_bar > 0.0;
    switch (b) {
        case Backend::qcm:
        case Backend::lindblad:
            break;
        case Backend::lindblad_reduced:
            all_ancillas_pure("lindblad-reduced");
            if (noisy) fail("noise.xi_bar", "lindblad-reduced backend does not support noise");
            break;
        case Backend::qutrit_emission:
            if (!emission_gamma) fail("emission.gamma", "missing gamma");
            if (schedule.size() != 1) fail("physics.schedule", "qutrit-emission backend needs a single segment");
            if (noisy) fail("noise.xi_bar", "qutrit-emission backend does not support noise");
            break;
        case Backend::sse: {
            if (!sse.dt) fail("sse.dt", "missing dt");
            if (schedule.size() != 1) fail("physics.schedule", "sse backend needs a single segment");
            if (!is_pure_state(initial_state)) fail("physics.initial_state", "sse backend needs a pure state");
            const double ratio = tau / *sse.dt;
            if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
                fail("sse.dt", "must divide tau");
            SseConfig probe{effective_model(resolve_ancilla(schedule.front().ancilla), omega_tau / tau, g_sq_tau),
                            *sse.dt, 1, 0, true, 1, std::nullopt, 0.0};
            try {
                probe.validate();
            } catch (const ValidationError& e) {
                fail("sse.dt", e.what());
            }
            if (noise && noise->during_interaction)
                fail("noise.during_interaction", "sse backend has no interaction stage");
            break;
        }
        case Backend::circuit_ideal:
        case Backend::circuit_noisy:
            all_ancillas_pure("circuit");
            if (!is_pure_state(initial_state)) fail("physics.initial_state", "circuit backends need a pure state");
            if (noise && noise->during_interaction)
                fail("noise.during_interaction", "circuit backends apply noise only to free evolution");
            if (b == Backend::circuit_noisy && !circuit.shots) fail("circuit.shots", "missing shots");
            if (circuit.qubit_budget && required_qubits(circuit.refresh, n_collisions) > *circuit.qubit_budget)
                fail("circuit.qubit_budget", "refresh scheme needs " +
                                                 std::to_string(required_qubits(circuit.refresh, n_collisions)) +
                                                 " qubits");
            break;
    }
}

std::string Scenario::to_ini() const {
    std::ostringstream os;
    os << "[scenario]\n"
       << "name = " << name << "\n"
       << "backend = " << backend_name(backend) << "\n"
       << "seed = " << seed << "\n\n";
    os << "[physics]\n"
       << "omega_tau = " << fmt(omega_tau) << "\n"
       << "g_sq_tau = " << fmt(g_sq_tau) << "\n"
       << "tau = " << fmt(tau) << "\n"
       << "n_collisions = " << n_collisions << "\n"
       << "initial_state = " << initial_state_text << "\n"
       << "schedule = " << schedule_text(schedule) << "\n";
    for (const auto& a : ancillas) {
        os << "\n[ancilla:" << a.name << "]\n";
        if (a.spec.is_pure()) {
            os << "theta = " << fmt(a.spec.theta()) << "\nphi = " << fmt(a.spec.phi()) << "\n";
        } else {
            const Operator& m = a.spec.eta().matrix();
            std::string re, im;
            bool any_imag = false;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    re += (re.empty() ? "" : " ") + fmt(m(r, c).real());
                    im += (im.empty() ? "" : " ") + fmt(m(r, c).imag());
                    any_imag = any_imag || m(r, c).imag() != 0.0;
                }
            os << "eta = " << re << "\n";
            if (any_imag) os << "eta_imag = " << im << "\n";
        }
    }
    if (noise) {
        os << "\n[noise]\n"
           << "xi_bar = " << fmt(noise->xi_bar) << "\n"
           << "axes = " << noise->axes << "\n"
           << "during_interaction = " << (noise->during_interaction ? "true" : "false") << "\n";
    }
    os << "\n[metrics]\n"
       << "window = " << metrics.window << "\n"
       << "compute = " << metrics_compute_text(metrics) << "\n"
       << "transition_threshold = " << fmt(metrics.transition_threshold) << "\n";
    os << "\n[sse]\n";
    if (sse.dt) os << "dt = " << fmt(*sse.dt) << "\n";
    os << "trajectories = " << sse.trajectories << "\n"
       << "renormalize = " << (sse.renormalize ? "true" : "false") << "\n"
       << "threads = " << sse.threads << "\n";
    os << "\n[circuit]\n"
       << "refresh = " << refresh_kind_name(circuit.refresh) << "\n";
    if (circuit.shots) os << "shots = " << *circuit.shots << "\n";
    os << "p1q = " << fmt(circuit.channels.p1q) << "\n"
       << "p2q = " << fmt(circuit.channels.p2q) << "\n"
       << "amplitude_damping = " << fmt(circuit.channels.amplitude_damping) << "\n"
       << "dephasing = " << fmt(circuit.channels.dephasing) << "\n";
    if (circuit.qubit_budget) os << "qubit_budget = " << *circuit.qubit_budget << "\n";
    if (emission_gamma) os << "\n[emission]\ngamma = " << fmt(*emission_gamma) << "\n";
    if (sweep) {
        os << "\n[sweep]\n";
        if (sweep->parameter) {
            os << "parameter = " << *sweep->parameter << "\nvalues = ";
            for (std::size_t i = 0; i < sweep->values.size(); ++i) os << (i ? ", " : "") << fmt(sweep->values[i]);
            os << "\n";
        }
        os << "runs = " << sweep->runs << "\n";
    }
    os << "\n[output]\n"
       << "directory = " << output_directory << "\n"
       << "gnuplot = " << (gnuplot ? "true" : "false") << "\n";
    return os.str();
}

Scenario parse_scenario_text(std::string_view text, std::string_view origin) {
    pt::ptree tree;
    try {
        std::istringstream is{std::string(text)};
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string(origin) + ": line " + std::to_string(e.line()) + ": " + e.message());
    }

    std::map<std::string, const pt::ptree*> sections;
    for (const auto& [key, child] : tree) {
        if (!child.data().empty() && child.empty()) fail(key, "key outside of a section");
        sections[key] = &child;
    }
    static const std::set<std::string> known{"scenario", "physics", "noise",  "metrics",
                                             "sse",      "circuit", "emission", "sweep", "output"};
    for (const auto& [key, child] : sections)
        if (!known.count(key) && key.rfind("ancilla:", 0) != 0) fail(key, "unknown section");

    auto section = [&](const std::string& name) {
        const auto it = sections.find(name);
        return Section(name, it == sections.end() ? nullptr : it->second);
    };

    Scenario s;
    const Section sc = section("scenario");
    if (!sc.present()) fail("scenario", "missing section");
    s.name = sc.require_string("name");
    s.backend = [&] {
        try {
            return parse_backend(sc.require_string("backend"));
        } catch (const ValidationError& e) {
            fail("scenario.backend", e.what());
        }
    }();
    s.seed = sc.opt_u64("seed").value_or(0);
    sc.check_unknown();

    const Section ph = section("physics");
    if (!ph.present()) fail("physics", "missing section");
    s.omega_tau = ph.require_double("omega_tau");
    s.g_sq_tau = ph.require_double("g_sq_tau");
    // Default: omega = 1, so tau equals omega * tau.
    s.tau = ph.opt_double("tau").value_or(s.omega_tau);
    const auto n = ph.opt_long("n_collisions");
    if (!n) fail("physics.n_collisions", "missing n_collisions");
    s.n_collisions = *n;
    s.initial_state_text = ph.require_string("initial_state");
    s.initial_state = parse_initial_state(s.initial_state_text);
    s.schedule = parse_schedule(ph.require_string("schedule"));
    ph.check_unknown();

    for (const auto& [key, child] : sections) {
        if (key.rfind("ancilla:", 0) != 0) continue;
        const Section a(key, child);
        const std::string name = key.substr(8);
        const bool angles = a.has("theta") || a.has("phi");
        const bool matrix = a.has("eta") || a.has("eta_imag");
        if (angles == matrix) fail(key, "give either theta and phi or eta");
        if (angles) {
            const double theta = a.require_double("theta");
            const double phi = a.require_double("phi");
            s.ancillas.push_back({name, AncillaSpec::pure(theta, phi, name)});
        } else {
            const DensityMatrix eta = eta_from_lists(key, a.require_string("eta"), a.raw("eta_imag"));
            s.ancillas.push_back({name, AncillaSpec::mixed(eta, name)});
        }
        a.check_unknown();
    }

    if (const Section no = section("noise"); no.present()) {
        NoiseSettings ns;
        ns.xi_bar = no.require_double("xi_bar");
        ns.axes = no.raw("axes").value_or("xy");
        ns.during_interaction = no.opt_bool("during_interaction").value_or(false);
        no.check_unknown();
        s.noise = ns;
    }

    if (const Section me = section("metrics"); me.present()) {
        if (const auto w = me.opt_long("window")) s.metrics.window = *w;
        if (const auto c = me.raw("compute")) {
            s.metrics.pearson = s.metrics.concurrence = s.metrics.mutual_info = s.metrics.purity = false;
            for (const auto& tok : split_list(*c)) {
                if (tok == "pearson") s.metrics.pearson = true;
                else if (tok == "concurrence") s.metrics.concurrence = true;
                else if (tok == "mutual_info") s.metrics.mutual_info = true;
                else if (tok == "purity") s.metrics.purity = true;
                else if (tok == "all") s.metrics.pearson = s.metrics.concurrence = s.metrics.mutual_info = s.metrics.purity = true;
                else if (tok != "none") fail("metrics.compute", "unknown metric '" + tok + "'");
            }
        }
        if (const auto t = me.opt_double("transition_threshold")) s.metrics.transition_threshold = *t;
        me.check_unknown();
    }

    if (const Section ss = section("sse"); ss.present()) {
        s.sse.dt = ss.opt_double("dt");
        if (const auto t = ss.opt_long("trajectories")) s.sse.trajectories = *t;
        if (const auto r = ss.opt_bool("renormalize")) s.sse.renormalize = *r;
        if (const auto t = ss.opt_long("threads")) {
            if (*t < 0) fail("sse.threads", "must be >= 0");
            s.sse.threads = static_cast<unsigned>(*t);
        }
        ss.check_unknown();
    }

    if (const Section ci = section("circuit"); ci.present()) {
        if (const auto r = ci.raw("refresh")) {
            try {
                s.circuit.refresh = parse_refresh_kind(*r);
            } catch (const ValidationError& e) {
                fail("circuit.refresh", e.what());
            }
        }
        s.circuit.shots = ci.opt_long("shots");
        if (const auto v = ci.opt_double("p1q")) s.circuit.channels.p1q = *v;
        if (const auto v = ci.opt_double("p2q")) s.circuit.channels.p2q = *v;
        if (const auto v = ci.opt_double("amplitude_damping")) s.circuit.channels.amplitude_damping = *v;
        if (const auto v = ci.opt_double("dephasing")) s.circuit.channels.dephasing = *v;
        if (const auto v = ci.opt_long("qubit_budget")) s.circuit.qubit_budget = static_cast<int>(*v);
        ci.check_unknown();
    }

    if (const Section em = section("emission"); em.present()) {
        s.emission_gamma = em.opt_double("gamma");
        em.check_unknown();
    }

    if (const Section sw = section("sweep"); sw.present()) {
        SweepSettings st;
        st.parameter = sw.raw("parameter");
        if (const auto v = sw.raw("values")) {
            for (const auto& tok : split_list(*v)) {
                const auto d = to_double(tok);
                if (!d) fail("sweep.values", "not a finite number: '" + tok + "'");
                st.values.push_back(*d);
            }
        }
        if (const auto r = sw.opt_long("runs")) st.runs = *r;
        sw.check_unknown();
        s.sweep = st;
    }

    if (const Section out = section("output"); out.present()) {
        if (const auto d = out.raw("directory")) {
            if (d->empty()) fail("output.directory", "empty path");
            s.output_directory = *d;
        }
        s.gnuplot = out.opt_bool("gnuplot").value_or(false);
        out.check_unknown();
    }

    s.validate();
    return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), path.string());
}

Scenario with_parameter(const Scenario& base, std::string_view parameter, double value) {
    Scenario s = base;
    const std::string p(parameter);
    auto as_count = [&](const char* field) {
        if (value != std::floor(value)) fail(field, "sweep value must be an integer");
        return static_cast<long>(value);
    };
    if (p == "omega_tau") s.omega_tau = value;
    else if (p == "g_sq_tau") s.g_sq_tau = value;
    else if (p == "tau") s.tau = value;
    else if (p == "xi_bar") {
        if (!s.noise) s.noise = NoiseSettings{};
        s.noise->xi_bar = value;
    } else if (p == "shots") s.circuit.shots = as_count("circuit.shots");
    else if (p == "p1q") s.circuit.channels.p1q = value;
    else if (p == "p2q") s.circuit.channels.p2q = value;
    else if (p == "amplitude_damping") s.circuit.channels.amplitude_damping = value;
    else if (p == "dephasing") s.circuit.channels.dephasing = value;
    else if (p == "dt") s.sse.dt = value;
    else if (p == "emission_gamma") s.emission_gamma = value;
    else fail("sweep.parameter", "'" + p + "' cannot be swept");
    return s;
}

std::vector<RunDescriptor> expand_sweep(const Scenario& s) {
    std::vector<RunDescriptor> out;
    Scenario base = s;
    base.sweep.reset();
    if (!s.sweep) {
        out.push_back({0, 0, std::nullopt, s.seed, base, s.name});
        return out;
    }
    const auto& sw = *s.sweep;
    const std::size_t n_values = sw.parameter ? sw.values.size() : 1;
    auto width = [](std::size_t count) {
        int w = 2;
        for (std::size_t c = count > 0 ? count - 1 : 0; c >= 100; c /= 10) ++w;
        return w;
    };
    const int wv = width(n_values), wr = width(static_cast<std::size_t>(sw.runs));
    for (std::size_t v = 0; v < n_values; ++v) {
        for (long r = 0; r < sw.runs; ++r) {
            RunDescriptor d;
            d.value_index = v;
            d.run_index = static_cast<std::size_t>(r);
            d.seed = derive_seed(s.seed, v, static_cast<std::uint64_t>(r));
            if (sw.parameter) {
                d.value = sw.values[v];
                d.scenario = with_parameter(base, *sw.parameter, sw.values[v]);
                d.scenario.validate();
            } else {
                d.scenario = base;
            }
            d.scenario.seed = d.seed;
            d.tag = s.name + "_v" + padded(v, wv) + "_r" + padded(static_cast<std::size_t>(r), wr);
            out.push_back(std::move(d));
        }
    }
    return out;
}

}  // namespace qsync
