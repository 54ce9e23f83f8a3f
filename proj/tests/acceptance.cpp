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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qsync/circuit.hpp"
#include "qsync/collision.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/metrics.hpp"
#include "qsync/runner.hpp"
#include "qsync/scenario.hpp"
#include "qsync/sse.hpp"

using namespace qsync;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Scenario load(const std::string& file) { return parse_scenario(fs::path(QSYNC_SCENARIO_DIR) / file); }

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

fs::path scratch_dir(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / ("qsync_acceptance_" + std::to_string(::getpid())) / leaf;
    fs::create_directories(p);
    return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double phase_distance(const Operator& a, const Operator& b) {
    const cplx overlap = (b.adjoint() * a).trace();
    const cplx phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
    return (a - phase * b).cwiseAbs().maxCoeff();
}

bool same_ray(const Ket& a, const Ket& b, double tol) {
    const cplx overlap = b.dot(a);
    if (std::abs(overlap) < 0.5) return false;
    return (a - (overlap / std::abs(overlap)) * b).cwiseAbs().maxCoeff() <= tol;
}

// Eigenvector of the largest eigenvalue; the scenario guarantees purity.
PureState leading_state(const DensityMatrix& rho) {
    const Eigen::SelfAdjointEigenSolver<Operator> es(rho.matrix());
    return PureState(es.eigenvectors().col(rho.matrix().rows() - 1));
}

LindbladModel scenario_model(const Scenario& s, const std::string& ancilla) {
    return effective_model(s.resolve_ancilla(ancilla), s.omega_tau / s.tau, s.g_sq_tau);
}

// 1: collision stream with a mixed ancilla against its master equation.
Outcome backend_cross_validation() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load("mixed_ancilla_crosscheck.ini");
    const ObservableSeries qcm = simulate(s, Backend::qcm);
    const ObservableSeries me = simulate(s, Backend::lindblad);
    const double gamma = s.g_sq_tau;
    double worst = 0.0;
    for (const char* c : {"sx1", "sy1", "sz1", "sx2", "sy2", "sz2"}) {
        const auto a = qcm.column(c), b = me.column(c);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (gamma * qcm.records()[i].t <= 10.0 + 1e-12) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    const double secs = seconds_since(t0);
    return {worst <= 0.05 && secs < 10.0, "max |dev| = " + fmt(worst) + " over gamma t in [0, 10], " + fmt(secs, 3) + " s"};
}

// 2 and 3 share one run.
struct TransitionRun {
    ObservableSeries series;
    Scenario scenario;
    double seconds = 0.0;
};

const TransitionRun& transition_run() {
    static const TransitionRun run = [] {
        TransitionRun r;
        r.scenario = load("sync_transition.ini");
        const auto t0 = std::chrono::steady_clock::now();
        r.series = simulate(r.scenario);
        r.seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

Outcome synchronization_transition() {
    const TransitionRun& r = transition_run();
    const auto p = r.series.column("pearson");
    double pre = -2.0, post = 2.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (std::isnan(p[n])) continue;
        if (n < 1600) pre = std::max(pre, p[n]);
        if (n > 2200) post = std::min(post, p[n]);
    }
    const auto tr = detect_transition(r.series, r.scenario.metrics.transition_threshold);
    return {pre >= 0.99 && post <= -0.99 && r.seconds < 30.0,
            "max pearson before 1600 = " + fmt(pre, 6) + ", min after 2200 = " + fmt(post, 6) + ", transition n = " +
                (tr ? std::to_string(*tr) : std::string("none")) + ", " + fmt(r.seconds, 3) + " s"};
}

Outcome entanglement_revival() {
    const TransitionRun& r = transition_run();
    const long phase3 = r.scenario.schedule.back().start_n;
    const auto conc = r.series.column("concurrence");
    const auto mi = r.series.column("mutual_info");
    auto argmin_from = [](const std::vector<double>& v, std::size_t from) {
        std::size_t best = from;
        for (std::size_t i = from; i < v.size(); ++i)
            if (v[i] < v[best]) best = i;
        return best;
    };
    auto max_from = [](const std::vector<double>& v, std::size_t from) {
        return *std::max_element(v.begin() + static_cast<long>(from), v.end());
    };
    const std::size_t start = static_cast<std::size_t>(phase3);
    const std::size_t cmin = argmin_from(conc, start);
    const double crevive = max_from(conc, cmin);
    const bool conc_ok = conc[cmin] < 1e-3 && crevive > 10.0 * conc[cmin] && crevive > 1e-3;
    const std::size_t mmin = argmin_from(mi, start);
    const double mrevive = max_from(mi, mmin);
    const bool mi_ok = mi[mmin] < 0.1 * mi[start] && mrevive > 10.0 * mi[mmin];
    return {conc_ok && mi_ok, "concurrence min " + fmt(conc[cmin]) + " at n = " + std::to_string(cmin) +
                                  ", later max " + fmt(crevive) + "; mutual info " + fmt(mi[start]) + " -> " +
                                  fmt(mi[mmin]) + " at n = " + std::to_string(mmin) + " -> " + fmt(mrevive)};
}

// 4: dark pairs of the three presets.
Outcome dark_state_catalog() {
    const double omega = 1.0;
    const Ket dd = ops::basis_ket(3, 4), ud = ops::basis_ket(1, 4), du = ops::basis_ket(2, 4);
    struct Case {
        AncillaSpec anc;
        Ket second;
    };
    const Case cases[] = {{AncillaSpec::phase_I(), (du + ud) / std::sqrt(2.0)},
                          {AncillaSpec::phase_II(), du},
                          {AncillaSpec::phase_III(), (du - ud) / std::sqrt(2.0)}};
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const DarkStateSet ds = dark_states(effective_model(c.anc, omega, 1.0));
        bool this_ok = ds.states.size() == 2;
        if (this_ok) {
            this_ok = std::abs(ds.energies[0] + 2.0 * omega) <= 1e-10 && std::abs(ds.energies[1]) <= 1e-10 &&
                      same_ray(ds.states[0].amplitudes(), dd, 1e-10) &&
                      same_ray(ds.states[1].amplitudes(), c.second, 1e-10);
        }
        ok = ok && this_ok;
        detail += c.anc.label() + (this_ok ? " ok " : " mismatch ");
    }
    return {ok, detail + "(energies -2 omega, 0; tolerance 1e-10)"};
}

// 5: fidelity of the reduced two-qubit model with the full one.
Outcome reduced_model_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load("reduced_fidelity.ini");
    const double omega = s.omega_tau / s.tau, gamma = s.g_sq_tau;
    const AncillaSpec anc = s.resolve_ancilla(s.schedule.front().ancilla);
    std::vector<double> grid;
    for (long n = 0; n <= s.n_collisions; ++n) grid.push_back(static_cast<double>(n) * s.tau);
    const auto full = propagate_me(effective_model(anc, omega, gamma), s.initial_state, grid);
    const auto red = propagate_me(reduced_model(anc.theta(), anc.phi(), omega, gamma),
                                  reduce_initial_state(s.initial_state), grid);
    double worst = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (gamma * grid[i] >= 10.0 - 1e-12) worst = std::min(worst, fidelity(full[i], red[i]));
    const double secs = seconds_since(t0);
    return {worst >= 0.999 && secs < 5.0,
            "min fidelity for gamma t in [10, " + fmt(gamma * grid.back(), 3) + "] = " + fmt(worst, 6) + ", " +
                fmt(secs, 3) + " s"};
}

// 6: homodyne unraveling against the master equation.
Outcome sse_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load("sse_phase3.ini");
    const LindbladModel model = scenario_model(s, s.schedule.front().ancilla);
    const double dt = *s.sse.dt;
    const PureState psi0 = leading_state(s.initial_state);
    SseConfig cfg{model};
    cfg.dt = dt;
    cfg.n_steps = std::lround(static_cast<double>(s.n_collisions) * s.tau / dt);
    cfg.seed = s.seed;
    cfg.record_every = std::lround(s.tau / dt);
    const std::vector<NamedObservable> obs{{"sx1", kron(ops::sigma_x(), ops::identity(2))},
                                           {"sx2", kron(ops::identity(2), ops::sigma_x())}};
    const EnsembleResult e = ensemble_average(cfg, psi0, s.sse.trajectories, obs, false, s.sse.threads);
    const ObservableSeries ref = evolve_me(model, s.initial_state, e.mean.times(), obs);
    double worst_ratio = 0.0, worst_dev = 0.0;
    for (const char* c : {"sx1", "sx2"}) {
        const auto mean = e.mean.column(c), se = e.standard_error.column(c), me = ref.column(c);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double dev = std::abs(mean[i] - me[i]);
            worst_dev = std::max(worst_dev, dev);
            worst_ratio = std::max(worst_ratio, dev / std::max(0.05, 3.0 * se[i]));
        }
    }

    // Single trajectory to gamma t = 30; late window is the last 10 percent.
    SseConfig single = cfg;
    single.n_steps = std::lround(30.0 / s.g_sq_tau / dt);
    single.record_every = 1;
    const Trajectory tr = run_trajectory(single, psi0);
    const std::size_t n = tr.states.size();
    double phi1 = 0.0, x_abs = 0.0;
    std::size_t count = 0;
    for (std::size_t i = n - n / 10; i < n; ++i, ++count) phi1 += std::norm(tr.states[i].amplitudes()(0));
    phi1 /= static_cast<double>(count);
    const std::size_t steps = tr.x_records.size();
    count = 0;
    for (std::size_t i = steps - steps / 10; i < steps; ++i, ++count) x_abs += std::abs(tr.x_records[i][0]);
    x_abs /= static_cast<double>(count);
    const double secs = seconds_since(t0);
    return {worst_ratio <= 1.0 && phi1 < 1e-4 && x_abs < 0.05 && secs < 120.0,
            std::to_string(s.sse.trajectories) + " trajectories: max |dev| " + fmt(worst_dev) +
                ", worst dev / max(0.05, 3 SE) = " + fmt(worst_ratio) + "; late |phi1|^2 = " + fmt(phi1) +
                ", late mean |<X>| = " + fmt(x_abs) + ", " + fmt(secs, 3) + " s"};
}

// 7: synchronization under random detuning, on the realization-averaged
// order parameters.
Outcome noise_robustness() {
    const Scenario s = load("noise_sweep.ini");
    const SweepSummary sw = run_sweep(s, {scratch_dir("noise_sweep"), 0});
    bool ok = true;
    std::string detail;
    for (std::size_t v = 0; v < sw.values.size(); ++v) {
        const double xi = sw.values[v];
        const auto& tr = sw.ensemble_transition_n[v];
        const auto& post = sw.ensemble_post_transition_mean[v];
        if (xi >= 0.21 - 1e-12 && !tr) ok = false;
        if (std::abs(xi - 0.49) < 1e-12 && !(post && *post <= -0.9)) ok = false;
        detail += "xi_bar " + fmt(xi, 3) + ": n = " + (tr ? std::to_string(*tr) : std::string("none")) +
                  ", post mean " + (post ? fmt(*post, 3) : std::string("n/a")) + ", runs firing " +
                  fmt(100.0 * sw.run_transition_fraction[v], 3) + "%; ";
    }
    return {ok, detail + std::to_string(sw.runs.size() / sw.values.size()) + " realizations each"};
}

// 8: Trotterized circuit against the collision stream.
Outcome circuit_fidelity() {
    const Scenario s = load("circuit_trotter.ini");
    const ObservableSeries qcm = simulate(s, Backend::qcm);
    const ObservableSeries circ = simulate(s, Backend::circuit_ideal);
    double worst = 0.0;
    for (const char* c : {"sx1", "sx2"}) {
        const auto a = qcm.column(c), b = circ.column(c);
        for (std::size_t i = 0; i < a.size() && i <= 20; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    // Local error of one collision under tau halving at fixed omega and g.
    const double omega = s.omega_tau / s.tau, g_sq = s.g_sq_tau / s.tau;
    std::vector<double> errors;
    for (double tau : {s.tau, s.tau / 2, s.tau / 4, s.tau / 8}) {
        CollisionConfig cfg;
        cfg.omega_tau = omega * tau;
        cfg.g_sq_tau = g_sq * tau;
        cfg.tau = tau;
        const Operator free = kron(system_to_circuit(matexp(system_hamiltonian(cfg.omega()), cplx(0.0, -tau))),
                                   ops::identity(4));
        const Operator exact =
            matexp(joint_to_circuit(build_interaction_hamiltonian(cfg.g())), cplx(0.0, -tau)) * free;
        errors.push_back(phase_distance(collision_unitary_circuit(cfg, 0).unitary(), exact));
    }
    double min_ratio = std::numeric_limits<double>::infinity();
    std::string ratios;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        min_ratio = std::min(min_ratio, errors[i - 1] / errors[i]);
        ratios += (i > 1 ? ", " : "") + fmt(errors[i - 1] / errors[i], 3);
    }
    return {worst <= 0.02 && min_ratio >= 7.0,
            "max |dev| sx for n <= 20 = " + fmt(worst) + "; error ratios under tau halving " + ratios};
}

// 9: sign of the windowed Pearson from sampled readout.
Outcome shot_pipeline() {
    const Scenario s = load("circuit_shots.ini");
    const long quench = s.schedule.at(1).start_n;
    const long w = s.metrics.window;
    bool ok = true;
    std::string detail;
    for (Backend b : {Backend::circuit_ideal, Backend::circuit_noisy}) {
        std::vector<std::vector<double>> per_run;
        for (const RunDescriptor& d : expand_sweep(s)) per_run.push_back(simulate(d.scenario, b).column("pearson"));
        const double k = static_cast<double>(per_run.size());
        auto stats = [&](long n) {
            double sum = 0.0, sq = 0.0;
            for (const auto& p : per_run) sum += p[n];
            const double mean = sum / k;
            for (const auto& p : per_run) sq += (p[n] - mean) * (p[n] - mean);
            return std::pair{mean, std::sqrt(sq / (k - 1.0) / k)};
        };
        // Last window made only of pre-quench records, then every window
        // made only of post-quench records.
        const auto [pre, pre_se] = stats(quench);
        bool b_ok = pre - 3.0 * pre_se > 0.0;
        double worst_post = -std::numeric_limits<double>::infinity();
        for (long n = quench + w + 1; n <= s.n_collisions; ++n) {
            const auto [m, se] = stats(n);
            worst_post = std::max(worst_post, m + 3.0 * se);
            b_ok = b_ok && m + 3.0 * se < 0.0;
        }
        ok = ok && b_ok;
        detail += std::string(backend_name(b)) + ": pre " + fmt(pre, 3) + " +- " + fmt(pre_se, 2) +
                  ", post max(mean + 3 SE) " + fmt(worst_post, 3) + "; ";
    }
    return {ok, detail + std::to_string(expand_sweep(s).size()) + " repeats of " +
                    std::to_string(s.circuit.shots.value_or(0)) + " shots"};
}

// 10: the unit suites.
Outcome property_suites() {
    std::istringstream list(QSYNC_UNIT_TEST_BINARIES);
    bool ok = true;
    std::string detail;
    for (std::string path; std::getline(list, path, ',');) {
        if (path.empty()) continue;
        const int status = std::system((path + " --gtest_brief=1 >/dev/null 2>&1").c_str());
        const bool passed = WIFEXITED(status) && WEXITSTATUS(status) == 0;
        ok = ok && passed;
        detail += fs::path(path).filename().string() + (passed ? " ok " : " FAILED ");
    }
    return {ok, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"backend cross-validation", backend_cross_validation},
        {"synchronization transition", synchronization_transition},
        {"entanglement vanishing and revival", entanglement_revival},
        {"dark-state catalog", dark_state_catalog},
        {"reduced-model fidelity", reduced_model_fidelity},
        {"SSE unraveling equivalence", sse_equivalence},
        {"noise robustness", noise_robustness},
        {"Trotterized circuit fidelity", circuit_fidelity},
        {"shot-sampled pipeline", shot_pipeline},
        {"property suites", property_suites},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("qsync_acceptance_" + std::to_string(::getpid())), ec);
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
