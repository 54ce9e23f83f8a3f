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

#include "qsync/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "json.hpp"
#include "qsync/circuit.hpp"
#include "qsync/collision.hpp"
#include "qsync/error.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/metrics.hpp"
#include "qsync/sse.hpp"

namespace qsync {

namespace {

using json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Col : std::size_t { SX1, SY1, SZ1, SX2, SY2, SZ2, PEARSON, CONCURRENCE, MUTUAL_INFO, PURITY, N_COLS };

using Row = std::array<double, N_COLS>;

Row empty_row() {
    Row r;
    r.fill(kNaN);
    return r;
}

Row state_row(const DensityMatrix& rho, const MetricsSettings& m, const std::vector<NamedObservable>& obs) {
    Row r = empty_row();
    for (std::size_t k = 0; k < 6; ++k) r[k] = expectation(rho, obs[k].op).real();
    if (m.concurrence) r[CONCURRENCE] = concurrence(rho);
    if (m.mutual_info) r[MUTUAL_INFO] = mutual_information(rho);
    if (m.purity) r[PURITY] = purity(rho);
    return r;
}

std::vector<Row> rows_from_states(const std::vector<DensityMatrix>& states, const MetricsSettings& m) {
    const auto obs = standard_observables();
    std::vector<Row> rows;
    rows.reserve(states.size());
    for (const auto& rho : states) rows.push_back(state_row(rho, m, obs));
    return rows;
}

// Piecewise-constant master equation over collision intervals.
std::vector<DensityMatrix> lindblad_states(const Scenario& s, const CollisionConfig& cfg,
                                           const std::function<LindbladModel(const AncillaSpec&)>& make_model,
                                           DensityMatrix rho) {
    std::vector<DensityMatrix> out;
    out.reserve(static_cast<std::size_t>(s.n_collisions) + 1);
    out.push_back(rho);
    std::optional<MasterEquationPropagator> cached;
    std::size_t cached_segment = std::numeric_limits<std::size_t>::max();
    for (long k = 0; k < s.n_collisions; ++k) {
        const std::size_t seg = cfg.schedule.segment_index(k);
        const LindbladModel base = make_model(cfg.schedule.active(k));
        Operator next;
        if (cfg.noise) {
            const Operator h = base.hamiltonian() + sample_noise(*cfg.noise, k).hamiltonian();
            next = MasterEquationPropagator(LindbladModel(h, base.jumps()), cfg.tau).step(rho.matrix());
        } else {
            if (seg != cached_segment) {
                cached.emplace(base, cfg.tau);
                cached_segment = seg;
            }
            next = cached->step(rho.matrix());
        }
        rho = DensityMatrix::trusted(next);
        out.push_back(rho);
    }
    return out;
}

std::vector<Row> simulate_rows(const Scenario& s, Backend backend) {
    const CollisionConfig cfg = s.collision_config(s.seed);
    const double omega = cfg.omega();
    const double gamma = cfg.gamma();
    switch (backend) {
        case Backend::qcm: {
            std::vector<DensityMatrix> states;
            states.reserve(static_cast<std::size_t>(s.n_collisions) + 1);
            propagate(cfg, [&](long, const DensityMatrix& rho, const std::string&) { states.push_back(rho); });
            return rows_from_states(states, s.metrics);
        }
        case Backend::lindblad:
            return rows_from_states(
                lindblad_states(s, cfg, [&](const AncillaSpec& a) { return effective_model(a, omega, gamma); },
                                cfg.initial_state),
                s.metrics);
        case Backend::lindblad_reduced:
            return rows_from_states(
                lindblad_states(
                    s, cfg,
                    [&](const AncillaSpec& a) { return reduced_model(a.theta(), a.phi(), omega, gamma); },
                    reduce_initial_state(cfg.initial_state)),
                s.metrics);
        case Backend::qutrit_emission: {
            const LindbladModel model = qutrit_emission_model(*s.emission_gamma, cfg.g(), omega);
            const DensityMatrix rho0(kron(cfg.initial_state.matrix(), cfg.schedule.active(0).eta().matrix()));
            std::vector<double> grid;
            for (long n = 0; n <= s.n_collisions; ++n) grid.push_back(static_cast<double>(n) * cfg.tau);
            const std::array<int, 3> dims{2, 2, 3};
            const std::array<int, 2> keep{0, 1};
            std::vector<DensityMatrix> reduced;
            for (const auto& rho : propagate_me(model, rho0, grid)) reduced.push_back(partial_trace(rho, dims, keep));
            return rows_from_states(reduced, s.metrics);
        }
        case Backend::sse: {
            const long per_collision = std::lround(cfg.tau / *s.sse.dt);
            SseConfig sc{effective_model(cfg.schedule.active(0), omega, gamma),
                         *s.sse.dt,
                         per_collision * s.n_collisions,
                         s.seed,
                         s.sse.renormalize,
                         per_collision,
                         cfg.noise,
                         cfg.tau};
            const EigenSystem es = herm_eig(cfg.initial_state.matrix());
            Eigen::Index top = 0;
            es.values.maxCoeff(&top);
            const PureState psi0(es.vectors.col(top));
            const EnsembleResult res =
                ensemble_average(sc, psi0, s.sse.trajectories, standard_observables(), true, s.sse.threads);
            return rows_from_states(res.mean_states, s.metrics);
        }
        case Backend::circuit_ideal:
        case Backend::circuit_noisy: {
            CircuitTraceOptions opts;
            opts.refresh = s.circuit.refresh;
            opts.shots = s.circuit.shots.value_or(0);
            opts.seed = s.seed;
            if (backend == Backend::circuit_noisy) opts.noise = s.circuit.channels;
            const ObservableSeries trace = circuit_sigma_x_trace(cfg, opts);
            std::vector<Row> rows;
            for (const auto& rec : trace.records()) {
                Row r = empty_row();
                r[SX1] = rec.values[0];
                r[SX2] = rec.values[1];
                rows.push_back(r);
            }
            return rows;
        }
    }
    throw Error("simulate: unhandled backend");
}

void fill_pearson(std::vector<Row>& rows, long window) {
    std::vector<double> a, b;
    for (const auto& r : rows) {
        a.push_back(r[SX1]);
        b.push_back(r[SX2]);
    }
    const std::vector<double> p = trailing_pearson(a, b, window);
    for (std::size_t n = 0; n < rows.size(); ++n) rows[n][PEARSON] = p[n];
}

std::optional<long> transition_in(const std::vector<long>& ns, const std::vector<double>& p, double threshold) {
    bool armed = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::isnan(p[i])) continue;
        if (armed && p[i] <= -threshold) return ns[i];
        if (p[i] >= threshold) armed = true;
    }
    return std::nullopt;
}

std::optional<double> mean_from(const std::vector<long>& ns, const std::vector<double>& p, long from) {
    double sum = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (ns[i] < from || std::isnan(p[i])) continue;
        sum += p[i];
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::vector<long> row_indices(const ObservableSeries& s) {
    std::vector<long> ns;
    for (const auto& r : s.records()) ns.push_back(r.n);
    return ns;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }

json run_json(const RunSummary& r) {
    json j;
    j["tag"] = r.tag;
    j["backend"] = r.backend;
    j["seed"] = r.seed;
    if (r.value) j["value"] = *r.value;
    j["final_pearson"] = opt_json(r.final_pearson);
    j["transition_n"] = opt_json(r.transition_n);
    j["wall_time_s"] = r.wall_time_s;
    j["csv"] = r.csv_path.filename().string();
    return j;
}

std::string gnuplot_run_script(const std::string& csv_name, const std::string& title) {
    std::ostringstream os;
    os << "# gnuplot script for " << csv_name << "\n"
       << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set multiplot layout 2,1 title '" << title << "'\n"
       << "set ylabel '<sigma^x>'\n"
       << "plot '" << csv_name << "' using 1:3 with lines title 'sx1', '' using 1:6 with lines title 'sx2'\n"
       << "set ylabel 'pearson'\nset xlabel 'n'\nset yrange [-1.05:1.05]\n"
       << "plot '" << csv_name << "' using 1:9 with lines title 'pearson'\n"
       << "unset multiplot\n";
    return os.str();
}

std::string gnuplot_grid_script(const std::string& grid_name, const std::string& parameter) {
    std::ostringstream os;
    os << "# gnuplot script for " << grid_name << "\n"
       << "set datafile separator ','\n"
       << "set view map\nset xlabel 'n'\nset ylabel '" << parameter << "'\n"
       << "set cbrange [-1:1]\nset palette defined (-1 'blue', 0 'white', 1 'red')\n"
       << "splot '" << grid_name << "' using 1:2:3 every ::1 with points pointtype 5 palette notitle\n";
    return os.str();
}

}  // namespace

const std::vector<std::string>& run_columns() {
    static const std::vector<std::string> cols{"sx1",     "sy1",         "sz1",         "sx2",   "sy2",
                                               "sz2",     "pearson",     "concurrence", "mutual_info", "purity"};
    return cols;
}

ObservableSeries simulate(const Scenario& s, Backend backend) {
    s.validate_for(backend);
    std::vector<Row> rows = simulate_rows(s, backend);
    if (rows.size() != static_cast<std::size_t>(s.n_collisions) + 1)
        throw Error("simulate: backend returned " + std::to_string(rows.size()) + " rows");
    if (s.metrics.pearson) fill_pearson(rows, s.metrics.window);
    const QuenchSchedule schedule = s.quench_schedule();
    ObservableSeries out(run_columns());
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const long nl = static_cast<long>(n);
        out.append(nl, static_cast<double>(nl) * s.tau, std::vector<double>(rows[n].begin(), rows[n].end()),
                   schedule.record_label(nl));
    }
    return out;
}

std::vector<double> trailing_pearson(const std::vector<double>& a, const std::vector<double>& b, long window) {
    if (a.size() != b.size()) throw DimensionError("trailing_pearson: series lengths differ");
    std::vector<double> out(a.size(), kNaN);
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t n = w; n < a.size(); ++n) {
        const auto p = pearson(a, b, n - w, w);
        if (p) out[n] = *p;
    }
    return out;
}

std::optional<long> detect_transition(const ObservableSeries& series, double threshold) {
    if (!series.has_label("pearson")) throw ValidationError("detect_transition: series has no pearson column");
    return transition_in(row_indices(series), series.column("pearson"), threshold);
}

std::optional<double> final_pearson(const ObservableSeries& series) {
    if (!series.has_label("pearson")) return std::nullopt;
    const auto p = series.column("pearson");
    for (auto it = p.rbegin(); it != p.rend(); ++it)
        if (!std::isnan(*it)) return *it;
    return std::nullopt;
}

std::optional<double> mean_pearson_after(const ObservableSeries& series, long from) {
    if (!series.has_label("pearson")) return std::nullopt;
    return mean_from(row_indices(series), series.column("pearson"), from);
}

std::filesystem::path resolve_output_dir(const Scenario& s, const std::optional<std::filesystem::path>& override_dir) {
    if (override_dir) return *override_dir;
    if (const char* env = std::getenv("QSYNC_OUTPUT_DIR"); env && *env) return env;
    return s.output_directory;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ostringstream suffix;
    suffix << ".tmp-" << ::getpid() << "-" << std::hash<std::thread::id>{}(std::this_thread::get_id());
    std::filesystem::path tmp = path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string csv_with_provenance(const ObservableSeries& series, const Scenario& s) {
    std::ostringstream os;
    os << "# qsync " << QSYNC_VERSION_STRING << "\n";
    std::istringstream ini(s.to_ini());
    for (std::string line; std::getline(ini, line);) os << (line.empty() ? "#" : "# " + line) << "\n";
    series.write_csv(os);
    return os.str();
}

RunSummary run_scenario(const Scenario& scenario, const RunOptions& opts) {
    Scenario s = scenario;
    s.sweep.reset();
    s.validate();
    const auto dir = resolve_output_dir(s, opts.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const ObservableSeries series = simulate(s);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunSummary r;
    r.tag = s.name;
    r.backend = std::string(backend_name(s.backend));
    r.seed = s.seed;
    r.final_pearson = final_pearson(series);
    r.transition_n = s.metrics.pearson ? detect_transition(series, s.metrics.transition_threshold) : std::nullopt;
    r.wall_time_s = wall;
    r.csv_path = dir / (s.name + ".csv");
    write_file_atomic(r.csv_path, csv_with_provenance(series, s));
    write_file_atomic(dir / (s.name + ".json"), summary_json(r));
    if (s.gnuplot) write_file_atomic(dir / (s.name + ".gp"), gnuplot_run_script(r.csv_path.filename().string(), s.name));
    return r;
}

SweepSummary run_sweep(const Scenario& s, const RunOptions& opts) {
    s.validate();
    const auto dir = resolve_output_dir(s, opts.output_dir);
    const std::vector<RunDescriptor> runs = expand_sweep(s);

    std::vector<RunSummary> summaries(runs.size());
    std::vector<std::vector<double>> pearsons(runs.size()), sx1s(runs.size()), sx2s(runs.size());
    std::vector<std::exception_ptr> errors(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                const RunDescriptor& d = runs[i];
                const auto t0 = std::chrono::steady_clock::now();
                const ObservableSeries series = simulate(d.scenario);
                RunSummary r;
                r.tag = d.tag;
                r.backend = std::string(backend_name(d.scenario.backend));
                r.seed = d.seed;
                r.value = d.value;
                r.final_pearson = final_pearson(series);
                if (d.scenario.metrics.pearson)
                    r.transition_n = detect_transition(series, d.scenario.metrics.transition_threshold);
                r.csv_path = dir / (d.tag + ".csv");
                write_file_atomic(r.csv_path, csv_with_provenance(series, d.scenario));
                r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                summaries[i] = std::move(r);
                pearsons[i] = series.column("pearson");
                sx1s[i] = series.column("sx1");
                sx2s[i] = series.column("sx2");
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n_threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, runs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepSummary out;
    out.name = s.name;
    if (s.sweep) out.parameter = s.sweep->parameter;
    out.runs = summaries;
    const std::size_t n_values = (s.sweep && s.sweep->parameter) ? s.sweep->values.size() : 1;
    const std::size_t n_rows = static_cast<std::size_t>(s.n_collisions) + 1;
    std::vector<long> ns(n_rows);
    for (std::size_t n = 0; n < n_rows; ++n) ns[n] = static_cast<long>(n);
    const double threshold = s.metrics.transition_threshold;
    // Mean over the runs of value v, in run order; NaN entries are skipped.
    auto run_mean = [&](const std::vector<std::vector<double>>& per_run, std::size_t v) {
        std::vector<double> mean(n_rows, kNaN);
        for (std::size_t n = 0; n < n_rows; ++n) {
            double sum = 0.0;
            long count = 0;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                if (runs[i].value_index != v || std::isnan(per_run[i][n])) continue;
                sum += per_run[i][n];
                ++count;
            }
            if (count > 0) mean[n] = sum / static_cast<double>(count);
        }
        return mean;
    };
    for (std::size_t v = 0; v < n_values; ++v) {
        out.values.push_back(s.sweep && s.sweep->parameter ? s.sweep->values[v] : kNaN);
        std::vector<double> mean = run_mean(pearsons, v);
        const auto tr = transition_in(ns, mean, threshold);
        out.transition_n.push_back(tr);
        out.post_transition_mean.push_back(tr ? mean_from(ns, mean, *tr) : std::nullopt);
        out.mean_pearson.push_back(std::move(mean));

        std::vector<double> ens = s.metrics.pearson
                                      ? trailing_pearson(run_mean(sx1s, v), run_mean(sx2s, v), s.metrics.window)
                                      : std::vector<double>(n_rows, kNaN);
        const auto etr = transition_in(ns, ens, threshold);
        out.ensemble_transition_n.push_back(etr);
        out.ensemble_post_transition_mean.push_back(etr ? mean_from(ns, ens, *etr) : std::nullopt);
        out.ensemble_pearson.push_back(std::move(ens));

        long fired = 0, total = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (runs[i].value_index != v) continue;
            ++total;
            if (summaries[i].transition_n) ++fired;
        }
        out.run_transition_fraction.push_back(static_cast<double>(fired) / static_cast<double>(total));
    }

    const std::string column = out.parameter.value_or("value");
    std::ostringstream grid;
    grid << "n," << column << ",mean_pearson,ensemble_pearson\n";
    for (std::size_t v = 0; v < n_values; ++v)
        for (std::size_t n = 0; n < n_rows; ++n)
            grid << n << "," << format_real(out.values[v]) << "," << format_real(out.mean_pearson[v][n]) << ","
                 << format_real(out.ensemble_pearson[v][n]) << "\n";
    out.grid_path = dir / (s.name + "_grid.csv");
    write_file_atomic(out.grid_path, grid.str());
    out.summary_path = dir / (s.name + "_sweep.json");
    write_file_atomic(out.summary_path, summary_json(out));
    if (s.gnuplot)
        write_file_atomic(dir / (s.name + "_grid.gp"), gnuplot_grid_script(out.grid_path.filename().string(), column));
    return out;
}

CompareSummary run_compare(const Scenario& scenario, const std::vector<Backend>& backends, const RunOptions& opts) {
    if (backends.size() < 2) throw ValidationError("compare: need at least two backends");
    Scenario s = scenario;
    s.sweep.reset();
    const auto dir = resolve_output_dir(s, opts.output_dir);
    for (Backend b : backends) s.validate_for(b);

    CompareSummary out;
    out.name = s.name;
    std::vector<ObservableSeries> results;
    for (Backend b : backends) {
        Scenario sb = s;
        sb.backend = b;
        results.push_back(simulate(sb, b));
        out.backends.emplace_back(backend_name(b));
        const auto path = dir / (s.name + "_" + std::string(backend_name(b)) + ".csv");
        write_file_atomic(path, csv_with_provenance(results.back(), sb));
        out.csv_paths.push_back(path);
    }
    for (const auto& label : run_columns()) {
        double worst = -1.0;
        for (std::size_t a = 0; a < results.size(); ++a) {
            for (std::size_t b = a + 1; b < results.size(); ++b) {
                const auto ca = results[a].column(label), cb = results[b].column(label);
                for (std::size_t n = 0; n < std::min(ca.size(), cb.size()); ++n)
                    if (!std::isnan(ca[n]) && !std::isnan(cb[n])) worst = std::max(worst, std::abs(ca[n] - cb[n]));
            }
        }
        if (worst >= 0.0) out.max_deviation[label] = worst;
    }
    out.summary_path = dir / (s.name + "_compare.json");
    write_file_atomic(out.summary_path, summary_json(out));
    return out;
}

std::string summary_json(const RunSummary& r) {
    json j;
    j["version"] = QSYNC_VERSION_STRING;
    j["run"] = run_json(r);
    return j.dump(2) + "\n";
}

std::string summary_json(const SweepSummary& s) {
    json j;
    j["version"] = QSYNC_VERSION_STRING;
    j["name"] = s.name;
    j["parameter"] = s.parameter ? json(*s.parameter) : json(nullptr);
    json per_value = json::array();
    for (std::size_t v = 0; v < s.values.size(); ++v) {
        json e;
        e["value"] = std::isnan(s.values[v]) ? json(nullptr) : json(s.values[v]);
        e["transition_n"] = opt_json(s.transition_n[v]);
        e["post_transition_mean_pearson"] = opt_json(s.post_transition_mean[v]);
        e["ensemble_transition_n"] = opt_json(s.ensemble_transition_n[v]);
        e["ensemble_post_transition_mean_pearson"] = opt_json(s.ensemble_post_transition_mean[v]);
        e["run_transition_fraction"] = s.run_transition_fraction[v];
        per_value.push_back(e);
    }
    j["values"] = per_value;
    j["grid"] = s.grid_path.filename().string();
    json runs = json::array();
    for (const auto& r : s.runs) runs.push_back(run_json(r));
    j["runs"] = runs;
    return j.dump(2) + "\n";
}

std::string summary_json(const CompareSummary& c) {
    json j;
    j["version"] = QSYNC_VERSION_STRING;
    j["name"] = c.name;
    j["backends"] = c.backends;
    json dev;
    for (const auto& [k, v] : c.max_deviation) dev[k] = v;
    j["max_deviation"] = dev;
    json files = json::array();
    for (const auto& p : c.csv_paths) files.push_back(p.filename().string());
    j["csv"] = files;
    return j.dump(2) + "\n";
}

}  // namespace qsync
