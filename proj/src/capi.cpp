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

#include "qsync/qsync.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "qsync/error.hpp"
#include "qsync/runner.hpp"
#include "qsync/scenario.hpp"

struct qsync_scenario {
    qsync::Scenario scenario;
};

struct qsync_result {
    std::string summary;
    qsync::ObservableSeries series;
    std::optional<long> transition;
};

namespace {

thread_local std::string g_last_error;

struct ArgumentError {
    std::string message;
};

template <class F>
qsync_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return QSYNC_OK;
    } catch (const ArgumentError& e) {
        g_last_error = e.message;
        return QSYNC_ERR_ARGUMENT;
    } catch (const qsync::ValidationError& e) {
        g_last_error = e.what();
        return QSYNC_ERR_VALIDATION;
    } catch (const qsync::DimensionError& e) {
        g_last_error = e.what();
        return QSYNC_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return QSYNC_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QSYNC_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return QSYNC_ERR_RUNTIME;
    }
}

template <class T>
const T& deref(const T* p, const char* what) {
    if (!p) throw ArgumentError{std::string(what) + " is null"};
    return *p;
}

void require_out(const void* p, const char* what) {
    if (!p) throw ArgumentError{std::string(what) + " is null"};
}

void copy_out(const std::string& s, char* buffer, size_t capacity, size_t* length) {
    if (length) *length = s.size();
    if (!buffer || capacity == 0) {
        if (!length) throw ArgumentError{"buffer and length are both null"};
        return;
    }
    const size_t n = std::min(capacity - 1, s.size());
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
}

std::vector<qsync::Backend> parse_backend_list(const char* text) {
    std::vector<qsync::Backend> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(qsync::parse_backend(cur));
        cur.clear();
    };
    for (const char* c = text; *c; ++c) {
        if (*c == ',') flush();
        else if (*c != ' ') cur.push_back(*c);
    }
    flush();
    return out;
}

std::optional<std::filesystem::path> dir_arg(const char* d) {
    if (!d || !*d) return std::nullopt;
    return std::filesystem::path(d);
}

}  // namespace

extern "C" {

const char* qsync_version(void) { return QSYNC_VERSION_STRING; }

const char* qsync_last_error(void) { return g_last_error.c_str(); }

qsync_status qsync_scenario_load(const char* path, qsync_scenario** out) {
    return guarded([&] {
        require_out(out, "out");
        require_out(path, "path");
        *out = nullptr;
        *out = new qsync_scenario{qsync::parse_scenario(path)};
    });
}

qsync_status qsync_scenario_parse(const char* text, qsync_scenario** out) {
    return guarded([&] {
        require_out(out, "out");
        require_out(text, "text");
        *out = nullptr;
        *out = new qsync_scenario{qsync::parse_scenario_text(text)};
    });
}

void qsync_scenario_free(qsync_scenario* scenario) { delete scenario; }

qsync_status qsync_scenario_resolved(const qsync_scenario* scenario, char* buffer, size_t capacity, size_t* length) {
    return guarded([&] { copy_out(deref(scenario, "scenario").scenario.to_ini(), buffer, capacity, length); });
}

qsync_status qsync_scenario_name(const qsync_scenario* scenario, char* buffer, size_t capacity, size_t* length) {
    return guarded([&] { copy_out(deref(scenario, "scenario").scenario.name, buffer, capacity, length); });
}

qsync_status qsync_scenario_backend(const qsync_scenario* scenario, char* buffer, size_t capacity, size_t* length) {
    return guarded([&] {
        copy_out(std::string(qsync::backend_name(deref(scenario, "scenario").scenario.backend)), buffer, capacity,
                 length);
    });
}

qsync_status qsync_scenario_set_backend(qsync_scenario* scenario, const char* backend) {
    return guarded([&] {
        require_out(scenario, "scenario");
        require_out(backend, "backend");
        qsync::Backend b;
        try {
            b = qsync::parse_backend(backend);
        } catch (const qsync::ValidationError& e) {
            throw ArgumentError{e.what()};
        }
        qsync::Scenario copy = scenario->scenario;
        copy.backend = b;
        copy.validate();
        scenario->scenario = std::move(copy);
    });
}

qsync_status qsync_scenario_has_sweep(const qsync_scenario* scenario, int* has_sweep) {
    return guarded([&] {
        require_out(has_sweep, "has_sweep");
        *has_sweep = deref(scenario, "scenario").scenario.sweep.has_value() ? 1 : 0;
    });
}

qsync_status qsync_scenario_run_count(const qsync_scenario* scenario, size_t* count) {
    return guarded([&] {
        require_out(count, "count");
        const auto& s = deref(scenario, "scenario").scenario;
        if (!s.sweep) {
            *count = 1;
            return;
        }
        const size_t values = s.sweep->parameter ? s.sweep->values.size() : 1;
        *count = values * static_cast<size_t>(s.sweep->runs);
    });
}

qsync_status qsync_run(const qsync_scenario* scenario, const char* output_dir, qsync_result** out) {
    return guarded([&] {
        require_out(out, "out");
        *out = nullptr;
        const auto& s = deref(scenario, "scenario").scenario;
        qsync::RunOptions opts;
        opts.output_dir = dir_arg(output_dir);
        const qsync::RunSummary r = qsync::run_scenario(s, opts);
        auto* res = new qsync_result;
        res->summary = qsync::summary_json(r);
        res->transition = r.transition_n;
        *out = res;
    });
}

qsync_status qsync_sweep(const qsync_scenario* scenario, const char* output_dir, unsigned threads,
                         qsync_result** out) {
    return guarded([&] {
        require_out(out, "out");
        *out = nullptr;
        const auto& s = deref(scenario, "scenario").scenario;
        qsync::RunOptions opts;
        opts.output_dir = dir_arg(output_dir);
        opts.threads = threads;
        const qsync::SweepSummary r = qsync::run_sweep(s, opts);
        auto* res = new qsync_result;
        res->summary = qsync::summary_json(r);
        *out = res;
    });
}

qsync_status qsync_compare(const qsync_scenario* scenario, const char* backends, const char* output_dir,
                           qsync_result** out) {
    return guarded([&] {
        require_out(out, "out");
        require_out(backends, "backends");
        *out = nullptr;
        const auto& s = deref(scenario, "scenario").scenario;
        std::vector<qsync::Backend> list;
        try {
            list = parse_backend_list(backends);
        } catch (const qsync::ValidationError& e) {
            throw ArgumentError{e.what()};
        }
        if (list.size() < 2) throw ArgumentError{"compare needs at least two backends"};
        qsync::RunOptions opts;
        opts.output_dir = dir_arg(output_dir);
        const qsync::CompareSummary r = qsync::run_compare(s, list, opts);
        auto* res = new qsync_result;
        res->summary = qsync::summary_json(r);
        *out = res;
    });
}

qsync_status qsync_simulate(const qsync_scenario* scenario, qsync_result** out) {
    return guarded([&] {
        require_out(out, "out");
        *out = nullptr;
        const auto& s = deref(scenario, "scenario").scenario;
        auto* res = new qsync_result;
        try {
            res->series = qsync::simulate(s);
            if (s.metrics.pearson) res->transition = qsync::detect_transition(res->series, s.metrics.transition_threshold);
        } catch (...) {
            delete res;
            throw;
        }
        *out = res;
    });
}

void qsync_result_free(qsync_result* result) { delete result; }

qsync_status qsync_result_summary_json(const qsync_result* result, char* buffer, size_t capacity, size_t* length) {
    return guarded([&] { copy_out(deref(result, "result").summary, buffer, capacity, length); });
}

qsync_status qsync_result_shape(const qsync_result* result, size_t* rows, size_t* columns) {
    return guarded([&] {
        require_out(rows, "rows");
        require_out(columns, "columns");
        const auto& r = deref(result, "result");
        *rows = r.series.size();
        *columns = r.series.labels().size();
    });
}

qsync_status qsync_result_column_name(const qsync_result* result, size_t column, char* buffer, size_t capacity,
                                      size_t* length) {
    return guarded([&] {
        const auto& labels = deref(result, "result").series.labels();
        if (column >= labels.size()) throw ArgumentError{"column index out of range"};
        copy_out(labels[column], buffer, capacity, length);
    });
}

qsync_status qsync_result_value(const qsync_result* result, size_t row, size_t column, double* value) {
    return guarded([&] {
        require_out(value, "value");
        const auto& s = deref(result, "result").series;
        if (row >= s.size()) throw ArgumentError{"row index out of range"};
        if (column >= s.labels().size()) throw ArgumentError{"column index out of range"};
        *value = s.records()[row].values[column];
    });
}

qsync_status qsync_result_collision(const qsync_result* result, size_t row, long* n, double* t) {
    return guarded([&] {
        const auto& s = deref(result, "result").series;
        if (row >= s.size()) throw ArgumentError{"row index out of range"};
        if (n) *n = s.records()[row].n;
        if (t) *t = s.records()[row].t;
    });
}

qsync_status qsync_result_transition(const qsync_result* result, long* n, int* found) {
    return guarded([&] {
        require_out(found, "found");
        const auto& r = deref(result, "result");
        *found = r.transition ? 1 : 0;
        if (n) *n = r.transition.value_or(-1);
    });
}

}  // extern "C"
