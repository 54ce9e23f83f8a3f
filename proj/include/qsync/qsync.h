/* Copyright 2026 The qsync Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of libqsync.
 *
 * Every fallible call returns a qsync_status. On failure the message is
 * available from qsync_last_error() on the same thread until the next call.
 * Handles are opaque; release them with the matching *_free function.
 * String outputs use a caller buffer: the call writes at most `capacity`
 * bytes including the terminator and always stores the full length
 * (without terminator) in *length when `length` is non-null. */

#ifndef QSYNC_QSYNC_H
#define QSYNC_QSYNC_H

#include <stddef.h>
#include <stdint.h>

#if defined(QSYNC_BUILDING_LIBRARY)
#define QSYNC_API __attribute__((visibility("default")))
#else
#define QSYNC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qsync_status {
    QSYNC_OK = 0,
    QSYNC_ERR_VALIDATION = 1, /* bad scenario or physical parameters */
    QSYNC_ERR_RUNTIME = 2,    /* numerical or I/O failure during a run */
    QSYNC_ERR_ARGUMENT = 3    /* null handle, bad index, unknown name */
} qsync_status;

typedef struct qsync_scenario qsync_scenario;
typedef struct qsync_result qsync_result;

QSYNC_API const char* qsync_version(void);
QSYNC_API const char* qsync_last_error(void);

/* Scenarios */
QSYNC_API qsync_status qsync_scenario_load(const char* path, qsync_scenario** out);
QSYNC_API qsync_status qsync_scenario_parse(const char* text, qsync_scenario** out);
QSYNC_API void qsync_scenario_free(qsync_scenario* scenario);
/* Canonical INI text with all defaults filled in. */
QSYNC_API qsync_status qsync_scenario_resolved(const qsync_scenario* scenario, char* buffer, size_t capacity,
                                               size_t* length);
QSYNC_API qsync_status qsync_scenario_name(const qsync_scenario* scenario, char* buffer, size_t capacity,
                                           size_t* length);
QSYNC_API qsync_status qsync_scenario_backend(const qsync_scenario* scenario, char* buffer, size_t capacity,
                                              size_t* length);
QSYNC_API qsync_status qsync_scenario_set_backend(qsync_scenario* scenario, const char* backend);
/* 1 if the scenario has a [sweep] section, else 0. */
QSYNC_API qsync_status qsync_scenario_has_sweep(const qsync_scenario* scenario, int* has_sweep);
/* Number of runs the sweep expands to (1 without a sweep). */
QSYNC_API qsync_status qsync_scenario_run_count(const qsync_scenario* scenario, size_t* count);

/* Runs. `output_dir` may be null to use $QSYNC_OUTPUT_DIR or the scenario's
 * [output] directory. `threads` = 0 picks the hardware concurrency. */
QSYNC_API qsync_status qsync_run(const qsync_scenario* scenario, const char* output_dir, qsync_result** out);
QSYNC_API qsync_status qsync_sweep(const qsync_scenario* scenario, const char* output_dir, unsigned threads,
                                   qsync_result** out);
/* `backends` is a comma-separated list such as "qcm,lindblad". */
QSYNC_API qsync_status qsync_compare(const qsync_scenario* scenario, const char* backends, const char* output_dir,
                                     qsync_result** out);
/* Simulation only: fills the result table without writing files. */
QSYNC_API qsync_status qsync_simulate(const qsync_scenario* scenario, qsync_result** out);

/* Results */
QSYNC_API void qsync_result_free(qsync_result* result);
QSYNC_API qsync_status qsync_result_summary_json(const qsync_result* result, char* buffer, size_t capacity,
                                                 size_t* length);
/* Run table of qsync_run and qsync_simulate (empty for sweeps and
 * comparisons). Columns exclude n, t and phase. */
QSYNC_API qsync_status qsync_result_shape(const qsync_result* result, size_t* rows, size_t* columns);
QSYNC_API qsync_status qsync_result_column_name(const qsync_result* result, size_t column, char* buffer,
                                                size_t capacity, size_t* length);
QSYNC_API qsync_status qsync_result_value(const qsync_result* result, size_t row, size_t column, double* value);
QSYNC_API qsync_status qsync_result_collision(const qsync_result* result, size_t row, long* n, double* t);
/* Transition collision index; *found = 0 when none was detected. */
QSYNC_API qsync_status qsync_result_transition(const qsync_result* result, long* n, int* found);

#ifdef __cplusplus
}
#endif

#endif /* QSYNC_QSYNC_H */
