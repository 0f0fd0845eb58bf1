// Copyright 2026 The retrosem Authors.
//
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

#ifndef RETROSEM_RETROSEM_H_
#define RETROSEM_RETROSEM_H_

/* C interface to the retrosem library. All strings are UTF-8. Functions
 * return an rs_status; on failure rs_last_error() describes the most recent
 * error raised on the calling thread. Strings handed out by the library are
 * released with rs_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RS_API __declspec(dllexport)
#else
#define RS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
  RS_OK = 0,
  RS_ERR_INPUT = 1,
  RS_ERR_CONFIG = 2,
  RS_ERR_DIMENSION = 3,
  RS_ERR_INDEX = 4,
  RS_ERR_NUMERIC_DOMAIN = 5,
  RS_ERR_DATA = 6,
  RS_ERR_IO = 7,
  RS_ERR_CONTRACT = 8,
  RS_ERR_PARSE = 9,
  RS_ERR_INVENTORY = 10,
  RS_ERR_DEGENERATE = 11,
  RS_ERR_CHECK_FAILED = 12, /* ran to completion but a check did not pass */
  RS_ERR_UNKNOWN = 99
} rs_status;

typedef struct rs_session rs_session;
typedef struct rs_dataset rs_dataset;

RS_API const char* rs_version(void);
RS_API const char* rs_status_string(rs_status status);
/* Message of the last failure on this thread, "" if none. Valid until the
 * next library call on the same thread. */
RS_API const char* rs_last_error(void);
RS_API void rs_string_free(char* s);

/* A session holds one run configuration. `config_path` may be NULL for the
 * built-in defaults. */
RS_API rs_status rs_session_create(const char* config_path, rs_session** out);
RS_API void rs_session_destroy(rs_session* session);
/* Dotted-key override, e.g. "encoder.layers=1". */
RS_API rs_status rs_session_set(rs_session* session, const char* assignment);
RS_API rs_status rs_session_set_seed(rs_session* session, uint64_t seed);
RS_API rs_status rs_session_set_out_dir(rs_session* session, const char* out_dir);
/* Effective configuration as JSON. */
RS_API rs_status rs_session_config_json(const rs_session* session, char** json_out);
/* Runs one subcommand. The summary text, when `text_out` is not NULL,
 * receives a string to free with rs_string_free. */
RS_API rs_status rs_session_run(rs_session* session, const char* subcommand, char** text_out);
/* JSON report of the last successful run. */
RS_API rs_status rs_session_report_json(const rs_session* session, char** json_out);

RS_API rs_status rs_dataset_load(const char* path, rs_dataset** out);
RS_API void rs_dataset_destroy(rs_dataset* dataset);
RS_API size_t rs_dataset_size(const rs_dataset* dataset);
RS_API rs_status rs_dataset_stats(const rs_dataset* dataset, size_t* articles, size_t* passages,
                                  size_t* questions, size_t* unanswerable);

/* Scores a predictions file (id -> answer text) against a dataset and
 * returns the evaluation report as JSON. */
RS_API rs_status rs_evaluate_file(const rs_dataset* gold, const char* predictions_path,
                                  char** json_out);

RS_API rs_status rs_paired_t_test(const double* a, const double* b, size_t n, double* t,
                                  double* df, double* p);

#ifdef __cplusplus
}
#endif

#endif /* RETROSEM_RETROSEM_H_ */
