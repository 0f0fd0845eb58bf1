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

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "retrosem/data.hpp"
#include "retrosem/error.hpp"
#include "retrosem/metrics.hpp"
#include "retrosem/pipeline.hpp"
#include "retrosem/retrosem.h"

using nlohmann::json;

struct rs_session {
  json config;
  std::string out_dir = ".";
  json report;
};

struct rs_dataset {
  std::vector<retrosem::data::MrcExample> examples;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
rs_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const retrosem::Error& e) {
    last_error = e.what();
    return static_cast<rs_status>(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return RS_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RS_ERR_UNKNOWN;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RS_ERR_UNKNOWN;
  }
}

rs_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return RS_ERR_INPUT;
}

}  // namespace

extern "C" {

const char* rs_version(void) { return retrosem::kVersion; }

const char* rs_status_string(rs_status status) {
  switch (status) {
    case RS_OK: return "ok";
    case RS_ERR_INPUT: return "invalid input";
    case RS_ERR_CONFIG: return "invalid configuration";
    case RS_ERR_DIMENSION: return "dimension mismatch";
    case RS_ERR_INDEX: return "index out of range";
    case RS_ERR_NUMERIC_DOMAIN: return "numeric domain error";
    case RS_ERR_DATA: return "invalid data";
    case RS_ERR_IO: return "i/o failure";
    case RS_ERR_CONTRACT: return "contract violation";
    case RS_ERR_PARSE: return "parse error";
    case RS_ERR_INVENTORY: return "unknown label";
    case RS_ERR_DEGENERATE: return "degenerate input";
    case RS_ERR_CHECK_FAILED: return "check failed";
    default: return "unknown error";
  }
}

const char* rs_last_error(void) { return last_error.c_str(); }

void rs_string_free(char* s) { std::free(s); }

rs_status rs_session_create(const char* config_path, rs_session** out) {
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const retrosem::RunConfig config = config_path == nullptr
                                           ? retrosem::RunConfig{}
                                           : retrosem::load_run_config(config_path);
    auto* s = new rs_session;
    s->config = retrosem::to_json_value(config);
    *out = s;
    return RS_OK;
  });
}

void rs_session_destroy(rs_session* session) { delete session; }

rs_status rs_session_set(rs_session* session, const char* assignment) {
  if (session == nullptr) return null_arg("session");
  if (assignment == nullptr) return null_arg("assignment");
  return guarded([&] {
    json next = session->config;
    retrosem::apply_override(next, assignment);
    retrosem::config_from_json(next);  // reject values that fail validation
    session->config = std::move(next);
    return RS_OK;
  });
}

rs_status rs_session_set_seed(rs_session* session, uint64_t seed) {
  if (session == nullptr) return null_arg("session");
  session->config["seed"] = seed;
  last_error.clear();
  return RS_OK;
}

rs_status rs_session_set_out_dir(rs_session* session, const char* out_dir) {
  if (session == nullptr) return null_arg("session");
  if (out_dir == nullptr || *out_dir == '\0') return null_arg("out_dir");
  session->out_dir = out_dir;
  last_error.clear();
  return RS_OK;
}

rs_status rs_session_config_json(const rs_session* session, char** json_out) {
  if (session == nullptr) return null_arg("session");
  if (json_out == nullptr) return null_arg("json_out");
  return guarded([&] {
    *json_out = dup(session->config.dump(2));
    return RS_OK;
  });
}

rs_status rs_session_run(rs_session* session, const char* subcommand, char** text_out) {
  if (session == nullptr) return null_arg("session");
  if (subcommand == nullptr) return null_arg("subcommand");
  if (text_out != nullptr) *text_out = nullptr;
  return guarded([&] {
    const retrosem::RunConfig config = retrosem::config_from_json(session->config);
    const auto result = retrosem::run_subcommand(subcommand, config, session->out_dir);
    session->report = result.report;
    if (text_out != nullptr) *text_out = dup(result.text);
    if (result.exit_code != 0) {
      last_error = std::string(subcommand) + ": one or more checks failed";
      return RS_ERR_CHECK_FAILED;
    }
    return RS_OK;
  });
}

rs_status rs_session_report_json(const rs_session* session, char** json_out) {
  if (session == nullptr) return null_arg("session");
  if (json_out == nullptr) return null_arg("json_out");
  return guarded([&] {
    *json_out = dup(session->report.dump(2));
    return RS_OK;
  });
}

rs_status rs_dataset_load(const char* path, rs_dataset** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* d = new rs_dataset;
    try {
      d->examples = retrosem::data::load_squad_v2(path);
    } catch (...) {
      delete d;
      throw;
    }
    *out = d;
    return RS_OK;
  });
}

void rs_dataset_destroy(rs_dataset* dataset) { delete dataset; }

size_t rs_dataset_size(const rs_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->examples.size();
}

rs_status rs_dataset_stats(const rs_dataset* dataset, size_t* articles, size_t* passages,
                           size_t* questions, size_t* unanswerable) {
  if (dataset == nullptr) return null_arg("dataset");
  return guarded([&] {
    const auto s = retrosem::data::dataset_stats(dataset->examples);
    if (articles != nullptr) *articles = s.articles;
    if (passages != nullptr) *passages = s.passages;
    if (questions != nullptr) *questions = s.questions;
    if (unanswerable != nullptr) *unanswerable = s.unanswerable;
    return RS_OK;
  });
}

rs_status rs_evaluate_file(const rs_dataset* gold, const char* predictions_path,
                           char** json_out) {
  if (gold == nullptr) return null_arg("gold");
  if (predictions_path == nullptr) return null_arg("predictions_path");
  if (json_out == nullptr) return null_arg("json_out");
  return guarded([&] {
    const auto preds = retrosem::metrics::read_predictions(predictions_path);
    const auto report = retrosem::metrics::evaluate_predictions(preds, gold->examples);
    *json_out = dup(retrosem::metrics::report_json(report).dump(2));
    return RS_OK;
  });
}

rs_status rs_paired_t_test(const double* a, const double* b, size_t n, double* t, double* df,
                           double* p) {
  if ((a == nullptr || b == nullptr) && n > 0) return null_arg("a and b");
  return guarded([&] {
    const std::vector<double> va(a, a + n), vb(b, b + n);
    const auto r = retrosem::metrics::paired_t_test(va, vb);
    if (t != nullptr) *t = r.t;
    if (df != nullptr) *df = r.df;
    if (p != nullptr) *p = r.p;
    return RS_OK;
  });
}

}  // extern "C"
