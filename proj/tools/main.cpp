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

// Command-line front end. Everything goes through the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "retrosem/retrosem.h"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::int64_t seed = -1;
  std::string out = ".";
  bool json = false;
  bool print_config = false;
};

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"gen-fixtures", "write synthetic train/dev/test MRC sets, annotations and an SRL corpus"},
    {"build-vocab", "build the subword vocabulary from the training split and SRL corpus"},
    {"train-srl", "k-fold SRL training; writes fold checkpoints and the fold report"},
    {"annotate", "tag every question and context with the SRL fold taggers"},
    {"train-sketchy", "train the answerability classifier"},
    {"train-intensive", "train the span predictor"},
    {"tune-verifier", "grid-search the verification weights and threshold"},
    {"predict", "write id -> answer predictions for the configured split"},
    {"evaluate", "score predictions with exact match and token F1"},
    {"gradcheck", "run the gradient check suite"},
    {"stats", "dataset statistics of each split present"},
    {"significance", "paired t-test of per-question F1 against baseline predictions"},
};

int fail(rs_status status) {
  std::cerr << "error: " << rs_status_string(status);
  const std::string detail = rs_last_error();
  if (!detail.empty()) std::cerr << ": " << detail;
  std::cerr << "\n";
  return static_cast<int>(status);
}

int run(const std::string& command, const Options& opt) {
  rs_session* session = nullptr;
  rs_status st = rs_session_create(opt.config.empty() ? nullptr : opt.config.c_str(), &session);
  if (st != RS_OK) return fail(st);
  struct Closer {
    rs_session* s;
    ~Closer() { rs_session_destroy(s); }
  } closer{session};

  for (const auto& s : opt.sets) {
    if ((st = rs_session_set(session, s.c_str())) != RS_OK) return fail(st);
  }
  if (opt.seed >= 0) {
    if ((st = rs_session_set_seed(session, static_cast<std::uint64_t>(opt.seed))) != RS_OK) {
      return fail(st);
    }
  }
  if ((st = rs_session_set_out_dir(session, opt.out.c_str())) != RS_OK) return fail(st);

  if (opt.print_config) {
    char* cfg = nullptr;
    if ((st = rs_session_config_json(session, &cfg)) != RS_OK) return fail(st);
    std::cout << cfg << "\n";
    rs_string_free(cfg);
    return 0;
  }

  char* text = nullptr;
  st = rs_session_run(session, command.c_str(), &text);
  if (opt.json) {
    char* report = nullptr;
    if (rs_session_report_json(session, &report) == RS_OK) {
      std::cout << report << "\n";
      rs_string_free(report);
    }
  } else if (text != nullptr) {
    std::cout << text;
  }
  rs_string_free(text);
  return st == RS_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrospective reader with semantic role features"};
  app.set_version_flag("--version", std::string(rs_version()));
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  for (const auto& [name, help] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--set", opt.sets, "override a config value, KEY=VALUE with a dotted key")
        ->take_all();
    sub->add_option("--seed", opt.seed, "global seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "output directory (default .)");
    sub->add_flag("--json", opt.json, "print the JSON report instead of the summary");
    sub->add_flag("--print-config", opt.print_config, "print the effective config and exit");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return run(chosen, opt);
}
