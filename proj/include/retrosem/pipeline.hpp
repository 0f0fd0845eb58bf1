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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/data.hpp"
#include "retrosem/encoder.hpp"
#include "retrosem/reader.hpp"
#include "retrosem/sembert.hpp"
#include "retrosem/srl.hpp"

namespace retrosem {

inline constexpr const char* kVersion = "0.1.0";

/// Artifact locations. Relative entries resolve against `root`, and an empty
/// root means the run's output directory.
struct RunPaths {
  std::string root;
  std::string train = "train.json";
  std::string dev = "dev.json";
  std::string test = "test.json";
  std::string srl = "srl.jsonl";
  std::string vocab = "vocab.txt";
  std::string srl_models = "srl_models";
  std::string annotations = "annotations.jsonl";
  std::string sketchy = "sketchy.ckpt";
  std::string intensive = "intensive.ckpt";
  std::string verifier = "verifier.json";
  std::string predictions = "predictions.json";
  std::string baseline_predictions = "baseline_predictions.json";
  std::string predict_split = "test";  // "train", "dev" or "test"
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunPaths, root, train, dev, test, srl, vocab,
                                                srl_models, annotations, sketchy, intensive,
                                                verifier, predictions, baseline_predictions,
                                                predict_split)

struct TokenizerConfig {
  std::size_t min_frequency = 1;
  std::size_t max_vocab = 30000;
  std::size_t max_seq_length = 512;
  std::size_t max_query_length = 64;

  PairLimits limits() const { return {max_seq_length, max_query_length}; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TokenizerConfig, min_frequency, max_vocab,
                                                max_seq_length, max_query_length)

struct VerifierConfig {
  reader::VerifierGrid grid;
  reader::VerifierParams params;  // used when no tuned verifier file exists
  std::string tune_split = "dev";
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VerifierConfig, grid, params, tune_split)

struct FixtureRunConfig {
  data::FixtureConfig train{};
  std::size_t dev_size = 32;
  std::size_t test_size = 32;
  std::size_t srl_sentences = 40;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FixtureRunConfig, train, dev_size, test_size,
                                                srl_sentences)

struct GradcheckRunConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double tolerance = 1e-4;
  std::string filter;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GradcheckRunConfig, seeds, tolerance, filter)

struct RunConfig {
  std::uint64_t seed = 13;
  RunPaths paths;
  TokenizerConfig tokenizer;
  EncoderConfig encoder;
  SemanticConfig semantic;
  bool use_semantics = true;
  srl::SrlTrainConfig srl;
  reader::ReaderTrainConfig sketchy = reader::ReaderTrainConfig::sketchy_defaults();
  reader::ReaderTrainConfig intensive = reader::ReaderTrainConfig::intensive_defaults();
  VerifierConfig verifier;
  FixtureRunConfig fixture;
  GradcheckRunConfig gradcheck;

  void validate() const;
};

nlohmann::json to_json_value(const RunConfig& config);

/// Defaults overlaid with `overrides`. Keys absent from the default schema
/// raise ConfigError naming their dotted path.
RunConfig config_from_json(const nlohmann::json& overrides);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies one `a.b.c=value` override. The value is parsed as JSON when it
/// parses, otherwise taken as a string. Unknown keys raise ConfigError.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Canonical (sorted-key, compact) dump used for hashing.
std::string canonical_config(const RunConfig& config);

const std::vector<std::string>& subcommands();

struct RunResult {
  int exit_code = 0;
  nlohmann::json report;
  std::string text;  // human-readable summary printed by the CLI
  std::vector<std::filesystem::path> outputs;
};

/// Runs one subcommand, writing its artifacts under `out_dir` followed by a
/// `manifest-<subcommand>.json` listing the config hash, seed, input file
/// hashes and outputs. Every file is written atomically.
RunResult run_subcommand(const std::string& subcommand, const RunConfig& config,
                         const std::filesystem::path& out_dir);

}  // namespace retrosem
