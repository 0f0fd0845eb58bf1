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

#include "retrosem/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "retrosem/error.hpp"
#include "retrosem/gradsuite.hpp"
#include "retrosem/io.hpp"
#include "retrosem/metrics.hpp"

namespace retrosem {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- config ----------------------------------------------------------------

void RunConfig::validate() const {
  EncoderConfig shape = encoder;
  if (shape.vocab_size == 0) shape.vocab_size = 1;  // filled in from the vocabulary at run time
  shape.validate();
  semantic.validate();
  srl.validate();
  sketchy.validate();
  intensive.validate();
  fixture.train.validate();
  if (sketchy.kind != "sketchy") throw ConfigError("sketchy.kind must be \"sketchy\"");
  if (intensive.kind != "intensive") throw ConfigError("intensive.kind must be \"intensive\"");
  if (tokenizer.max_vocab < Vocabulary::special_tokens().size()) {
    throw ConfigError("tokenizer.max_vocab is smaller than the special-token set");
  }
  for (const auto& split : {paths.predict_split, verifier.tune_split}) {
    if (split != "train" && split != "dev" && split != "test") {
      throw ConfigError("split must be train, dev or test, got \"" + split + "\"");
    }
  }
  if (gradcheck.seeds.empty()) throw ConfigError("gradcheck.seeds must not be empty");
  if (!(gradcheck.tolerance > 0.0)) throw ConfigError("gradcheck.tolerance must be > 0");
}

json to_json_value(const RunConfig& c) {
  return json{{"seed", c.seed},          {"paths", c.paths},
              {"tokenizer", c.tokenizer}, {"encoder", c.encoder},
              {"semantic", c.semantic},   {"use_semantics", c.use_semantics},
              {"srl", c.srl},             {"sketchy", c.sketchy},
              {"intensive", c.intensive}, {"verifier", c.verifier},
              {"fixture", c.fixture},     {"gradcheck", c.gradcheck}};
}

namespace {

void check_keys(const json& given, const json& schema, const std::string& path) {
  if (!given.is_object()) return;
  if (!schema.is_object()) {
    throw ConfigError("config key '" + path + "' expects a scalar or list, got an object");
  }
  for (const auto& [key, value] : given.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    check_keys(value, schema.at(key), here);
  }
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.paths = j.at("paths").get<RunPaths>();
    c.tokenizer = j.at("tokenizer").get<TokenizerConfig>();
    c.encoder = j.at("encoder").get<EncoderConfig>();
    c.semantic = j.at("semantic").get<SemanticConfig>();
    c.use_semantics = j.at("use_semantics").get<bool>();
    c.srl = j.at("srl").get<srl::SrlTrainConfig>();
    c.sketchy = j.at("sketchy").get<reader::ReaderTrainConfig>();
    c.intensive = j.at("intensive").get<reader::ReaderTrainConfig>();
    c.verifier = j.at("verifier").get<VerifierConfig>();
    c.fixture = j.at("fixture").get<FixtureRunConfig>();
    c.gradcheck = j.at("gradcheck").get<GradcheckRunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

RunConfig config_from_json(const json& overrides) {
  json base = to_json_value(RunConfig{});
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(overrides, base, "");
    base.merge_patch(overrides);
  }
  return parse_config(base);
}

RunConfig load_run_config(const fs::path& path) {
  try {
    return config_from_json(io::read_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json* node = &config;
  std::istringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    node = &(*node)[part];
  }
  if (node->is_object()) throw ConfigError("config key '" + key + "' is a section, not a value");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  *node = std::move(value);
}

std::string canonical_config(const RunConfig& config) { return to_json_value(config).dump(); }

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "build-vocab", "gen-fixtures",  "train-srl",     "annotate", "train-sketchy",
      "train-intensive", "tune-verifier", "predict", "evaluate", "gradcheck",
      "stats",       "significance"};
  return names;
}

// ---- runs ------------------------------------------------------------------

namespace {

class Run {
 public:
  Run(std::string name, const RunConfig& config, fs::path out_dir)
      : name_(std::move(name)), config_(config), out_(std::move(out_dir)) {
    const fs::path root = config.paths.root.empty() ? out_ : fs::path(config.paths.root);
    root_ = root.is_absolute() || config.paths.root.empty() ? root : out_ / root;
  }

  const RunConfig& config() const { return config_; }

  fs::path path(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : root_ / q;
  }

  fs::path input(const std::string& p) {
    const fs::path full = path(p);
    if (!fs::exists(full)) throw IoError("input '" + full.string() + "' does not exist");
    if (fs::is_regular_file(full)) {
      inputs_.push_back({{"path", full.generic_string()},
                         {"fnv1a", io::fnv1a_hex(io::read_file(full))},
                         {"bytes", fs::file_size(full)}});
    } else {
      inputs_.push_back({{"path", full.generic_string()}});
    }
    return full;
  }

  fs::path output(const std::string& p) {
    const fs::path full = path(p);
    result_.outputs.push_back(full);
    return full;
  }

  std::vector<data::MrcExample> split(const std::string& which) {
    const auto& p = config_.paths;
    const std::string& file = which == "train" ? p.train : which == "dev" ? p.dev : p.test;
    return data::load_squad_v2(input(file));
  }

  Vocabulary vocab() { return Vocabulary::load(input(config_.paths.vocab)); }

  srl::AnnotationMap annotations() { return srl::read_annotations(input(config_.paths.annotations)); }

  RunResult& result() { return result_; }

  RunResult finish() {
    json outputs = json::array();
    for (const auto& o : result_.outputs) outputs.push_back(o.generic_string());
    const std::string canon = canonical_config(config_);
    const json manifest = {{"subcommand", name_},
                           {"version", kVersion},
                           {"seed", config_.seed},
                           {"config_fnv1a", io::fnv1a_hex(canon)},
                           {"config", json::parse(canon)},
                           {"inputs", inputs_},
                           {"outputs", outputs},
                           {"exit_code", result_.exit_code}};
    const fs::path mpath = out_ / ("manifest-" + name_ + ".json");
    io::write_json(mpath, manifest);
    result_.outputs.push_back(mpath);
    return std::move(result_);
  }

 private:
  std::string name_;
  RunConfig config_;
  fs::path out_;
  fs::path root_;
  json inputs_ = json::array();
  RunResult result_;
};

EncoderConfig encoder_for(const RunConfig& c, const Vocabulary& vocab) {
  EncoderConfig e = c.encoder;
  e.vocab_size = vocab.size();
  e.max_position = std::max(e.max_position, c.tokenizer.max_seq_length);
  return e;
}

void add_texts(std::vector<std::string>& corpus, const std::vector<data::MrcExample>& examples) {
  for (const auto& ex : examples) {
    corpus.push_back(ex.question);
    corpus.push_back(ex.context);
  }
}

void build_vocab_cmd(Run& run) {
  const auto& c = run.config();
  std::vector<std::string> corpus;
  add_texts(corpus, run.split("train"));
  if (fs::exists(run.path(c.paths.srl))) {
    for (const auto& s : srl::read_srl_jsonl(run.input(c.paths.srl))) {
      std::string line;
      for (const auto& w : s.words) line += w + " ";
      corpus.push_back(line);
    }
  }
  const Vocabulary vocab = build_vocab(corpus, c.tokenizer.min_frequency, c.tokenizer.max_vocab);
  vocab.save(run.output(c.paths.vocab));
  run.result().report = {{"vocab_size", vocab.size()}, {"documents", corpus.size()}};
  run.result().text = "vocabulary: " + std::to_string(vocab.size()) + " tokens\n";
}

void gen_fixtures_cmd(Run& run) {
  const auto& c = run.config();
  data::FixtureConfig fc = c.fixture.train;
  const data::Fixture train = data::gen_fixture(fc);
  srl::AnnotationMap annotations = train.annotations;

  auto variant = [&](std::size_t size, std::uint64_t offset, const std::string& prefix) {
    data::FixtureConfig v = fc;
    v.size = size;
    v.seed = fc.seed + offset;
    v.id_prefix = prefix;
    data::Fixture f = data::gen_fixture(v);
    annotations.insert(f.annotations.begin(), f.annotations.end());
    return f.examples;
  };
  const auto dev = variant(c.fixture.dev_size, 1000, fc.id_prefix + "-dev");
  const auto test = variant(c.fixture.test_size, 2000, fc.id_prefix + "-test");

  data::save_squad_v2(run.output(c.paths.train), train.examples);
  data::save_squad_v2(run.output(c.paths.dev), dev);
  data::save_squad_v2(run.output(c.paths.test), test);
  srl::write_annotations(run.output(c.paths.annotations), annotations);
  const auto corpus = srl::generate_separable_corpus(c.fixture.srl_sentences, fc.seed);
  srl::write_srl_jsonl(run.output(c.paths.srl), corpus);
  run.result().report = {{"train", data::stats_json(data::dataset_stats(train.examples))},
                         {"dev", data::stats_json(data::dataset_stats(dev))},
                         {"test", data::stats_json(data::dataset_stats(test))},
                         {"srl_sentences", corpus.size()}};
  run.result().text = "fixtures: train " + std::to_string(train.examples.size()) + ", dev " +
                      std::to_string(dev.size()) + ", test " + std::to_string(test.size()) +
                      ", srl " + std::to_string(corpus.size()) + "\n";
}

fs::path fold_path(const fs::path& dir, std::size_t fold) {
  return dir / ("fold-" + std::to_string(fold) + ".ckpt");
}

void train_srl_cmd(Run& run) {
  const auto& c = run.config();
  const Vocabulary vocab = run.vocab();
  const auto corpus = srl::read_srl_jsonl(run.input(c.paths.srl));
  srl::SrlTrainConfig sc = c.srl;
  sc.seed = c.seed;
  const auto result = srl::train_srl_kfold(corpus, sc, vocab, srl::LabelInventory());
  const fs::path dir = run.path(c.paths.srl_models);
  for (std::size_t f = 0; f < result.taggers.size(); ++f) {
    result.taggers[f]->save(run.output((dir / ("fold-" + std::to_string(f) + ".ckpt")).string()));
  }
  const json report = srl::kfold_report_json(result);
  const std::string table = srl::kfold_report_table(result);
  io::write_json(run.output((dir / "report.json").string()), report);
  io::atomic_write(run.output((dir / "report.txt").string()), table);
  run.result().report = report;
  run.result().text = table;
}

std::vector<std::unique_ptr<srl::SrlTagger>> load_taggers(Run& run, const Vocabulary& vocab) {
  const auto& c = run.config();
  std::vector<std::unique_ptr<srl::SrlTagger>> taggers;
  const fs::path dir = run.path(c.paths.srl_models);
  for (std::size_t f = 0; f < c.srl.folds; ++f) {
    taggers.push_back(srl::SrlTagger::load(run.input(fold_path(dir, f).string()), vocab));
  }
  return taggers;
}

void annotate_cmd(Run& run) {
  const auto& c = run.config();
  const Vocabulary vocab = run.vocab();
  const auto owned = load_taggers(run, vocab);
  std::vector<const srl::SrlTagger*> taggers;
  for (const auto& t : owned) taggers.push_back(t.get());
  srl::AnnotationMap out;
  std::size_t count = 0;
  for (const char* which : {"train", "dev", "test"}) {
    const auto& p = c.paths;
    const std::string& file = std::string(which) == "train" ? p.train
                              : std::string(which) == "dev" ? p.dev
                                                            : p.test;
    if (!fs::exists(run.path(file))) continue;
    for (const auto& ex : run.split(which)) {
      srl::QaAnnotation a{srl::annotate_text(ex.question, taggers, c.semantic.m_max),
                          srl::annotate_text(ex.context, taggers, c.semantic.m_max)};
      if (!out.emplace(ex.id, std::move(a)).second) {
        throw DataError("annotate: id '" + ex.id + "' occurs in more than one split");
      }
      ++count;
    }
  }
  srl::write_annotations(run.output(c.paths.annotations), out);
  run.result().report = {{"annotated", count}, {"taggers", taggers.size()}};
  run.result().text = "annotated " + std::to_string(count) + " questions with " +
                      std::to_string(taggers.size()) + " taggers\n";
}

json train_report(const reader::TrainReport& r) {
  return {{"steps", r.steps},
          {"epochs", r.epochs_run},
          {"micro_batches", r.losses.size()},
          {"first_loss", r.losses.empty() ? 0.0 : r.losses.front()},
          {"last_loss", r.losses.empty() ? 0.0 : r.losses.back()}};
}

void train_sketchy_cmd(Run& run) {
  const auto& c = run.config();
  const Vocabulary vocab = run.vocab();
  const auto train = run.split("train");
  srl::AnnotationMap ann;
  if (c.use_semantics) ann = run.annotations();
  reader::SketchyReader model(encoder_for(c, vocab), c.semantic, srl::LabelInventory(),
                              c.use_semantics, c.seed);
  const auto r = reader::train_sketchy(model, train, c.use_semantics ? &ann : nullptr, vocab,
                                       c.tokenizer.limits(), c.sketchy, c.seed + 1);
  model.save(run.output(c.paths.sketchy));
  const auto outputs =
      reader::run_sketchy(model, train, c.use_semantics ? &ann : nullptr, vocab, c.tokenizer.limits());
  std::vector<bool> pred, gold;
  for (std::size_t i = 0; i < train.size(); ++i) {
    pred.push_back(outputs[i].predicts_unanswerable());
    gold.push_back(train[i].is_impossible);
  }
  const auto cls = metrics::classifier_metrics(pred, gold);
  json report = train_report(r);
  report["train_accuracy"] = cls.accuracy;
  report["train_f1_unanswerable"] = cls.f1;
  run.result().report = report;
  std::ostringstream text;
  text << "sketchy: " << r.steps << " steps, train accuracy " << cls.accuracy << "\n";
  run.result().text = text.str();
}

void train_intensive_cmd(Run& run) {
  const auto& c = run.config();
  const Vocabulary vocab = run.vocab();
  const auto train = run.split("train");
  reader::IntensiveReader model(encoder_for(c, vocab), c.seed + 2);
  const auto r = reader::train_intensive(model, train, vocab, c.tokenizer.limits(), c.intensive,
                                         c.seed + 3);
  model.save(run.output(c.paths.intensive));
  run.result().report = train_report(r);
  std::ostringstream text;
  text << "intensive: " << r.steps << " steps, last loss "
       << (r.losses.empty() ? 0.0 : r.losses.back()) << "\n";
  run.result().text = text.str();
}

std::vector<reader::ScoredQuestion> score_split(Run& run, const std::vector<data::MrcExample>& ex) {
  const auto& c = run.config();
  const Vocabulary vocab = run.vocab();
  const auto sketchy = reader::SketchyReader::load(run.input(c.paths.sketchy));
  const auto intensive = reader::IntensiveReader::load(run.input(c.paths.intensive));
  srl::AnnotationMap ann;
  if (sketchy->uses_semantics()) ann = run.annotations();
  return reader::score_questions(*sketchy, *intensive, ex, sketchy->uses_semantics() ? &ann : nullptr,
                                 vocab, c.tokenizer.limits(), c.intensive.max_answer_length);
}

void tune_verifier_cmd(Run& run) {
  const auto& c = run.config();
  const auto dev = run.split(c.verifier.tune_split);
  const auto scored = score_split(run, dev);
  const auto tuned = reader::tune_verifier(scored, dev, c.verifier.grid);
  const json report = {{"params", tuned.params},
                       {"f1", tuned.f1},
                       {"exact_match", tuned.exact_match},
                       {"evaluated", tuned.evaluated},
                       {"split", c.verifier.tune_split}};
  io::write_json(run.output(c.paths.verifier), report);
  run.result().report = report;
  std::ostringstream text;
  text << "verifier: beta1 " << tuned.params.beta1 << ", beta2 " << tuned.params.beta2
       << ", delta " << tuned.params.delta << " (" << c.verifier.tune_split << " F1 " << tuned.f1
       << ")\n";
  run.result().text = text.str();
}

void predict_cmd(Run& run) {
  const auto& c = run.config();
  const auto examples = run.split(c.paths.predict_split);
  const auto scored = score_split(run, examples);
  reader::VerifierParams params = c.verifier.params;
  if (fs::exists(run.path(c.paths.verifier))) {
    params = io::read_json(run.input(c.paths.verifier)).at("params").get<reader::VerifierParams>();
  }
  const auto verdicts = reader::predict(scored, params);
  metrics::Predictions preds;
  for (const auto& v : verdicts) preds[v.id] = v.answer_text;
  const fs::path out = run.output(c.paths.predictions);
  metrics::write_predictions(out, preds);
  fs::path detail = out;
  detail.replace_extension(".verdicts.json");
  io::write_json(run.output(detail.string()), reader::verdicts_json(verdicts));
  std::size_t empty = 0;
  for (const auto& v : verdicts) empty += v.answer_text.empty() ? 1 : 0;
  run.result().report = {{"predictions", verdicts.size()},
                         {"unanswerable", empty},
                         {"params", params},
                         {"split", c.paths.predict_split}};
  run.result().text = "predicted " + std::to_string(verdicts.size()) + " questions (" +
                      std::to_string(empty) + " judged unanswerable)\n";
}

void evaluate_cmd(Run& run) {
  const auto& c = run.config();
  const auto gold = run.split(c.paths.predict_split);
  const auto preds = metrics::read_predictions(run.input(c.paths.predictions));
  const auto report = metrics::evaluate_predictions(preds, gold);
  const json j = metrics::report_json(report);
  fs::path out = run.path(c.paths.predictions);
  out.replace_extension(".eval.json");
  io::write_json(run.output(out.string()), metrics::report_json(report, true));
  run.result().report = j;
  run.result().text = j.dump(2) + "\n";
}

void gradcheck_cmd(Run& run) {
  const auto& g = run.config().gradcheck;
  const auto results = run_grad_suite(g.seeds, g.filter);
  const json report = grad_suite_json(results, g.tolerance);
  io::write_json(run.output("gradcheck.json"), report);
  std::ostringstream text;
  for (const auto& r : results) {
    text << (r.passed(g.tolerance) ? "PASS " : "FAIL ") << r.name << " max_rel_err "
         << r.report.max_relative_error << "\n";
  }
  run.result().exit_code = report["passed"].get<bool>() && !results.empty() ? 0 : 1;
  run.result().report = report;
  run.result().text = text.str();
}

void stats_cmd(Run& run) {
  const auto& c = run.config();
  json report = json::object();
  std::ostringstream text;
  for (const char* which : {"train", "dev", "test"}) {
    const std::string& file = std::string(which) == "train" ? c.paths.train
                              : std::string(which) == "dev" ? c.paths.dev
                                                            : c.paths.test;
    if (!fs::exists(run.path(file))) continue;
    const auto s = data::dataset_stats(run.split(which));
    report[which] = data::stats_json(s);
    text << which << ": articles " << s.articles << ", passages " << s.passages << ", questions "
         << s.questions << ", unanswerable " << s.unanswerable << "\n";
  }
  if (report.empty()) throw IoError("stats: no dataset split found");
  io::write_json(run.output("stats.json"), report);
  run.result().report = report;
  run.result().text = text.str();
}

void significance_cmd(Run& run) {
  const auto& c = run.config();
  const auto gold = run.split(c.paths.predict_split);
  const auto a = metrics::evaluate_predictions(
      metrics::read_predictions(run.input(c.paths.predictions)), gold);
  const auto b = metrics::evaluate_predictions(
      metrics::read_predictions(run.input(c.paths.baseline_predictions)), gold);
  const auto t = metrics::paired_t_test(a.per_question_f1, b.per_question_f1);
  const json report = {{"system_f1", a.f1}, {"baseline_f1", b.f1}, {"t", t.t},
                       {"df", t.df},        {"p", t.p},            {"questions", gold.size()}};
  io::write_json(run.output("significance.json"), report);
  run.result().report = report;
  std::ostringstream text;
  text << "paired t-test on per-question F1: t " << t.t << ", df " << t.df << ", p " << t.p << "\n";
  run.result().text = text.str();
}

}  // namespace

RunResult run_subcommand(const std::string& subcommand, const RunConfig& config,
                         const fs::path& out_dir) {
  static const std::map<std::string, std::function<void(Run&)>> table = {
      {"build-vocab", build_vocab_cmd},
      {"gen-fixtures", gen_fixtures_cmd},
      {"train-srl", train_srl_cmd},
      {"annotate", annotate_cmd},
      {"train-sketchy", train_sketchy_cmd},
      {"train-intensive", train_intensive_cmd},
      {"tune-verifier", tune_verifier_cmd},
      {"predict", predict_cmd},
      {"evaluate", evaluate_cmd},
      {"gradcheck", gradcheck_cmd},
      {"stats", stats_cmd},
      {"significance", significance_cmd}};
  const auto it = table.find(subcommand);
  if (it == table.end()) throw InputError("unknown subcommand '" + subcommand + "'");
  config.validate();
  Run run(subcommand, config, out_dir);
  it->second(run);
  return run.finish();
}

}  // namespace retrosem
