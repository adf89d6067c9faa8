// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/app.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/report_files.hpp"
#include "cli/run_config.hpp"
#include "kcef/corpus/dataset_io.hpp"
#include "kcef/model/checkpoint.hpp"
#include "kcef/pipeline/data.hpp"
#include "kcef/pipeline/reports.hpp"
#include "kcef/pipeline/stages.hpp"
#include "kcef/util/atomic_file.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flag values are applied on top of the config file only when the flag was
// actually given, so an explicit flag always wins and an absent one never
// clobbers the file.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& help,
                   std::function<void(RunConfig&, const T&)> apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    pending_.push_back([opt, value, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& name, const std::string& help,
                        std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app->add_flag(name, help);
    pending_.push_back([opt, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c);
    });
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& f : pending_) f(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> pending_;
};

std::string percent(double x) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * x);
  return buf;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

json envelope(const char* command, const RunConfig& config, json report) {
  return json{{"command", command}, {"config", to_json(config)}, {"report", std::move(report)}};
}

struct Victim {
  model::TransformerLM<float> model;
  corpus::Vocab vocab;
};

Victim load_victim(const fs::path& path) {
  model::Checkpoint ckpt = model::load_checkpoint(path);
  if (ckpt.adapters) {
    throw DataError(path.string() + " carries adapters; expected a stage-1 victim checkpoint");
  }
  return {std::move(ckpt.model), corpus::Vocab::from_tokens(std::move(ckpt.vocab))};
}

// ---- subcommands ----

void run_gen_data(const RunConfig& c, std::ostream& out) {
  const pipeline::GeneratedCorpus gen = pipeline::generate_corpus(c.data);
  const fs::path dataset = c.paths.dataset;
  const fs::path substituted = c.paths.substituted_path();
  ensure_parent(dataset);
  ensure_parent(substituted);
  write_file_atomic(dataset, corpus::to_jsonl(std::span(gen.dataset)));
  write_file_atomic(substituted, corpus::to_jsonl(std::span(gen.substituted)));
  std::size_t distractors = 0;
  for (const auto& ex : gen.dataset) distractors += ex.context_kind == corpus::ContextKind::kDistractor;
  out << "wrote " << gen.dataset.size() << " examples (" << distractors << " distractor) to "
      << dataset.string() << " and " << gen.substituted.size() << " substituted examples to "
      << substituted.string() << "\n";
}

void run_train_victim(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto dataset = corpus::read_examples(fs::path(c.paths.dataset));
  const corpus::Vocab vocab = pipeline::build_vocab(dataset);
  pipeline::Stage1Config s1{c.model, c.victim.train, c.victim.eval_every};
  const pipeline::Stage1Result r =
      pipeline::stage1_finetune(dataset, vocab, s1, [&](const pipeline::CurvePoint& p) {
        err << "epoch " << p.epoch << " loss " << p.loss << " exact match "
            << percent(p.exact_match) << "\n";
      });

  const fs::path ckpt = c.paths.checkpoint;
  ensure_parent(ckpt);
  model::save_checkpoint(ckpt, r.model, nullptr, vocab.tokens());

  std::string text = "training exact match: " + percent(r.report.train_exact_match) + "\n\n";
  text += "epoch  loss      exact match\n";
  for (const auto& p : r.report.curve) {
    char line[64];
    std::snprintf(line, sizeof line, "%-6zu %-9.4f %s\n", p.epoch, p.loss,
                  percent(p.exact_match).c_str());
    text += line;
  }
  emit_report(c.paths.victim_dir, envelope("train-victim", c, pipeline::to_json(r.report)), text);
  out << "victim checkpoint " << ckpt.string() << ", training exact match "
      << percent(r.report.train_exact_match) << "\n";
}

void run_probe(const RunConfig& c, std::ostream& out) {
  Victim v = load_victim(c.paths.checkpoint);
  const auto dataset = corpus::read_examples(fs::path(c.paths.dataset));
  const auto substituted = corpus::read_substituted(fs::path(c.paths.substituted_path()));
  const pipeline::Stage2Result r =
      pipeline::stage2_probe(v.model, v.vocab, dataset, substituted, c.probe);

  const fs::path dir = c.paths.probe_dir;
  const fs::path memorized = c.paths.memorized;
  fs::create_directories(dir);
  ensure_parent(memorized);
  write_file_atomic(memorized, corpus::to_jsonl(std::span(r.memorized)));
  write_file_atomic(dir / "predictions.jsonl", pipeline::predictions_to_jsonl(r.predictions));
  write_file_atomic(dir / "substituted_predictions.jsonl",
                    pipeline::predictions_to_jsonl(r.substituted_predictions));

  const auto& mem = r.report.memorization;
  std::string text = std::string(r.report.closed_book ? "closed-book" : "open-book") + " probe\n";
  text += "probed:          " + std::to_string(mem.n_probed) + "\n";
  text += "exact match:     " + percent(mem.exact_match_rate) + " (" +
          std::to_string(mem.memorized_ids.size()) + " memorized)\n";
  if (mem.contains_match_rate) text += "contains match:  " + percent(*mem.contains_match_rate) + "\n";
  text += "substituted set: " + std::to_string(r.report.n_substituted) + "\n";
  text += "persistence:     " + percent(r.report.persistence) + "\n";
  text += "substituted:     " + percent(r.report.substituted_rate) + "\n";
  emit_report(dir, envelope("probe", c, pipeline::to_json(r.report)), text);
  out << text;
}

void run_erase(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Victim v = load_victim(c.paths.checkpoint);
  const auto memorized = corpus::read_substituted(fs::path(c.paths.memorized));
  pipeline::Stage3Config s3{c.erase.adapter, c.erase.split, c.erase.train};
  const pipeline::Stage3Result r = pipeline::stage3_erase(
      v.model, v.vocab, memorized, s3, [&](std::size_t epoch, double loss, double p_s_test) {
        err << "epoch " << epoch << " loss " << loss << " p_s test " << percent(p_s_test) << "\n";
      });

  const fs::path dir = c.paths.erase_dir;
  fs::create_directories(dir);
  model::save_checkpoint(dir / "adapters.ckpt", v.model, &r.adapters, v.vocab.tokens());
  write_file_atomic(dir / "train_predictions.jsonl",
                    pipeline::predictions_to_jsonl(r.train_predictions));
  write_file_atomic(dir / "test_predictions.jsonl",
                    pipeline::predictions_to_jsonl(r.test_predictions));

  const std::vector<pipeline::ErasureReport> rows{r.report};
  std::string text = pipeline::render_accuracy_table(rows);
  text += "\npersistence: " + percent(r.report.persistence_train) + " train, " +
          percent(r.report.persistence_test) + " test\n";
  emit_report(dir, envelope("erase", c, pipeline::to_json(r.report)), text);
  out << text;
}

struct EvalArgs {
  std::string predictions;
  std::string dataset;
  std::string substituted;
  std::string out_dir;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  std::ifstream in(a.predictions);
  if (!in) throw Error("cannot read predictions file " + a.predictions);
  const pipeline::AnswerMap preds = pipeline::read_predictions(in);
  json result{{"predictions", a.predictions}, {"n", preds.size()}};
  std::string text;
  if (!a.substituted.empty()) {
    const auto subs = corpus::read_substituted(fs::path(a.substituted));
    const auto s = pipeline::substituted_accuracy(preds, subs);
    result["references"] = a.substituted;
    result["p_s"] = s.p_s;
    result["persistence"] = s.persistence;
    text = "p_s:         " + percent(s.p_s) + "\npersistence: " + percent(s.persistence) + "\n";
  } else {
    const auto examples = corpus::read_examples(fs::path(a.dataset));
    pipeline::AnswerMap refs;
    for (const auto& ex : examples) refs.emplace(ex.id, ex.answer);
    const double rate = pipeline::memorization_rate(preds, refs);
    result["references"] = a.dataset;
    result["exact_match_rate"] = rate;
    text = "exact match: " + percent(rate) + "\n";
  }
  if (!a.out_dir.empty()) emit_report(a.out_dir, result, text);
  out << result.dump(2) << "\n";
}

void run_report(const std::vector<std::string>& inputs, const std::string& out_dir,
                std::ostream& out) {
  std::vector<pipeline::ErasureReport> rows;
  json combined = json::array();
  for (const auto& path : inputs) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw DataError(path + ": " + e.what());
    }
    if (!j.is_object() || j.value("command", "") != "erase" || !j.contains("report")) {
      throw DataError(path + " is not an erase report");
    }
    rows.push_back(pipeline::erasure_report_from_json(j["report"]));
    combined.push_back(j);
  }
  const std::string table = pipeline::render_accuracy_table(rows);
  if (!out_dir.empty()) emit_report(out_dir, json{{"reports", combined}}, table);
  out << table;
}

}  // namespace

int parse_and_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-conflict erasure pipeline on a synthetic QA corpus"};
  app.name("kcef");
  app.require_subcommand(1, 1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run config; flags override its values")
      ->check(CLI::ExistingFile);

  Overrides ov;
  using C = RunConfig;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic QA corpus as JSONL");
  ov.add<std::size_t>(gen, "--facts", "number of facts", [](C& c, auto v) { c.data.facts = v; });
  ov.add<double>(gen, "--rho", "distractor rate", [](C& c, auto v) { c.data.distractor_rate = v; });
  ov.add<std::uint64_t>(gen, "--seed", "corpus seed", [](C& c, auto v) { c.data.seed = v; });
  ov.add<std::string>(gen, "--out", "dataset JSONL", [](C& c, auto& v) { c.paths.dataset = v; });
  ov.add<std::string>(gen, "--substituted-out", "substituted JSONL",
                      [](C& c, auto& v) { c.paths.substituted = v; });

  CLI::App* train = app.add_subcommand("train-victim", "Stage 1: finetune the victim model");
  ov.add<std::string>(train, "--data", "dataset JSONL", [](C& c, auto& v) { c.paths.dataset = v; });
  ov.add<std::string>(train, "--out", "checkpoint path",
                      [](C& c, auto& v) { c.paths.checkpoint = v; });
  ov.add<std::string>(train, "--out-dir", "report directory",
                      [](C& c, auto& v) { c.paths.victim_dir = v; });
  ov.add<std::size_t>(train, "--d-model", "model width", [](C& c, auto v) { c.model.d_model = v; });
  ov.add<std::size_t>(train, "--layers", "layers", [](C& c, auto v) { c.model.n_layers = v; });
  ov.add<std::size_t>(train, "--heads", "attention heads", [](C& c, auto v) { c.model.n_heads = v; });
  ov.add<std::size_t>(train, "--d-ff", "MLP width", [](C& c, auto v) { c.model.d_ff = v; });
  ov.add<std::size_t>(train, "--max-seq-len", "context length",
                      [](C& c, auto v) { c.model.max_seq_len = v; });
  ov.add<std::uint64_t>(train, "--model-seed", "initialisation seed",
                        [](C& c, auto v) { c.model.seed = v; });
  ov.add<std::size_t>(train, "--epochs", "epochs", [](C& c, auto v) { c.victim.train.epochs = v; });
  ov.add<std::size_t>(train, "--batch-size", "batch size",
                      [](C& c, auto v) { c.victim.train.batch_size = v; });
  ov.add<double>(train, "--lr", "Adam learning rate", [](C& c, auto v) { c.victim.train.adam.lr = v; });
  ov.add<std::uint64_t>(train, "--shuffle-seed", "minibatch order seed",
                        [](C& c, auto v) { c.victim.train.shuffle_seed = v; });
  ov.add<std::size_t>(train, "--eval-every", "epochs between exact-match evaluations",
                      [](C& c, auto v) { c.victim.eval_every = v; });

  CLI::App* probe = app.add_subcommand("probe", "Stage 2: measure memorization, emit D'");
  ov.add<std::string>(probe, "--checkpoint", "victim checkpoint",
                      [](C& c, auto& v) { c.paths.checkpoint = v; });
  ov.add<std::string>(probe, "--data", "dataset JSONL", [](C& c, auto& v) { c.paths.dataset = v; });
  ov.add<std::string>(probe, "--substituted", "substituted JSONL",
                      [](C& c, auto& v) { c.paths.substituted = v; });
  ov.add<std::string>(probe, "--memorized-out", "memorized substituted JSONL (D')",
                      [](C& c, auto& v) { c.paths.memorized = v; });
  ov.add<std::string>(probe, "--out-dir", "report directory",
                      [](C& c, auto& v) { c.paths.probe_dir = v; });
  ov.add<std::size_t>(probe, "--sample-size", "examples to probe, 0 for all",
                      [](C& c, auto v) { c.probe.sample_size = v; });
  ov.add<std::uint64_t>(probe, "--seed", "sampling seed", [](C& c, auto v) { c.probe.seed = v; });
  ov.add_flag(probe, "--closed-book", "probe with an empty context",
              [](C& c) { c.probe.closed_book = true; });
  ov.add_flag(probe, "--contains-match", "also report substring containment",
              [](C& c) { c.probe.contains_match = true; });

  CLI::App* erase = app.add_subcommand("erase", "Stage 3: train adapters on D' with the base frozen");
  ov.add<std::string>(erase, "--checkpoint", "victim checkpoint",
                      [](C& c, auto& v) { c.paths.checkpoint = v; });
  ov.add<std::string>(erase, "--memorized", "memorized substituted JSONL (D')",
                      [](C& c, auto& v) { c.paths.memorized = v; });
  ov.add<std::string>(erase, "--out-dir", "report directory",
                      [](C& c, auto& v) { c.paths.erase_dir = v; });
  ov.add<std::string>(erase, "--adapter", "bottleneck or prefix", [](C& c, auto& v) {
    c.erase.adapter.kind = erasure::parse_adapter_kind(v);
  });
  ov.add<std::size_t>(erase, "--r", "bottleneck dimension",
                      [](C& c, auto v) { c.erase.adapter.bottleneck_dim = v; });
  ov.add<std::size_t>(erase, "--prefix-len", "prefix length",
                      [](C& c, auto v) { c.erase.adapter.prefix_len = v; });
  ov.add<double>(erase, "--init-std", "adapter init std",
                 [](C& c, auto v) { c.erase.adapter.init_std = v; });
  ov.add<std::uint64_t>(erase, "--adapter-seed", "adapter init seed",
                        [](C& c, auto v) { c.erase.adapter.seed = v; });
  ov.add<std::size_t>(erase, "--epochs", "epochs", [](C& c, auto v) { c.erase.train.epochs = v; });
  ov.add<std::size_t>(erase, "--batch-size", "batch size",
                      [](C& c, auto v) { c.erase.train.batch_size = v; });
  ov.add<double>(erase, "--lr", "Adam learning rate", [](C& c, auto v) { c.erase.train.adam.lr = v; });
  ov.add<std::uint64_t>(erase, "--shuffle-seed", "minibatch order seed",
                        [](C& c, auto v) { c.erase.train.shuffle_seed = v; });
  ov.add<double>(erase, "--train-fraction", "share of D' used for training",
                 [](C& c, auto v) { c.erase.split.train_fraction = v; });
  ov.add<std::uint64_t>(erase, "--split-seed", "split seed",
                        [](C& c, auto v) { c.erase.split.seed = v; });

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Score a prediction file");
  eval->add_option("--predictions", eval_args.predictions, "predictions JSONL")->required();
  auto* eval_data = eval->add_option("--data", eval_args.dataset, "dataset JSONL: exact match");
  auto* eval_subs = eval->add_option("--substituted", eval_args.substituted,
                                     "substituted JSONL: p_s and persistence");
  eval_data->excludes(eval_subs);
  eval->add_option("--out-dir", eval_args.out_dir, "also write report.json/report.txt here");

  std::vector<std::string> report_inputs;
  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Render erase reports as an accuracy table");
  report->add_option("--inputs", report_inputs, "erase report.json files")->required();
  report->add_option("--out-dir", report_dir, "write the combined report.json/report.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    err << "kcef: " << msg.substr(0, msg.find('\n')) << "\n";
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    RunConfig config = config_path.empty() ? default_run_config() : load_run_config(config_path);
    ov.apply(config);
    if (gen->parsed()) {
      run_gen_data(config, out);
    } else if (train->parsed()) {
      run_train_victim(config, out, err);
    } else if (probe->parsed()) {
      run_probe(config, out);
    } else if (erase->parsed()) {
      run_erase(config, out, err);
    } else if (eval->parsed()) {
      if (eval_args.dataset.empty() && eval_args.substituted.empty()) {
        throw ConfigError("eval needs --data or --substituted");
      }
      run_eval(eval_args, out);
    } else if (report->parsed()) {
      run_report(report_inputs, report_dir, out);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    err << "kcef: error: " << msg.substr(0, msg.find('\n')) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace kcef::cli
