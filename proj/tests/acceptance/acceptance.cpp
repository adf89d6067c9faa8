// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// selected criterion fails. `--only N` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/report_files.hpp"
#include "cli/run_config.hpp"
#include "kcef/corpus/qa.hpp"
#include "kcef/erasure/erasure.hpp"
#include "kcef/model/checkpoint.hpp"
#include "kcef/pipeline/data.hpp"
#include "kcef/pipeline/metrics.hpp"
#include "kcef/pipeline/reports.hpp"
#include "kcef/pipeline/stages.hpp"
#include "kcef/util/atomic_file.hpp"
#include "support/op_gradient_cases.hpp"
#include "support/tiny_data.hpp"

namespace kcef::acceptance {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Tolerances and thresholds, fixed by the acceptance criteria.
constexpr double kOpRelErrDefault = 1e-4;
constexpr double kOpRelErrHigh = 1e-6;
constexpr double kModelRelErr = 1e-3;
constexpr double kGradSuiteSeconds = 60.0;
constexpr std::size_t kIdentityInputs = 10;
constexpr double kStage1ExactMatch = 0.90;
constexpr double kStage2Persistence = 0.30;
constexpr double kBottleneckTrain = 0.85;
constexpr double kBottleneckTest = 0.60;
constexpr double kPrefixTrain = 0.80;
constexpr double kWallClockSeconds = 15 * 60.0;
constexpr std::size_t kSubstitutionSamples = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---- 1. gradient fidelity ----

Outcome gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  double worst_default = 0.0;
  double worst_high = 0.0;
  std::string worst_default_op;
  std::string worst_high_op;
  const auto cases = testing::op_gradient_cases<double>();
  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double d = c.run(seed, 1e-3).max_rel_error;
      const double h = c.run(seed, ad::default_fd_step<double>()).max_rel_error;
      if (d > worst_default) worst_default = d, worst_default_op = c.name;
      if (h > worst_high) worst_high = h, worst_high_op = c.name;
    }
  }

  model::ModelConfig mc;
  mc.vocab_size = 11;
  mc.d_model = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.d_ff = 12;
  mc.max_seq_len = 8;
  auto m = model::init_model<double>(mc);
  testing::randomize(m.parameters(), 17);
  corpus::EncodedSequence seq;
  seq.ids = {2, 7, 3, 9, 4};
  seq.answer_begin = 3;
  seq.answer_end = 5;
  std::vector<corpus::EncodedSequence> batch{seq};
  auto params = m.parameters();
  for (auto& p : params) p.set_requires_grad(true);
  const auto full = ad::grad_check<double>(
      [&](ad::Tape<double>& tape) { return model::sequence_loss(tape, m, std::span<const corpus::EncodedSequence>(batch)); },
      std::span<ad::Tensor<double>>(params), 1e-5);

  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = worst_default < kOpRelErrDefault && worst_high < kOpRelErrHigh &&
           full.max_rel_error < kModelRelErr && elapsed < kGradSuiteSeconds;
  o.detail = std::to_string(cases.size()) + " ops, worst rel err " + fmt("%.2e", worst_default) +
             " (" + worst_default_op + ", step 1e-3) / " + fmt("%.2e", worst_high) + " (" +
             worst_high_op + ", step 1e-5); full model " + fmt("%.2e", full.max_rel_error) +
             " over " + std::to_string(full.coordinates) + " coordinates; " +
             fmt("%.1f s", elapsed);
  return o;
}

// ---- 2. adapter identity ----

Outcome adapter_identity() {
  model::ModelConfig mc;
  mc.vocab_size = 40;
  mc.d_model = 32;
  mc.n_layers = 2;
  mc.n_heads = 4;
  mc.d_ff = 64;
  mc.max_seq_len = 32;
  mc.seed = 7;
  auto m = model::init_model<float>(mc);
  testing::randomize(m.parameters(), 8);
  auto logits = [&](const std::vector<TokenId>& ids, const erasure::AdapterSet<float>* a) {
    std::vector<std::vector<TokenId>> seqs{ids};
    ad::Tape<float> tape(ad::Tape<float>::Mode::kInference);
    auto out = model::forward(tape, m, model::make_batch(seqs), a);
    return std::vector<float>(out.data().begin(), out.data().end());
  };

  std::vector<erasure::AdapterSet<float>> sets;
  for (std::size_t r : {1u, 4u, 16u, 64u}) {
    erasure::AdapterConfig cfg;
    cfg.kind = erasure::AdapterKind::kBottleneck;
    cfg.bottleneck_dim = r;
    cfg.seed = r;
    sets.push_back(erasure::attach_bottleneck(m, cfg));
  }
  erasure::AdapterConfig prefix;
  prefix.kind = erasure::AdapterKind::kPrefix;
  prefix.prefix_len = 0;
  sets.push_back(erasure::attach_prefix(m, prefix));

  std::mt19937_64 rng(9);
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  for (const auto& set : sets) {
    for (std::size_t i = 0; i < kIdentityInputs; ++i) {
      const auto ids = testing::random_ids(4 + 2 * i, mc.vocab_size, rng);
      mismatches += logits(ids, &set) != logits(ids, nullptr);
      ++compared;
    }
  }
  return {mismatches == 0, "bottleneck r in {1,4,16,64} and prefix L=0, " +
                               std::to_string(compared) + " random inputs, " +
                               std::to_string(mismatches) + " with any logit differing"};
}

// ---- shared desk-scale run (criteria 3, 5, 6) ----

struct DeskRun {
  double stage1_exact_match = 0.0;
  pipeline::ProbeReport probe;
  std::map<erasure::AdapterKind, pipeline::ErasureReport> erase;
  std::map<erasure::AdapterKind, std::pair<std::uint64_t, std::uint64_t>> checksums;  // before, after
  std::string checkpoint_bytes;
  std::string reports;  // every report, serialized in a fixed order
  double seconds = 0.0;
};

DeskRun desk_run(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  cli::RunConfig config = cli::default_run_config();
  DeskRun run;

  const pipeline::GeneratedCorpus corpus = pipeline::generate_corpus(config.data);
  const corpus::Vocab vocab = pipeline::build_vocab(corpus.dataset);
  pipeline::Stage1Config s1{config.model, config.victim.train, config.victim.eval_every};
  pipeline::Stage1Result victim = pipeline::stage1_finetune(
      corpus.dataset, vocab, s1, [&](const pipeline::CurvePoint& p) {
        std::fprintf(stderr, "  [%5.0fs] stage 1 epoch %zu loss %.4f exact match %.3f\n",
                     seconds_since(start), p.epoch, p.loss, p.exact_match);
      });
  run.stage1_exact_match = victim.report.train_exact_match;
  run.checkpoint_bytes = model::serialize_checkpoint(victim.model, nullptr, vocab.tokens());
  fs::create_directories(dir);
  write_file_atomic(dir / "victim.ckpt", run.checkpoint_bytes);
  run.reports += pipeline::to_json(victim.report).dump() + "\n";

  const pipeline::Stage2Result probe = pipeline::stage2_probe(
      victim.model, vocab, corpus.dataset, corpus.substituted, config.probe);
  run.probe = probe.report;
  run.reports += pipeline::to_json(probe.report).dump() + "\n";
  std::fprintf(stderr, "  [%5.0fs] stage 2 exact match %.3f, |D'| %zu, persistence %.3f\n",
               seconds_since(start), probe.report.memorization.exact_match_rate,
               probe.report.n_substituted, probe.report.persistence);

  std::vector<pipeline::ErasureReport> rows;
  for (auto kind : {erasure::AdapterKind::kBottleneck, erasure::AdapterKind::kPrefix}) {
    pipeline::Stage3Config s3{config.erase.adapter, config.erase.split, config.erase.train};
    s3.adapter.kind = kind;
    const std::uint64_t before = model::checksum(victim.model);
    const pipeline::Stage3Result erased =
        pipeline::stage3_erase(victim.model, vocab, probe.memorized, s3);
    run.checksums[kind] = {before, model::checksum(victim.model)};
    run.erase[kind] = erased.report;
    rows.push_back(erased.report);
    run.reports += pipeline::to_json(erased.report).dump() + "\n";
    std::fprintf(stderr, "  [%5.0fs] stage 3 %s p_s train %.3f test %.3f\n", seconds_since(start),
                 std::string(erasure::to_string(kind)).c_str(), erased.report.p_s_train,
                 erased.report.p_s_test);
  }
  cli::emit_report(dir, json{{"config", cli::to_json(config)}, {"reports", run.reports}},
                   pipeline::render_accuracy_table(rows));
  run.seconds = seconds_since(start);
  return run;
}

// ---- 3. frozen base ----

Outcome frozen_base(const DeskRun& run) {
  bool pass = !run.checksums.empty();
  std::string detail;
  for (const auto& [kind, sums] : run.checksums) {
    pass = pass && sums.first == sums.second;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %016llx -> %016llx; ",
                  std::string(erasure::to_string(kind)).c_str(),
                  static_cast<unsigned long long>(sums.first),
                  static_cast<unsigned long long>(sums.second));
    detail += buf;
  }
  return {pass, detail + "desk-scale stage 3"};
}

// ---- 4. metric oracles ----

Outcome metric_oracles() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const pipeline::AnswerMap refs{{"a", "x"}, {"b", "y"}, {"c", "z"}, {"d", "w"}};
  const pipeline::AnswerMap half{{"a", "x"}, {"b", "no"}, {"c", "z"}, {"d", "no"}};
  expect(pipeline::memorization_rate(half, refs) == 0.5, "2/4 -> 0.5");
  expect(pipeline::memorization_rate(refs, refs) == 1.0, "identity -> 1.0");
  bool threw = false;
  try {
    pipeline::memorization_rate({{"a", "x"}}, {{"b", "x"}});
  } catch (const DataError&) {
    threw = true;
  }
  expect(threw, "disjoint ids -> error");

  auto sub = [](const std::string& id, const std::string& x, const std::string& xs) {
    corpus::SubstitutedExample s;
    s.base.id = id;
    s.base.answer = x;
    s.base.context = x + ".";
    s.answer_sub = xs;
    s.context_sub = xs + ".";
    return s;
  };
  std::vector<corpus::SubstitutedExample> split;
  pipeline::AnswerMap preds;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "q" + std::to_string(i);
    split.push_back(sub(id, "orig" + std::to_string(i), "sub" + std::to_string(i)));
    preds[id] = i < 5 ? "sub" + std::to_string(i) : i < 8 ? "orig" + std::to_string(i) : "other";
  }
  const auto s = pipeline::substituted_accuracy(preds, split);
  expect(s.p_s == 0.5 && s.persistence == 0.3, "5/3/2 -> p_s 0.5, persistence 0.3");

  std::mt19937_64 rng(1);
  std::size_t trials = 0;
  const std::vector<std::string> pool{"x", "y", "z"};
  for (; trials < 2000; ++trials) {
    std::vector<corpus::SubstitutedExample> random_split;
    pipeline::AnswerMap random_preds;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = std::to_string(i);
      const std::size_t x = rng() % 3;
      random_split.push_back(sub(id, pool[x], pool[(x + 1 + rng() % 2) % 3]));
      random_preds[id] = pool[rng() % 3];
    }
    const auto r = pipeline::substituted_accuracy(random_preds, random_split);
    if (r.p_s + r.persistence > 1.0) {
      expect(false, "p_s + persistence <= 1");
      break;
    }
  }

  std::string detail = "2/4 -> 0.5, 5/3/2 -> (0.5, 0.3), p_s + persistence <= 1 over " +
                       std::to_string(trials) + " random prediction sets";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

// ---- 5. desk-scale end-to-end ----

Outcome desk_scale(const DeskRun& run) {
  const auto& b = run.erase.at(erasure::AdapterKind::kBottleneck);
  const auto& p = run.erase.at(erasure::AdapterKind::kPrefix);
  Outcome o;
  o.pass = run.stage1_exact_match >= kStage1ExactMatch &&
           run.probe.persistence >= kStage2Persistence && b.p_s_train >= kBottleneckTrain &&
           b.p_s_test >= kBottleneckTest && p.p_s_train >= kPrefixTrain &&
           run.seconds <= kWallClockSeconds;
  o.detail = "stage 1 exact match " + fmt("%.3f", run.stage1_exact_match) + " (>= 0.90); " +
             "stage 2 persistence " + fmt("%.3f", run.probe.persistence) + " on " +
             std::to_string(run.probe.n_substituted) + " memorized (>= 0.30); bottleneck r=" +
             std::to_string(b.adapter.bottleneck_dim) + " p_s train " + fmt("%.3f", b.p_s_train) +
             " (>= 0.85) test " + fmt("%.3f", b.p_s_test) + " (>= 0.60); prefix L=" +
             std::to_string(p.adapter.prefix_len) + " p_s train " + fmt("%.3f", p.p_s_train) +
             " (>= 0.80); " + fmt("%.0f s", run.seconds) + " (<= 900 s)";
  return o;
}

// ---- 6. determinism ----

Outcome determinism(const DeskRun& first, const fs::path& dir) {
  const DeskRun second = desk_run(dir);
  const bool same_ckpt = first.checkpoint_bytes == second.checkpoint_bytes;
  const bool same_reports = first.reports == second.reports;
  return {same_ckpt && same_reports,
          std::string("checkpoint ") + (same_ckpt ? "identical" : "DIFFERS") + " (" +
              std::to_string(first.checkpoint_bytes.size()) + " bytes), reports " +
              (same_reports ? "identical" : "DIFFER") + " (" +
              std::to_string(first.reports.size()) + " bytes)"};
}

// ---- 7. substitution engine ----

Outcome substitution_engine() {
  const pipeline::GeneratedCorpus g = pipeline::generate_corpus({1600, 0.3, 77});
  std::map<std::string, corpus::EntityType> type_of;
  for (const auto& ex : g.dataset) type_of.emplace(ex.answer, ex.answer_type);

  std::size_t checked = 0;
  std::map<std::string, std::size_t> failures;
  for (const auto& s : g.substituted) {
    if (checked == kSubstitutionSamples) break;
    ++checked;
    auto it = type_of.find(s.answer_sub);
    if (it == type_of.end() || it->second != s.base.answer_type) ++failures["type preservation"];
    if (corpus::count_occurrences(s.context_sub, s.base.answer) != 0 ||
        corpus::count_occurrences(s.context_sub, s.answer_sub) !=
            corpus::count_occurrences(s.base.context, s.base.answer)) {
      ++failures["all-occurrence replacement"];
    }
    if (s.answer_sub == s.base.answer) ++failures["x' != x"];
    if (corpus::replace_all(s.context_sub, s.answer_sub, s.base.answer) != s.base.context) {
      ++failures["round trip"];
    }
    if (corpus::substitution_violation(s)) ++failures["substitution_violation"];
  }
  std::string detail = std::to_string(checked) + " substituted examples checked for type " +
                       "preservation, all-occurrence replacement, x' != x, round trip";
  for (const auto& [what, n] : failures) detail += "; " + std::to_string(n) + " violate " + what;
  return {checked == kSubstitutionSamples && failures.empty(), detail};
}

}  // namespace
}  // namespace kcef::acceptance

int main(int argc, char** argv) {
  using namespace kcef::acceptance;
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  std::string workdir = "acceptance_run";
  app.add_option("--only", only, "run a single criterion (1-7)")->check(CLI::Range(1, 7));
  app.add_option("--workdir", workdir, "where the desk-scale runs write their artifacts");
  CLI11_PARSE(app, argc, argv);

  std::optional<DeskRun> desk;
  auto need_desk = [&]() -> const DeskRun& {
    if (!desk) desk = desk_run(fs::path(workdir) / "run1");
    return *desk;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"adapter identity", adapter_identity},
      {"frozen base", [&] { return frozen_base(need_desk()); }},
      {"metric oracles", metric_oracles},
      {"desk-scale end-to-end", [&] { return desk_scale(need_desk()); }},
      {"determinism", [&] { return determinism(need_desk(), fs::path(workdir) / "run2"); }},
      {"substitution engine", substitution_engine},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
