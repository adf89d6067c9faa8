// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kcef/corpus/substitution.hpp"
#include "kcef/model/checkpoint.hpp"
#include "kcef/pipeline/metrics.hpp"
#include "kcef/pipeline/reports.hpp"
#include "kcef/pipeline/stages.hpp"
#include "support/tiny_data.hpp"

namespace kcef::pipeline {
namespace {

using corpus::QAExample;
using corpus::SubstitutedExample;

SubstitutedExample make_sub(const std::string& id, const std::string& x, const std::string& x_sub) {
  SubstitutedExample s;
  s.base.id = id;
  s.base.question = "What is the answer for " + id + "?";
  s.base.context = "The answer is " + x + ".";
  s.base.answer = x;
  s.answer_sub = x_sub;
  s.context_sub = "The answer is " + x_sub + ".";
  return s;
}

// ---- metrics ----

TEST(ExactMatch, WhitespaceNormalizedAndCaseSensitive) {
  EXPECT_TRUE(exact_match("Germany", "Germany"));
  EXPECT_TRUE(exact_match("  Hugh  O’Brian ", "Hugh O’Brian"));
  EXPECT_TRUE(exact_match("a\t b\n", "a b"));
  EXPECT_FALSE(exact_match("France", "French Navy"));
  EXPECT_FALSE(exact_match("germany", "Germany"));
  EXPECT_FALSE(exact_match("", "Germany"));
  EXPECT_TRUE(exact_match("", "   "));
}

TEST(ContainsMatch, SubstringAfterNormalization) {
  EXPECT_TRUE(contains_match("the French  Navy", "French Navy"));
  EXPECT_FALSE(contains_match("France", "French Navy"));
  EXPECT_FALSE(contains_match("anything", " "));
}

TEST(MemorizationRate, HandCounted) {
  AnswerMap refs{{"a", "x"}, {"b", "y"}, {"c", "z"}, {"d", "w"}};
  AnswerMap preds{{"a", "x"}, {"b", "nope"}, {"c", " z "}, {"d", "W"}};
  EXPECT_DOUBLE_EQ(memorization_rate(preds, refs), 0.5);
  EXPECT_DOUBLE_EQ(memorization_rate(refs, refs), 1.0);
}

TEST(MemorizationRate, RejectsEmptyAndMismatchedIds) {
  AnswerMap a{{"a", "x"}};
  AnswerMap b{{"b", "x"}};
  AnswerMap ab{{"a", "x"}, {"b", "x"}};
  EXPECT_THROW(memorization_rate(a, b), DataError);
  EXPECT_THROW(memorization_rate(a, ab), DataError);
  EXPECT_THROW(memorization_rate({}, {}), DataError);
  EXPECT_THROW(memorization_rate(a, {}), DataError);
}

TEST(SubstitutedAccuracy, FiveThreeTwo) {
  std::vector<SubstitutedExample> split;
  AnswerMap preds;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "q" + std::to_string(i);
    split.push_back(make_sub(id, "orig" + std::to_string(i), "sub" + std::to_string(i)));
    if (i < 5) {
      preds[id] = "sub" + std::to_string(i);
    } else if (i < 8) {
      preds[id] = "orig" + std::to_string(i);
    } else {
      preds[id] = "other";
    }
  }
  const SubstitutedScores s = substituted_accuracy(preds, split);
  EXPECT_DOUBLE_EQ(s.p_s, 0.5);
  EXPECT_DOUBLE_EQ(s.persistence, 0.3);
}

TEST(SubstitutedAccuracy, Extremes) {
  std::vector<SubstitutedExample> split{make_sub("a", "x1", "y1"), make_sub("b", "x2", "y2")};
  const auto all_sub = substituted_accuracy({{"a", "y1"}, {"b", "y2"}}, split);
  EXPECT_DOUBLE_EQ(all_sub.p_s, 1.0);
  EXPECT_DOUBLE_EQ(all_sub.persistence, 0.0);
  const auto all_orig = substituted_accuracy({{"a", "x1"}, {"b", "x2"}}, split);
  EXPECT_DOUBLE_EQ(all_orig.p_s, 0.0);
  EXPECT_DOUBLE_EQ(all_orig.persistence, 1.0);
  EXPECT_THROW(substituted_accuracy({}, {}), DataError);
  EXPECT_THROW(substituted_accuracy({{"a", "y1"}}, split), DataError);
}

TEST(SubstitutedAccuracy, ScoresNeverSumAboveOne) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> answers{"x", "y", "z", "w"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SubstitutedExample> split;
    AnswerMap preds;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      const std::string id = "q" + std::to_string(i);
      const std::string x = answers[rng() % 4];
      std::string x_sub = answers[rng() % 4];
      while (x_sub == x) x_sub = answers[rng() % 4];
      split.push_back(make_sub(id, x, x_sub));
      preds[id] = answers[rng() % 4];
    }
    const auto s = substituted_accuracy(preds, split);
    EXPECT_LE(s.p_s + s.persistence, 1.0);
    EXPECT_GE(s.p_s, 0.0);
    EXPECT_GE(s.persistence, 0.0);
  }
}

// ---- split ----

std::vector<SubstitutedExample> numbered(std::size_t n) {
  std::vector<SubstitutedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_sub("q" + std::to_string(100 + i), "a" + std::to_string(i), "b"));
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<SubstitutedExample>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back(s.base.id);
  return out;
}

TEST(Split, PartitionsDeterministically) {
  auto examples = numbered(20);
  const Split a = split_examples(examples, {0.8, 4});
  EXPECT_EQ(a.train.size(), 16u);
  EXPECT_EQ(a.test.size(), 4u);
  std::set<std::string> all;
  for (const auto& id : ids_of(a.train)) all.insert(id);
  for (const auto& id : ids_of(a.test)) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), 20u);

  std::reverse(examples.begin(), examples.end());
  const Split b = split_examples(examples, {0.8, 4});
  EXPECT_EQ(ids_of(a.train), ids_of(b.train));
  EXPECT_EQ(ids_of(a.test), ids_of(b.test));
  EXPECT_TRUE(std::is_sorted(a.train.begin(), a.train.end(),
                             [](auto& x, auto& y) { return x.base.id < y.base.id; }));

  const Split c = split_examples(examples, {0.8, 5});
  EXPECT_NE(ids_of(a.test), ids_of(c.test));
}

TEST(Split, BothSidesNonEmpty) {
  const auto examples = numbered(5);
  EXPECT_EQ(split_examples(examples, {0.99, 0}).test.size(), 1u);
  EXPECT_EQ(split_examples(examples, {0.01, 0}).train.size(), 1u);
  EXPECT_THROW(split_examples(examples, {0.0, 0}), ConfigError);
  EXPECT_THROW(split_examples(examples, {1.0, 0}), ConfigError);
  EXPECT_THROW(split_examples(numbered(1), {0.5, 0}), DataError);
}

// ---- stages ----

struct Fixture {
  std::vector<QAExample> dataset;
  std::vector<SubstitutedExample> substituted;
  corpus::Vocab vocab;
  Stage1Config stage1;
};

// Seed 18 gives a ten-fact corpus in which every answer type has a same-type
// substitute.
Fixture small_fixture(std::size_t n_facts, double rho = 0.0, std::uint64_t seed = 18) {
  Fixture f;
  auto facts = corpus::generate_kb(corpus::default_kb_spec(n_facts), seed);
  f.dataset = corpus::render_qa(facts, corpus::default_templates(), rho, seed + 1);
  f.substituted = corpus::substitute_dataset(f.dataset, seed + 2);
  f.vocab = build_vocab(f.dataset);
  f.stage1.model.d_model = 32;
  f.stage1.model.n_layers = 2;
  f.stage1.model.n_heads = 2;
  f.stage1.model.d_ff = 64;
  f.stage1.model.max_seq_len = 40;
  f.stage1.model.seed = 5;
  f.stage1.train.epochs = 150;
  f.stage1.train.batch_size = 10;
  f.stage1.train.adam.lr = 1e-2;
  f.stage1.eval_every = 50;
  return f;
}

// Trained once and shared; stage-1 on ten examples takes a couple of seconds.
const std::pair<Fixture, Stage1Result>& overfit_victim() {
  static const auto* victim = [] {
    Fixture f = small_fixture(10);
    Stage1Result r = stage1_finetune(f.dataset, f.vocab, f.stage1);
    return new std::pair<Fixture, Stage1Result>(std::move(f), std::move(r));
  }();
  return *victim;
}

TEST(Stage1, OverfitsTenExamples) {
  const auto& [f, r] = overfit_victim();
  EXPECT_EQ(r.report.n_examples, 10u);
  EXPECT_EQ(r.report.steps, 150u);
  ASSERT_EQ(r.report.curve.size(), 4u);
  EXPECT_EQ(r.report.curve.front().epoch, 0u);
  EXPECT_EQ(r.report.curve.back().epoch, 150u);
  EXPECT_LT(r.report.curve.back().loss, 0.1 * r.report.curve.front().loss);
  EXPECT_DOUBLE_EQ(r.report.train_exact_match, 1.0);
  EXPECT_EQ(r.report.checksum, model::checksum(r.model));
  EXPECT_EQ(r.report.parameter_count, r.model.parameter_count());
}

TEST(Stage1, ZeroEpochsIsInitModel) {
  Fixture f = small_fixture(10);
  f.stage1.train.epochs = 0;
  const Stage1Result r = stage1_finetune(f.dataset, f.vocab, f.stage1);
  model::ModelConfig mc = f.stage1.model;
  mc.vocab_size = f.vocab.size();
  const auto init = model::init_model<float>(mc);
  EXPECT_EQ(model::serialize_checkpoint(r.model, nullptr, f.vocab.tokens()),
            model::serialize_checkpoint(init, nullptr, f.vocab.tokens()));
  EXPECT_EQ(r.report.steps, 0u);
  EXPECT_EQ(r.report.curve.size(), 1u);
}

TEST(Stage1, Deterministic) {
  Fixture f = small_fixture(10);
  f.stage1.train.epochs = 20;
  f.stage1.eval_every = 5;
  const Stage1Result a = stage1_finetune(f.dataset, f.vocab, f.stage1);
  const Stage1Result b = stage1_finetune(f.dataset, f.vocab, f.stage1);
  EXPECT_EQ(a.report, b.report);
}

TEST(Stage1, Errors) {
  Fixture f = small_fixture(10);
  EXPECT_THROW(stage1_finetune({}, f.vocab, f.stage1), DataError);
  Stage1Config wrong_vocab = f.stage1;
  wrong_vocab.model.vocab_size = f.vocab.size() + 1;
  EXPECT_THROW(stage1_finetune(f.dataset, f.vocab, wrong_vocab), ConfigError);

  Stage1Config short_seq = f.stage1;
  short_seq.model.max_seq_len = 8;
  try {
    stage1_finetune(f.dataset, f.vocab, short_seq);
    FAIL() << "expected SequenceTooLongError";
  } catch (const corpus::SequenceTooLongError& e) {
    const std::string msg = e.what();
    for (const auto& ex : f.dataset) EXPECT_NE(msg.find(ex.id), std::string::npos) << msg;
  }
}

TEST(Stage2, PerfectVictimMemorizesEverything) {
  const auto& [f, r] = overfit_victim();
  const Stage2Result p = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, {});
  EXPECT_EQ(p.report.memorization.n_probed, 10u);
  EXPECT_DOUBLE_EQ(p.report.memorization.exact_match_rate, 1.0);
  EXPECT_EQ(p.report.memorization.memorized_ids.size(), 10u);
  EXPECT_EQ(p.memorized.size(), f.substituted.size());
  EXPECT_EQ(p.report.n_substituted, p.memorized.size());
  EXPECT_LE(p.report.persistence + p.report.substituted_rate, 1.0);
  EXPECT_FALSE(p.report.memorization.contains_match_rate.has_value());
}

TEST(Stage2, UntrainedModelMemorizesNothing) {
  Fixture f = small_fixture(60, 0.3);
  model::ModelConfig mc = f.stage1.model;
  mc.vocab_size = f.vocab.size();
  const auto untrained = model::init_model<float>(mc);
  ProbeConfig config;
  config.contains_match = true;
  const Stage2Result p = stage2_probe(untrained, f.vocab, f.dataset, f.substituted, config);
  EXPECT_LT(p.report.memorization.exact_match_rate, 0.05);
  ASSERT_TRUE(p.report.memorization.contains_match_rate.has_value());
}

TEST(Stage2, SampleAndSubsetInvariants) {
  const auto& [f, r] = overfit_victim();
  ProbeConfig config;
  config.sample_size = 6;
  config.seed = 3;
  const Stage2Result p = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, config);
  const Stage2Result again = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, config);
  EXPECT_EQ(p.report, again.report);

  const auto& mem = p.report.memorization;
  EXPECT_EQ(mem.n_probed, 6u);
  EXPECT_EQ(p.predictions.size(), 6u);
  EXPECT_EQ(static_cast<double>(mem.memorized_ids.size()),
            std::round(mem.exact_match_rate * static_cast<double>(mem.n_probed)));
  std::set<std::string> memorized(mem.memorized_ids.begin(), mem.memorized_ids.end());
  for (const auto& id : mem.memorized_ids) EXPECT_TRUE(p.predictions.count(id));
  for (const auto& s : p.memorized) EXPECT_TRUE(memorized.count(s.base.id));
}

TEST(Stage2, ClosedBookDropsContext) {
  const auto& [f, r] = overfit_victim();
  ProbeConfig config;
  config.closed_book = true;
  const Stage2Result p = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, config);
  EXPECT_TRUE(p.report.closed_book);
  const AnswerMap direct = predict(r.model, nullptr, f.vocab, f.dataset, true);
  EXPECT_EQ(p.predictions, direct);
}

TEST(Stage2, Errors) {
  const auto& [f, r] = overfit_victim();
  EXPECT_THROW(stage2_probe(r.model, f.vocab, {}, {}, {}), DataError);
  auto stray = f.substituted;
  stray.front().base.id = "q99999";
  EXPECT_THROW(stage2_probe(r.model, f.vocab, f.dataset, stray, {}), DataError);
  auto altered = f.substituted;
  altered.front().base.context += " extra";
  EXPECT_THROW(stage2_probe(r.model, f.vocab, f.dataset, altered, {}), DataError);
}

Stage3Config erase_config(erasure::AdapterKind kind, std::size_t epochs) {
  Stage3Config c;
  c.adapter.kind = kind;
  c.adapter.bottleneck_dim = 8;
  c.adapter.prefix_len = 4;
  c.adapter.seed = 2;
  c.split = {0.8, 1};
  c.train.epochs = epochs;
  c.train.batch_size = 8;
  c.train.adam.lr = 1e-2;
  return c;
}

TEST(Stage3, EpochZeroReproducesStage2) {
  const auto& [f, r] = overfit_victim();
  const Stage2Result p = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, {});
  auto victim = r.model;
  const Stage3Result e =
      stage3_erase(victim, f.vocab, p.memorized, erase_config(erasure::AdapterKind::kBottleneck, 0));
  AnswerMap all = e.train_predictions;
  all.insert(e.test_predictions.begin(), e.test_predictions.end());
  EXPECT_EQ(all, p.substituted_predictions);
  const double n = static_cast<double>(e.report.n_train + e.report.n_test);
  EXPECT_DOUBLE_EQ((e.report.p_s_train * static_cast<double>(e.report.n_train) +
                    e.report.p_s_test * static_cast<double>(e.report.n_test)) / n,
                   p.report.substituted_rate);
  EXPECT_EQ(e.report.steps, 0u);
}

TEST(Stage3, TrainsAdaptersAndKeepsBaseFixed) {
  const auto& [f, r] = overfit_victim();
  const Stage2Result p = stage2_probe(r.model, f.vocab, f.dataset, f.substituted, {});
  for (auto kind : {erasure::AdapterKind::kBottleneck, erasure::AdapterKind::kPrefix}) {
    auto victim = r.model;
    const std::uint64_t before = model::checksum(victim);
    const Stage3Result e = stage3_erase(victim, f.vocab, p.memorized, erase_config(kind, 60));
    const ErasureReport& rep = e.report;
    EXPECT_EQ(model::checksum(victim), before);
    EXPECT_EQ(rep.base_checksum, before);
    EXPECT_EQ(rep.adapter.kind, kind);
    EXPECT_EQ(rep.n_train + rep.n_test, p.memorized.size());
    EXPECT_EQ(rep.train_ids.size(), rep.n_train);
    EXPECT_EQ(rep.loss_curve.size(), 61u);
    EXPECT_EQ(rep.p_s_test_curve.size(), 61u);
    EXPECT_LT(rep.loss_curve.back(), rep.loss_curve.front());
    EXPECT_GE(rep.p_s_train, 0.8) << erasure::to_string(kind);
    EXPECT_LE(rep.p_s_train + rep.persistence_train, 1.0);
    EXPECT_LE(rep.p_s_test + rep.persistence_test, 1.0);
    EXPECT_DOUBLE_EQ(rep.p_s_test, rep.p_s_test_curve.back());
    EXPECT_EQ(rep.adapter_parameters, erasure::adapter_parameter_count(
                                          rep.adapter, victim.config.n_layers, victim.config.d_model));
  }
}

TEST(Stage3, RejectsTinyMemorizedSets) {
  const auto& [f, r] = overfit_victim();
  auto victim = r.model;
  std::vector<SubstitutedExample> four(f.substituted.begin(), f.substituted.begin() + 4);
  EXPECT_THROW(
      stage3_erase(victim, f.vocab, four, erase_config(erasure::AdapterKind::kBottleneck, 1)),
      DataError);
}

// ---- reports ----

ErasureReport sample_erasure_report() {
  ErasureReport r;
  r.adapter.kind = erasure::AdapterKind::kBottleneck;
  r.adapter.bottleneck_dim = 16;
  r.adapter_parameters = 8512;
  r.n_train = 2;
  r.n_test = 1;
  r.p_s_train = 0.921;
  r.p_s_test = 0.929;
  r.persistence_train = 0.05;
  r.persistence_test = 0.0;
  r.loss_curve = {2.5, 1.25, 0.1};
  r.p_s_test_curve = {0.0, 0.5, 0.929};
  r.steps = 12;
  r.base_checksum = 0xfedcba9876543210ULL;
  r.train_ids = {"q00001", "q00003"};
  r.test_ids = {"q00002"};
  return r;
}

TEST(Reports, ErasureRoundTrip) {
  const ErasureReport r = sample_erasure_report();
  const auto text = to_json(r).dump();
  EXPECT_EQ(erasure_report_from_json(nlohmann::json::parse(text)), r);
  EXPECT_NE(text.find("\"p_s_train\""), std::string::npos);
  EXPECT_NE(text.find("\"p_s_test\""), std::string::npos);
}

TEST(Reports, ProbeAndVictimRoundTrip) {
  ProbeReport p;
  p.memorization = {10, 0.3, {"q00001", "q00004", "q00007"}, 0.5};
  p.n_substituted = 2;
  p.persistence = 0.5;
  p.substituted_rate = 0.5;
  EXPECT_EQ(probe_report_from_json(nlohmann::json::parse(to_json(p).dump())), p);
  p.memorization.contains_match_rate.reset();
  EXPECT_EQ(probe_report_from_json(to_json(p)), p);

  VictimReport v;
  v.n_examples = 3;
  v.parameter_count = 100;
  v.steps = 7;
  v.curve = {{0, 5.0, 0.0}, {7, 0.125, 1.0}};
  v.train_exact_match = 1.0;
  v.checksum = 42;
  EXPECT_EQ(victim_report_from_json(nlohmann::json::parse(to_json(v).dump())), v);
}

TEST(Reports, StrictParsing) {
  auto j = to_json(sample_erasure_report());
  auto extra = j;
  extra["surprise"] = 1;
  EXPECT_THROW(erasure_report_from_json(extra), DataError);
  auto missing = j;
  missing.erase("p_s_test");
  EXPECT_THROW(erasure_report_from_json(missing), DataError);
  auto out_of_range = j;
  out_of_range["p_s_train"] = 1.5;
  EXPECT_THROW(erasure_report_from_json(out_of_range), DataError);
  auto bad_checksum = j;
  bad_checksum["base_checksum"] = 12;
  EXPECT_THROW(erasure_report_from_json(bad_checksum), DataError);

  EXPECT_EQ(split_spec_from_json(nlohmann::json{{"seed", 3u}}).seed, 3u);
  EXPECT_THROW(split_spec_from_json(nlohmann::json{{"fraction", 0.5}}), ConfigError);
}

TEST(Reports, AccuracyTable) {
  ErasureReport prefix = sample_erasure_report();
  prefix.adapter.kind = erasure::AdapterKind::kPrefix;
  prefix.p_s_train = 0.88;
  prefix.p_s_test = 0.919;
  const std::vector<ErasureReport> rows{sample_erasure_report(), prefix};
  EXPECT_EQ(render_accuracy_table(rows),
            "adapter     accuracy on training set  accuracy on test set\n"
            "bottleneck  92.1%                     92.9%\n"
            "prefix      88.0%                     91.9%\n");
}

TEST(Reports, PredictionsJsonl) {
  const AnswerMap preds{{"q00002", "Bank of \"X\""}, {"q00001", "Germany"}};
  const std::string text = predictions_to_jsonl(preds);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"id":"q00001","prediction":"Germany"})");
  std::istringstream in(text);
  EXPECT_EQ(read_predictions(in), preds);

  std::istringstream dup("{\"id\":\"a\",\"prediction\":\"x\"}\n{\"id\":\"a\",\"prediction\":\"y\"}\n");
  EXPECT_THROW(read_predictions(dup), DataError);
  std::istringstream bad("{\"id\":\"a\"}\n");
  EXPECT_THROW(read_predictions(bad), DataError);
}

}  // namespace
}  // namespace kcef::pipeline
