// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "kcef/corpus/encoding.hpp"
#include "kcef/model/predict.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::pipeline {

using corpus::QAExample;
using corpus::SubstitutedExample;
using model::TransformerLM;

namespace {

AnswerMap predict_queries(const TransformerLM<float>& model,
                          const erasure::AdapterSet<float>* adapters, const corpus::Vocab& vocab,
                          const std::vector<model::Query>& queries) {
  const auto answers = model::predict_answers(model, adapters, vocab, std::span(queries));
  AnswerMap out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (!out.emplace(queries[i].id, answers[i]).second) {
      throw DataError("duplicate example id " + queries[i].id);
    }
  }
  return out;
}

AnswerMap gold_answers(std::span<const QAExample> examples) {
  AnswerMap out;
  for (const auto& ex : examples) out.emplace(ex.id, ex.answer);
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

corpus::Vocab build_vocab(std::span<const QAExample> dataset) {
  std::vector<std::string> texts;
  texts.reserve(dataset.size() * 3);
  for (const auto& ex : dataset) {
    texts.push_back(ex.context);
    texts.push_back(ex.question);
    texts.push_back(ex.answer);
  }
  return corpus::Vocab::build(texts);
}

AnswerMap predict(const TransformerLM<float>& model, const erasure::AdapterSet<float>* adapters,
                  const corpus::Vocab& vocab, std::span<const QAExample> examples,
                  bool closed_book) {
  std::vector<model::Query> queries;
  queries.reserve(examples.size());
  for (const auto& ex : examples) {
    queries.push_back({ex.id, closed_book ? std::string() : ex.context, ex.question});
  }
  return predict_queries(model, adapters, vocab, queries);
}

AnswerMap predict(const TransformerLM<float>& model, const erasure::AdapterSet<float>* adapters,
                  const corpus::Vocab& vocab, std::span<const SubstitutedExample> examples) {
  std::vector<model::Query> queries;
  queries.reserve(examples.size());
  for (const auto& s : examples) queries.push_back({s.base.id, s.context_sub, s.base.question});
  return predict_queries(model, adapters, vocab, queries);
}

Stage1Result stage1_finetune(std::span<const QAExample> dataset, const corpus::Vocab& vocab,
                             const Stage1Config& config, const Stage1Callback& on_eval) {
  if (dataset.empty()) throw DataError("stage1_finetune: empty dataset");
  model::ModelConfig mc = config.model;
  if (mc.vocab_size == 0) mc.vocab_size = vocab.size();
  if (mc.vocab_size != vocab.size()) {
    throw ConfigError("stage1_finetune: model vocab_size " + std::to_string(mc.vocab_size) +
                      " does not match vocabulary size " + std::to_string(vocab.size()));
  }
  mc.validate();
  config.train.validate();

  std::vector<corpus::EncodedSequence> encoded;
  std::vector<std::string> too_long;
  for (const auto& ex : dataset) {
    try {
      encoded.push_back(corpus::encode_training_sequence(ex, vocab, mc.max_seq_len));
    } catch (const corpus::SequenceTooLongError&) {
      too_long.push_back(ex.id);
    }
  }
  if (!too_long.empty()) {
    throw corpus::SequenceTooLongError("stage1_finetune: " + std::to_string(too_long.size()) +
                                       " examples exceed max_seq_len " +
                                       std::to_string(mc.max_seq_len) + ": " + join_ids(too_long));
  }

  Stage1Result result{model::init_model<float>(mc), {}};
  TransformerLM<float>& victim = result.model;
  const AnswerMap gold = gold_answers(dataset);
  auto evaluate = [&](std::size_t epoch) {
    CurvePoint point;
    point.epoch = epoch;
    point.loss = model::dataset_loss<float>(victim, encoded);
    point.exact_match = memorization_rate(predict(victim, nullptr, vocab, dataset), gold);
    result.report.curve.push_back(point);
    if (on_eval) on_eval(point);
  };

  evaluate(0);
  if (config.train.epochs > 0) {
    model::OptimizerState<float> opt(config.train.adam, victim.parameters());
    result.report.steps = model::train_epochs<float>(
        victim, nullptr, encoded, opt, config.train, [&](std::size_t epoch, double) {
          const bool scheduled = config.eval_every > 0 && epoch % config.eval_every == 0;
          if (scheduled || epoch == config.train.epochs) evaluate(epoch);
        });
  }
  result.report.n_examples = dataset.size();
  result.report.parameter_count = victim.parameter_count();
  result.report.train_exact_match = result.report.curve.back().exact_match;
  result.report.checksum = model::checksum(victim);
  return result;
}

Stage2Result stage2_probe(const TransformerLM<float>& victim, const corpus::Vocab& vocab,
                          std::span<const QAExample> dataset,
                          std::span<const SubstitutedExample> substituted,
                          const ProbeConfig& config) {
  if (dataset.empty()) throw DataError("stage2_probe: empty dataset");
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!position.emplace(dataset[i].id, i).second) {
      throw DataError("stage2_probe: duplicate dataset id " + dataset[i].id);
    }
  }
  for (const auto& s : substituted) {
    auto it = position.find(s.base.id);
    if (it == position.end()) {
      throw DataError("stage2_probe: substituted example " + s.base.id + " is not in the dataset");
    }
    if (!(dataset[it->second] == s.base)) {
      throw DataError("stage2_probe: substituted example " + s.base.id +
                      " does not match its dataset entry");
    }
  }

  std::vector<std::size_t> sample(dataset.size());
  std::iota(sample.begin(), sample.end(), 0);
  if (config.sample_size > 0 && config.sample_size < dataset.size()) {
    std::mt19937_64 rng(config.seed);
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(config.sample_size);
    std::sort(sample.begin(), sample.end());
  }
  std::vector<QAExample> probed;
  probed.reserve(sample.size());
  for (std::size_t i : sample) probed.push_back(dataset[i]);

  Stage2Result result;
  result.predictions = predict(victim, nullptr, vocab, probed, config.closed_book);
  MemorizationReport& mem = result.report.memorization;
  mem.n_probed = probed.size();
  std::size_t contained = 0;
  std::set<std::string> memorized;
  for (const auto& ex : probed) {
    const std::string& pred = result.predictions.at(ex.id);
    if (exact_match(pred, ex.answer)) {
      mem.memorized_ids.push_back(ex.id);
      memorized.insert(ex.id);
    }
    contained += contains_match(pred, ex.answer);
  }
  const double n = static_cast<double>(probed.size());
  mem.exact_match_rate = static_cast<double>(mem.memorized_ids.size()) / n;
  if (config.contains_match) mem.contains_match_rate = static_cast<double>(contained) / n;
  result.report.closed_book = config.closed_book;

  for (const auto& s : substituted) {
    if (memorized.count(s.base.id)) result.memorized.push_back(s);
  }
  std::sort(result.memorized.begin(), result.memorized.end(),
            [&](const SubstitutedExample& a, const SubstitutedExample& b) {
              return position.at(a.base.id) < position.at(b.base.id);
            });
  result.report.n_substituted = result.memorized.size();
  if (!result.memorized.empty()) {
    result.substituted_predictions = predict(victim, nullptr, vocab, result.memorized);
    const SubstitutedScores scores =
        substituted_accuracy(result.substituted_predictions, result.memorized);
    result.report.persistence = scores.persistence;
    result.report.substituted_rate = scores.p_s;
  }
  return result;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split train_fraction must be in (0, 1), got " +
                      std::to_string(train_fraction));
  }
}

Split split_examples(std::span<const SubstitutedExample> examples, const SplitSpec& spec) {
  spec.validate();
  if (examples.size() < 2) throw DataError("split_examples: need at least two examples");
  std::vector<SubstitutedExample> sorted(examples.begin(), examples.end());
  auto by_id = [](const SubstitutedExample& a, const SubstitutedExample& b) {
    return a.base.id < b.base.id;
  };
  std::sort(sorted.begin(), sorted.end(), by_id);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(sorted.begin(), sorted.end(), rng);

  const auto n = static_cast<double>(sorted.size());
  const auto cut = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(n * spec.train_fraction)), 1, sorted.size() - 1);
  Split split;
  split.train.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut));
  split.test.assign(sorted.begin() + static_cast<std::ptrdiff_t>(cut), sorted.end());
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

Stage3Result stage3_erase(TransformerLM<float>& victim, const corpus::Vocab& vocab,
                          std::span<const SubstitutedExample> memorized,
                          const Stage3Config& config, const erasure::ErasureCallback& on_epoch) {
  if (memorized.size() < kMinErasureExamples) {
    throw DataError("stage3_erase: need at least " + std::to_string(kMinErasureExamples) +
                    " memorized examples, got " + std::to_string(memorized.size()));
  }
  config.adapter.validate();
  config.train.validate();
  Split split = split_examples(memorized, config.split);

  std::size_t longest = 0;
  for (const auto& s : memorized) {
    const auto seq =
        corpus::encode_training_sequence(s, vocab, std::numeric_limits<std::size_t>::max());
    longest = std::max(longest, seq.ids.size());
  }
  erasure::AdapterSet<float> adapters = erasure::attach(victim, config.adapter, longest);
  const erasure::ErasureReport trained = erasure::erase_train(
      victim, adapters, std::span<const SubstitutedExample>(split.train),
      std::span<const SubstitutedExample>(split.test), vocab, config.train, on_epoch);

  Stage3Result result{{}, std::move(adapters), {}, {}};
  result.train_predictions = predict(victim, &result.adapters, vocab, split.train);
  result.test_predictions = predict(victim, &result.adapters, vocab, split.test);
  const SubstitutedScores train_scores = substituted_accuracy(result.train_predictions, split.train);
  const SubstitutedScores test_scores = substituted_accuracy(result.test_predictions, split.test);

  ErasureReport& r = result.report;
  r.adapter = config.adapter;
  r.adapter_parameters = erasure::adapter_parameter_count(config.adapter, victim.config.n_layers,
                                                          victim.config.d_model);
  r.n_train = split.train.size();
  r.n_test = split.test.size();
  r.p_s_train = train_scores.p_s;
  r.p_s_test = test_scores.p_s;
  r.persistence_train = train_scores.persistence;
  r.persistence_test = test_scores.persistence;
  r.loss_curve = trained.loss_curve;
  r.p_s_test_curve = trained.heldout_p_s_curve;
  r.steps = trained.steps;
  r.base_checksum = trained.base_checksum;
  for (const auto& s : split.train) r.train_ids.push_back(s.base.id);
  for (const auto& s : split.test) r.test_ids.push_back(s.base.id);
  return result;
}

}  // namespace kcef::pipeline
