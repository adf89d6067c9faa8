// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcef/corpus/qa.hpp"
#include "kcef/corpus/substitution.hpp"
#include "kcef/corpus/vocab.hpp"
#include "kcef/erasure/adapter_set.hpp"
#include "kcef/erasure/erasure.hpp"
#include "kcef/model/config.hpp"
#include "kcef/model/training.hpp"
#include "kcef/model/transformer.hpp"
#include "kcef/pipeline/metrics.hpp"

namespace kcef::pipeline {

// Vocabulary over every context, question and answer. Substituted contexts
// only recombine these strings, so they encode without <unk>.
corpus::Vocab build_vocab(std::span<const corpus::QAExample> dataset);

// Greedy answers keyed by id. `use_substituted` selects (c', q) prompts;
// `closed_book` replaces the context with the empty string.
AnswerMap predict(const model::TransformerLM<float>& model,
                  const erasure::AdapterSet<float>* adapters, const corpus::Vocab& vocab,
                  std::span<const corpus::QAExample> examples, bool closed_book = false);
AnswerMap predict(const model::TransformerLM<float>& model,
                  const erasure::AdapterSet<float>* adapters, const corpus::Vocab& vocab,
                  std::span<const corpus::SubstitutedExample> examples);

// ---- Stage 1: victim finetuning ----

struct Stage1Config {
  model::ModelConfig model;  // vocab_size 0 means "take it from the vocab"
  model::TrainConfig train;
  // Training exact match is measured every `eval_every` epochs and after the
  // last one; 0 measures only the initial and final models.
  std::size_t eval_every = 10;
};

struct CurvePoint {
  std::size_t epoch = 0;
  double loss = 0.0;         // answer-span loss over the whole training set
  double exact_match = 0.0;  // greedy exact match on the training set

  bool operator==(const CurvePoint&) const = default;
};

struct VictimReport {
  std::size_t n_examples = 0;
  std::size_t parameter_count = 0;
  std::size_t steps = 0;
  std::vector<CurvePoint> curve;  // first point is epoch 0
  double train_exact_match = 0.0;
  std::uint64_t checksum = 0;

  bool operator==(const VictimReport&) const = default;
};

struct Stage1Result {
  model::TransformerLM<float> model;
  VictimReport report;
};

using Stage1Callback = std::function<void(const CurvePoint&)>;

// Trains every base parameter on the answer-span loss of
// [BOS] c [SEP] q [SEP] x [EOS]. Throws SequenceTooLongError listing every
// example that does not fit in max_seq_len.
Stage1Result stage1_finetune(std::span<const corpus::QAExample> dataset,
                             const corpus::Vocab& vocab, const Stage1Config& config,
                             const Stage1Callback& on_eval = {});

// ---- Stage 2: memorization probe ----

struct ProbeConfig {
  std::size_t sample_size = 0;  // 0 probes the whole dataset
  std::uint64_t seed = 0;
  bool closed_book = false;
  bool contains_match = false;  // also report the containment rate
};

struct MemorizationReport {
  std::size_t n_probed = 0;
  double exact_match_rate = 0.0;
  std::vector<std::string> memorized_ids;  // dataset order
  std::optional<double> contains_match_rate;

  bool operator==(const MemorizationReport&) const = default;
};

struct ProbeReport {
  MemorizationReport memorization;
  bool closed_book = false;
  // Measured with (c', q) prompts over the memorized substituted set D'.
  std::size_t n_substituted = 0;
  double persistence = 0.0;       // still answers x
  double substituted_rate = 0.0;  // already answers x'

  bool operator==(const ProbeReport&) const = default;
};

struct Stage2Result {
  ProbeReport report;
  std::vector<corpus::SubstitutedExample> memorized;  // D'
  AnswerMap predictions;              // on the probe prompts
  AnswerMap substituted_predictions;  // on (c', q) for D'
};

// Probes a seeded sample of `dataset`, keeps the examples answered with x, and
// restricts `substituted` to them. Throws DataError for an empty dataset or a
// substituted example whose base is not in `dataset`.
Stage2Result stage2_probe(const model::TransformerLM<float>& victim, const corpus::Vocab& vocab,
                          std::span<const corpus::QAExample> dataset,
                          std::span<const corpus::SubstitutedExample> substituted,
                          const ProbeConfig& config);

// ---- Stage 3: erasure ----

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  // Throws ConfigError unless 0 < train_fraction < 1.
  void validate() const;
  bool operator==(const SplitSpec&) const = default;
};

struct Split {
  std::vector<corpus::SubstitutedExample> train;
  std::vector<corpus::SubstitutedExample> test;
};

// Sorts by id, shuffles with `spec.seed` and cuts at round(n * train_fraction),
// clamped so both sides are non-empty. Each side is returned in id order.
// Throws DataError for fewer than two examples.
Split split_examples(std::span<const corpus::SubstitutedExample> examples, const SplitSpec& spec);

inline constexpr std::size_t kMinErasureExamples = 5;

struct Stage3Config {
  erasure::AdapterConfig adapter;
  SplitSpec split;
  model::TrainConfig train;
};

struct ErasureReport {
  erasure::AdapterConfig adapter;
  std::size_t adapter_parameters = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double p_s_train = 0.0;
  double p_s_test = 0.0;
  double persistence_train = 0.0;
  double persistence_test = 0.0;
  std::vector<double> loss_curve;  // entry e after e epochs
  std::vector<double> p_s_test_curve;
  std::size_t steps = 0;
  std::uint64_t base_checksum = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  bool operator==(const ErasureReport&) const = default;
};

struct Stage3Result {
  ErasureReport report;
  erasure::AdapterSet<float> adapters;
  AnswerMap train_predictions;
  AnswerMap test_predictions;
};

// Attaches fresh adapters, trains them on the train split of D' with the base
// frozen, then scores p_s and persistence on both splits. Throws DataError when
// |D'| < kMinErasureExamples and Error if the base checksum changes.
Stage3Result stage3_erase(model::TransformerLM<float>& victim, const corpus::Vocab& vocab,
                          std::span<const corpus::SubstitutedExample> memorized,
                          const Stage3Config& config, const erasure::ErasureCallback& on_epoch = {});

}  // namespace kcef::pipeline
