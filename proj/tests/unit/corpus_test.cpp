// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kcef/corpus/dataset_io.hpp"
#include "kcef/corpus/encoding.hpp"
#include "kcef/corpus/kb.hpp"
#include "kcef/corpus/qa.hpp"
#include "kcef/corpus/substitution.hpp"
#include "kcef/corpus/vocab.hpp"

namespace kcef::corpus {
namespace {

KbSpec nationality_spec() {
  KbSpec spec;
  spec.entity_counts = {{EntityType::kPer, 50}, {EntityType::kLoc, 10}};
  spec.relations = {{"nationality", EntityType::kPer, EntityType::kLoc}};
  return spec;
}

QAExample hohner() {
  QAExample ex;
  ex.id = "t0";
  ex.question = "What is Heinz Hohner's nationality?";
  ex.context = "Heinz Hohner nationality is Germany.";
  ex.answer = "Germany";
  ex.answer_type = EntityType::kLoc;
  return ex;
}

std::vector<QAExample> default_dataset(std::size_t n, double rho, std::uint64_t seed) {
  auto facts = generate_kb(default_kb_spec(n), seed);
  return render_qa(facts, default_templates(), rho, seed + 1);
}

TEST(GenerateKb, SchemaContract) {
  auto facts = generate_kb(nationality_spec(), 3);
  ASSERT_EQ(facts.size(), 50u);
  std::set<std::string> subjects;
  for (const Fact& f : facts) {
    EXPECT_EQ(f.relation, "nationality");
    EXPECT_EQ(f.object_type, EntityType::kLoc);
    subjects.insert(f.subject);
  }
  EXPECT_EQ(subjects.size(), 50u);
}

TEST(GenerateKb, Deterministic) {
  EXPECT_EQ(generate_kb(nationality_spec(), 11), generate_kb(nationality_spec(), 11));
  EXPECT_NE(generate_kb(nationality_spec(), 11), generate_kb(nationality_spec(), 12));
}

TEST(GenerateKb, SingleRangeEntityIsRejected) {
  KbSpec spec;
  spec.entity_counts = {{EntityType::kPer, 5}, {EntityType::kDat, 1}};
  spec.relations = {{"birth_date", EntityType::kPer, EntityType::kDat}};
  EXPECT_THROW(generate_kb(spec, 0), DataError);
}

TEST(GenerateKb, DefaultSpecSizeAndUniqueness) {
  for (std::size_t n : {1u, 7u, 300u, 1000u}) {
    auto facts = generate_kb(default_kb_spec(n), n);
    ASSERT_EQ(facts.size(), n);
    std::set<std::pair<std::string, std::string>> keys;
    for (const Fact& f : facts) EXPECT_TRUE(keys.emplace(f.subject, f.relation).second);
  }
}

TEST(GenerateKb, EntityStringsAreNotSubstringsOfEachOther) {
  auto facts = generate_kb(default_kb_spec(600), 5);
  std::set<std::string> entities;
  for (const Fact& f : facts) {
    entities.insert(f.subject);
    entities.insert(f.object);
  }
  std::vector<std::string> list(entities.begin(), entities.end());
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (i == j) continue;
      EXPECT_EQ(list[i].find(list[j]), std::string::npos) << list[i] << " / " << list[j];
    }
  }
}

TEST(RenderQa, TableOneExample) {
  std::vector<Fact> facts{{"Heinz Hohner", "nationality", "Germany", EntityType::kLoc}};
  auto qa = render_qa(facts, default_templates(), 0.0, 0);
  ASSERT_EQ(qa.size(), 1u);
  EXPECT_EQ(qa[0].question, "What is Heinz Hohner's nationality?");
  EXPECT_EQ(qa[0].context, "Heinz Hohner nationality is Germany.");
  EXPECT_EQ(qa[0].answer, "Germany");
  EXPECT_EQ(qa[0].answer_type, EntityType::kLoc);
  EXPECT_EQ(qa[0].context_kind, ContextKind::kSupporting);
}

TEST(RenderQa, ZeroRateIsAllSupporting) {
  for (const QAExample& ex : default_dataset(300, 0.0, 4)) {
    EXPECT_EQ(ex.context_kind, ContextKind::kSupporting);
    EXPECT_NE(ex.context.find(ex.answer), std::string::npos);
  }
}

TEST(RenderQa, DistractorFractionWithinBinomialBound) {
  // 1000 draws at p = 0.3 have sd ~0.0145; [0.25, 0.35] is beyond 3 sd.
  auto qa = default_dataset(1000, 0.3, 21);
  const auto distractors = std::count_if(qa.begin(), qa.end(), [](const QAExample& ex) {
    return ex.context_kind == ContextKind::kDistractor;
  });
  const double fraction = static_cast<double>(distractors) / qa.size();
  EXPECT_GE(fraction, 0.25);
  EXPECT_LE(fraction, 0.35);
  for (const QAExample& ex : qa) EXPECT_NO_THROW(validate_example(ex));
}

TEST(RenderQa, MissingPlaceholderIsTemplateError) {
  std::vector<Fact> facts{{"Heinz Hohner", "nationality", "Germany", EntityType::kLoc}};
  TemplateSet templates{{"nationality", {"What nationality?", "{subject} is {object}."}}};
  EXPECT_THROW(render_qa(facts, templates, 0.0, 0), TemplateError);
  templates = {{"nationality", {"What is {subject}'s nationality?", "{subject} is French."}}};
  EXPECT_THROW(render_qa(facts, templates, 0.0, 0), TemplateError);
  EXPECT_THROW(render_qa(facts, TemplateSet{}, 0.0, 0), TemplateError);
}

TEST(RenderQa, RateOutOfRange) {
  std::vector<Fact> facts{{"A", "nationality", "B", EntityType::kLoc}};
  EXPECT_THROW(render_qa(facts, default_templates(), 1.0, 0), ConfigError);
  EXPECT_THROW(render_qa(facts, default_templates(), -0.1, 0), ConfigError);
}

TEST(RenderQa, Deterministic) {
  EXPECT_EQ(default_dataset(200, 0.3, 8), default_dataset(200, 0.3, 8));
}

TEST(Tokenizer, DetachesPunctuation) {
  EXPECT_EQ(tokenize("What is Heinz Hohner's nationality?"),
            (std::vector<std::string>{"What", "is", "Heinz", "Hohner", "'", "s", "nationality",
                                      "?"}));
  EXPECT_EQ(normalize("  Heinz   Hohner.  "), "Heinz Hohner .");
}

TEST(Tokenizer, RoundTrip) {
  std::vector<std::string> corpus{"Heinz Hohner nationality is Germany ."};
  Vocab v = Vocab::build(corpus);
  EXPECT_EQ(v.decode(v.encode(corpus[0])), corpus[0]);
  EXPECT_EQ(v.decode(v.encode("Heinz Hohner nationality is Germany.")),
            "Heinz Hohner nationality is Germany .");
}

TEST(Tokenizer, ReservedIdsAndOov) {
  std::vector<std::string> corpus{"a b c"};
  Vocab v = Vocab::build(corpus);
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.token(kUnkId), "<unk>");
  EXPECT_EQ(v.token(kBosId), "<bos>");
  EXPECT_EQ(v.token(kSepId), "<sep>");
  EXPECT_EQ(v.token(kEosId), "<eos>");
  EXPECT_EQ(v.size(), 8u);
  auto ids = v.encode("a zebra");
  EXPECT_EQ(ids, (std::vector<TokenId>{5, kUnkId}));
  EXPECT_EQ(v.decode(ids), "a <unk>");
}

TEST(Tokenizer, ClosureOverCorpus) {
  auto qa = default_dataset(300, 0.3, 2);
  std::vector<std::string> texts;
  for (const auto& ex : qa) {
    texts.push_back(ex.context);
    texts.push_back(ex.question);
    texts.push_back(ex.answer);
  }
  Vocab v = Vocab::build(texts);
  for (const auto& t : texts) {
    for (TokenId id : v.encode(t)) EXPECT_NE(id, kUnkId);
  }
}

TEST(Tokenizer, BijectionAndValidation) {
  std::vector<std::string> corpus{"x y x z"};
  Vocab v = Vocab::build(corpus);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(*v.find(v.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
  }
  EXPECT_THROW(Vocab::build(std::vector<std::string>{}), DataError);
  EXPECT_THROW(Vocab::from_tokens({"<pad>", "<unk>"}), DataError);
  EXPECT_THROW(Vocab::from_tokens({"<pad>", "<unk>", "<bos>", "<sep>", "<eos>", "a", "a"}),
               DataError);
  EXPECT_THROW(v.token(99), DataError);
}

TEST(Substitute, TableOneExample) {
  std::vector<std::string> pool{"Germany", "France"};
  auto s = substitute_corpus(hohner(), pool, 0);
  EXPECT_EQ(s.answer_sub, "France");
  EXPECT_EQ(s.context_sub, "Heinz Hohner nationality is France.");
  EXPECT_EQ(s.policy, "corpus_substitution");
  EXPECT_FALSE(substitution_violation(s).has_value());
}

TEST(Substitute, ReplacesEveryOccurrence) {
  QAExample ex = hohner();
  ex.context = "Germany borders Austria. Heinz Hohner nationality is Germany.";
  std::vector<std::string> pool{"France"};
  auto s = substitute_corpus(ex, pool, 1);
  EXPECT_EQ(s.context_sub, "France borders Austria. Heinz Hohner nationality is France.");
  EXPECT_EQ(count_occurrences(s.context_sub, "France"), 2u);
}

TEST(Substitute, PoolOfOnlyXIsError) {
  std::vector<std::string> pool{"Germany"};
  EXPECT_THROW(substitute_corpus(hohner(), pool, 0), DataError);
}

TEST(Substitute, DistractorIsNotSubstitutable) {
  QAExample ex = hohner();
  ex.context = "Anna Berg nationality is France.";
  ex.context_kind = ContextKind::kDistractor;
  std::vector<std::string> pool{"Spain"};
  EXPECT_THROW(substitute_corpus(ex, pool, 0), NotSubstitutableError);
}

TEST(Substitute, EffectivePoolExcludesUnsafeCandidates) {
  QAExample ex = hohner();
  ex.context = "Heinz Hohner of Austria nationality is Germany.";
  std::vector<std::string> pool{"Germany", "Austria", "East Germany", "France", "France"};
  EXPECT_EQ(effective_pool(ex, pool), (std::vector<std::string>{"France"}));
}

TEST(Substitute, DrawIsUniformOverEffectivePool) {
  std::vector<std::string> pool{"Germany", "France", "Spain", "Italy"};
  std::map<std::string, int> counts;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) ++counts[substitute_corpus(hohner(), pool, seed).answer_sub];
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [name, n] : counts) EXPECT_NEAR(n / 3000.0, 1.0 / 3.0, 0.04) << name;
}

TEST(Substitute, ViolationsAreDetected) {
  std::vector<std::string> pool{"France"};
  auto good = substitute_corpus(hohner(), pool, 0);
  auto bad = good;
  bad.answer_sub = "Germany";
  EXPECT_TRUE(substitution_violation(bad).has_value());
  bad = good;
  bad.context_sub = "Heinz Hohner nationality is Germany.";
  EXPECT_TRUE(substitution_violation(bad).has_value());
  bad = good;
  bad.context_sub = "France France nationality is France.";
  EXPECT_TRUE(substitution_violation(bad).has_value());
}

TEST(Substitute, DatasetPropertiesHold) {
  auto qa = default_dataset(600, 0.3, 13);
  auto subs = substitute_dataset(qa, 99);
  std::map<std::string, EntityType> type_of;
  for (const auto& ex : qa) type_of[ex.answer] = ex.answer_type;
  std::size_t supporting = 0;
  for (const auto& ex : qa) supporting += ex.context_kind == ContextKind::kSupporting;
  EXPECT_EQ(subs.size(), supporting);
  for (const auto& s : subs) {
    EXPECT_FALSE(substitution_violation(s).has_value()) << s.base.id;
    ASSERT_TRUE(type_of.count(s.answer_sub));
    EXPECT_EQ(type_of[s.answer_sub], s.base.answer_type);
    EXPECT_EQ(replace_all(s.context_sub, s.answer_sub, s.base.answer), s.base.context);
  }
  EXPECT_EQ(substitute_dataset(qa, 99), subs);
}

TEST(Encoding, LayoutAndSpan) {
  std::vector<std::string> corpus{hohner().context, hohner().question};
  Vocab v = Vocab::build(corpus);
  auto seq = encode_training_sequence(hohner(), v, 64);
  EXPECT_EQ(seq.ids.front(), kBosId);
  EXPECT_EQ(seq.ids.back(), kEosId);
  EXPECT_EQ(v.decode(seq.ids),
            "<bos> Heinz Hohner nationality is Germany . <sep> What is Heinz Hohner ' s "
            "nationality ? <sep> Germany <eos>");
  EXPECT_EQ(v.decode(seq.answer_span()), "Germany <eos>");
  EXPECT_EQ(seq.prompt().size(), seq.answer_begin);
}

TEST(Encoding, SpanDecodesToAnswerForRandomExamples) {
  auto qa = default_dataset(300, 0.3, 6);
  std::vector<std::string> texts;
  for (const auto& ex : qa) {
    texts.push_back(ex.context);
    texts.push_back(ex.question);
    texts.push_back(ex.answer);
  }
  Vocab v = Vocab::build(texts);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto& ex = qa[rng() % qa.size()];
    auto seq = encode_training_sequence(ex, v, 64);
    EXPECT_EQ(v.decode(seq.answer_span()), normalize(ex.answer) + " <eos>");
  }
}

TEST(Encoding, SubstitutedUsesNewContextAndAnswer) {
  std::vector<std::string> pool{"France"};
  auto s = substitute_corpus(hohner(), pool, 0);
  std::vector<std::string> corpus{s.context_sub, hohner().context, hohner().question};
  Vocab v = Vocab::build(corpus);
  auto seq = encode_training_sequence(s, v, 64);
  EXPECT_EQ(v.decode(seq.answer_span()), "France <eos>");
  const std::string prompt = v.decode(seq.prompt());
  EXPECT_NE(prompt.find("is France"), std::string::npos);
  EXPECT_EQ(prompt.find("Germany"), std::string::npos);
}

TEST(Encoding, EmptyContext) {
  QAExample ex = hohner();
  ex.context = "";
  std::vector<std::string> corpus{hohner().context, hohner().question};
  Vocab v = Vocab::build(corpus);
  auto seq = encode_training_sequence(ex, v, 64);
  EXPECT_EQ(seq.ids[0], kBosId);
  EXPECT_EQ(seq.ids[1], kSepId);
  EXPECT_EQ(v.decode(seq.answer_span()), "Germany <eos>");
}

TEST(Encoding, OverflowNamesExample) {
  std::vector<std::string> corpus{hohner().context, hohner().question};
  Vocab v = Vocab::build(corpus);
  try {
    encode_training_sequence(hohner(), v, 10);
    FAIL() << "expected SequenceTooLongError";
  } catch (const SequenceTooLongError& e) {
    EXPECT_NE(std::string(e.what()).find("t0"), std::string::npos);
  }
}

TEST(DatasetIo, RoundTrip) {
  auto qa = default_dataset(50, 0.3, 3);
  auto subs = substitute_dataset(qa, 1);
  std::istringstream base_in(to_jsonl(qa));
  EXPECT_EQ(read_examples(base_in), qa);
  std::istringstream sub_in(to_jsonl(subs));
  EXPECT_EQ(read_substituted(sub_in), subs);
}

TEST(DatasetIo, FieldNames) {
  std::vector<std::string> pool{"France"};
  const std::string line = to_jsonl_line(substitute_corpus(hohner(), pool, 0));
  for (const char* key : {"\"id\"", "\"question\"", "\"context\"", "\"answer\"", "\"answer_type\"",
                          "\"context_kind\"", "\"answer_sub\"", "\"context_sub\"", "\"policy\""}) {
    EXPECT_NE(line.find(key), std::string::npos) << key;
  }
  EXPECT_NE(line.find("\"LOC\""), std::string::npos);
  EXPECT_NE(line.find("\"supporting\""), std::string::npos);
}

TEST(DatasetIo, MalformedLineReportsLineNumber) {
  std::istringstream in(to_jsonl_line(hohner()) + "\n{\"id\": \"x\"}\n");
  try {
    read_examples(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace kcef::corpus
