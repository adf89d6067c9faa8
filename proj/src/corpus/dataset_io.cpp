// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/corpus/dataset_io.hpp"

#include <fstream>
#include <istream>

#include <json.hpp>

namespace kcef::corpus {

namespace {

using nlohmann::json;

json base_json(const QAExample& ex) {
  return json{{"id", ex.id},
              {"question", ex.question},
              {"context", ex.context},
              {"answer", ex.answer},
              {"answer_type", std::string(to_string(ex.answer_type))},
              {"context_kind", std::string(to_string(ex.context_kind))}};
}

std::string field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DataError(std::string("missing field '") + name + "'");
  if (!it->is_string()) throw DataError(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

QAExample parse_base(const json& obj) {
  QAExample ex;
  ex.id = field(obj, "id");
  ex.question = field(obj, "question");
  ex.context = field(obj, "context");
  ex.answer = field(obj, "answer");
  ex.answer_type = parse_entity_type(field(obj, "answer_type"));
  ex.context_kind = parse_context_kind(field(obj, "context_kind"));
  return ex;
}

SubstitutedExample parse_substituted(const json& obj) {
  SubstitutedExample s;
  s.base = parse_base(obj);
  s.answer_sub = field(obj, "answer_sub");
  s.context_sub = field(obj, "context_sub");
  s.policy = field(obj, "policy");
  return s;
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw DataError("expected a JSON object");
      out.push_back(parse(obj));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string to_jsonl_line(const QAExample& example) { return base_json(example).dump(); }

std::string to_jsonl_line(const SubstitutedExample& example) {
  json obj = base_json(example.base);
  obj["answer_sub"] = example.answer_sub;
  obj["context_sub"] = example.context_sub;
  obj["policy"] = example.policy;
  return obj.dump();
}

std::string to_jsonl(std::span<const QAExample> examples) {
  std::string out;
  for (const auto& ex : examples) out += to_jsonl_line(ex) + "\n";
  return out;
}

std::string to_jsonl(std::span<const SubstitutedExample> examples) {
  std::string out;
  for (const auto& ex : examples) out += to_jsonl_line(ex) + "\n";
  return out;
}

std::vector<QAExample> read_examples(std::istream& in) {
  return read_lines<QAExample>(in, parse_base);
}

std::vector<SubstitutedExample> read_substituted(std::istream& in) {
  return read_lines<SubstitutedExample>(in, parse_substituted);
}

std::vector<QAExample> read_examples(const std::filesystem::path& path) {
  auto in = open(path);
  try {
    return read_examples(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<SubstitutedExample> read_substituted(const std::filesystem::path& path) {
  auto in = open(path);
  try {
    return read_substituted(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace kcef::corpus
