// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/pipeline/reports.hpp"

#include <cstdio>
#include <initializer_list>
#include <set>

#include "kcef/model/serialization.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::pipeline {

using nlohmann::json;

namespace {

// Strict field access for one JSON object: every listed key must be present and
// nothing else may be.
class Fields {
 public:
  Fields(const json& j, std::string what, std::initializer_list<const char*> keys)
      : j_(j), what_(std::move(what)) {
    if (!j.is_object()) throw DataError(what_ + " must be a JSON object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw DataError("unknown key '" + key + "' in " + what_);
    }
  }

  const json& at(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) throw DataError(what_ + " is missing '" + key + "'");
    return *it;
  }
  bool has(const char* key) const { return j_.contains(key); }

  std::size_t count(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(key, "a non-negative integer");
    return v.get<std::size_t>();
  }
  std::uint64_t u64(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double fraction(const char* key) const { return to_fraction(at(key), key); }
  bool flag(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "a boolean");
    return v.get<bool>();
  }
  std::vector<double> numbers(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) fail(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "an array of strings");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) fail(key, "an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  double to_fraction(const json& v, const char* key) const {
    if (!v.is_number()) fail(key, "a number");
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= 1.0)) fail(key, "in [0, 1]");
    return x;
  }

 private:
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw DataError(what_ + "." + key + " must be " + expected);
  }

  const json& j_;
  std::string what_;
};

// Checksums are stored as hex strings; JSON numbers lose precision above 2^53
// in most readers.
std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const json& v, const std::string& what) {
  if (!v.is_string() || v.get<std::string>().size() != 16) {
    throw DataError(what + " must be a 16-digit hex string");
  }
  const std::string s = v.get<std::string>();
  std::uint64_t out = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else {
      throw DataError(what + " must be a 16-digit hex string");
    }
    out = (out << 4) | static_cast<std::uint64_t>(d);
  }
  return out;
}

std::string percent(double x) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * x);
  return buf;
}

}  // namespace

json to_json(const VictimReport& r) {
  json curve = json::array();
  for (const CurvePoint& p : r.curve) {
    curve.push_back({{"epoch", p.epoch}, {"loss", p.loss}, {"exact_match", p.exact_match}});
  }
  return json{{"n_examples", r.n_examples},
              {"parameter_count", r.parameter_count},
              {"steps", r.steps},
              {"curve", std::move(curve)},
              {"train_exact_match", r.train_exact_match},
              {"checksum", hex64(r.checksum)}};
}

VictimReport victim_report_from_json(const json& j) {
  Fields f(j, "victim report",
           {"n_examples", "parameter_count", "steps", "curve", "train_exact_match", "checksum"});
  VictimReport r;
  r.n_examples = f.count("n_examples");
  r.parameter_count = f.count("parameter_count");
  r.steps = f.count("steps");
  if (!f.at("curve").is_array()) throw DataError("victim report.curve must be an array");
  for (const json& p : f.at("curve")) {
    Fields pf(p, "victim report.curve[]", {"epoch", "loss", "exact_match"});
    if (!pf.at("loss").is_number()) throw DataError("victim report.curve[].loss must be a number");
    r.curve.push_back({pf.count("epoch"), pf.at("loss").get<double>(), pf.fraction("exact_match")});
  }
  r.train_exact_match = f.fraction("train_exact_match");
  r.checksum = parse_hex64(f.at("checksum"), "victim report.checksum");
  return r;
}

json to_json(const MemorizationReport& r) {
  json j{{"n_probed", r.n_probed},
         {"exact_match_rate", r.exact_match_rate},
         {"memorized_ids", r.memorized_ids}};
  if (r.contains_match_rate) j["contains_match_rate"] = *r.contains_match_rate;
  return j;
}

MemorizationReport memorization_report_from_json(const json& j) {
  Fields f(j, "memorization report",
           {"n_probed", "exact_match_rate", "memorized_ids", "contains_match_rate"});
  MemorizationReport r;
  r.n_probed = f.count("n_probed");
  r.exact_match_rate = f.fraction("exact_match_rate");
  r.memorized_ids = f.strings("memorized_ids");
  if (f.has("contains_match_rate")) r.contains_match_rate = f.fraction("contains_match_rate");
  if (r.memorized_ids.size() > r.n_probed) {
    throw DataError("memorization report lists more memorized ids than probed examples");
  }
  return r;
}

json to_json(const ProbeReport& r) {
  return json{{"memorization", to_json(r.memorization)},
              {"closed_book", r.closed_book},
              {"n_substituted", r.n_substituted},
              {"persistence", r.persistence},
              {"substituted_rate", r.substituted_rate}};
}

ProbeReport probe_report_from_json(const json& j) {
  Fields f(j, "probe report",
           {"memorization", "closed_book", "n_substituted", "persistence", "substituted_rate"});
  ProbeReport r;
  r.memorization = memorization_report_from_json(f.at("memorization"));
  r.closed_book = f.flag("closed_book");
  r.n_substituted = f.count("n_substituted");
  r.persistence = f.fraction("persistence");
  r.substituted_rate = f.fraction("substituted_rate");
  return r;
}

json to_json(const ErasureReport& r) {
  return json{{"adapter", model::to_json(r.adapter)},
              {"adapter_parameters", r.adapter_parameters},
              {"n_train", r.n_train},
              {"n_test", r.n_test},
              {"p_s_train", r.p_s_train},
              {"p_s_test", r.p_s_test},
              {"persistence_train", r.persistence_train},
              {"persistence_test", r.persistence_test},
              {"loss_curve", r.loss_curve},
              {"p_s_test_curve", r.p_s_test_curve},
              {"steps", r.steps},
              {"base_checksum", hex64(r.base_checksum)},
              {"train_ids", r.train_ids},
              {"test_ids", r.test_ids}};
}

ErasureReport erasure_report_from_json(const json& j) {
  Fields f(j, "erasure report",
           {"adapter", "adapter_parameters", "n_train", "n_test", "p_s_train", "p_s_test",
            "persistence_train", "persistence_test", "loss_curve", "p_s_test_curve", "steps",
            "base_checksum", "train_ids", "test_ids"});
  ErasureReport r;
  try {
    r.adapter = model::adapter_config_from_json(f.at("adapter"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("erasure report: ") + e.what());
  }
  r.adapter_parameters = f.count("adapter_parameters");
  r.n_train = f.count("n_train");
  r.n_test = f.count("n_test");
  r.p_s_train = f.fraction("p_s_train");
  r.p_s_test = f.fraction("p_s_test");
  r.persistence_train = f.fraction("persistence_train");
  r.persistence_test = f.fraction("persistence_test");
  r.loss_curve = f.numbers("loss_curve");
  r.p_s_test_curve = f.numbers("p_s_test_curve");
  r.steps = f.count("steps");
  r.base_checksum = parse_hex64(f.at("base_checksum"), "erasure report.base_checksum");
  r.train_ids = f.strings("train_ids");
  r.test_ids = f.strings("test_ids");
  if (r.train_ids.size() != r.n_train || r.test_ids.size() != r.n_test) {
    throw DataError("erasure report: split id lists disagree with n_train/n_test");
  }
  return r;
}

json to_json(const SplitSpec& s) {
  return json{{"train_fraction", s.train_fraction}, {"seed", s.seed}};
}

SplitSpec split_spec_from_json(const json& j, SplitSpec s) {
  if (!j.is_object()) throw ConfigError("split must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "train_fraction") {
      if (!value.is_number()) throw ConfigError("split.train_fraction must be a number");
      s.train_fraction = value.get<double>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) {
        throw ConfigError("split.seed must be a non-negative integer");
      }
      s.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown key '" + key + "' in split");
    }
  }
  return s;
}

std::string render_accuracy_table(std::span<const ErasureReport> reports) {
  constexpr int kKind = 12;
  constexpr int kTrain = 26;
  char line[128];
  std::snprintf(line, sizeof line, "%-*s%-*s%s\n", kKind, "adapter", kTrain,
                "accuracy on training set", "accuracy on test set");
  std::string out = line;
  for (const ErasureReport& r : reports) {
    const std::string kind(erasure::to_string(r.adapter.kind));
    std::snprintf(line, sizeof line, "%-*s%-*s%s\n", kKind, kind.c_str(), kTrain,
                  percent(r.p_s_train).c_str(), percent(r.p_s_test).c_str());
    out += line;
  }
  return out;
}

std::string predictions_to_jsonl(const AnswerMap& predictions) {
  std::string out;
  for (const auto& [id, prediction] : predictions) {
    out += json{{"id", id}, {"prediction", prediction}}.dump();
    out += '\n';
  }
  return out;
}

AnswerMap read_predictions(std::istream& in) {
  AnswerMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": " + e.what());
    }
    Fields f(j, where, {"id", "prediction"});
    if (!f.at("id").is_string() || !f.at("prediction").is_string()) {
      throw DataError(where + ": id and prediction must be strings");
    }
    if (!out.emplace(f.at("id").get<std::string>(), f.at("prediction").get<std::string>()).second) {
      throw DataError(where + ": duplicate id " + f.at("id").get<std::string>());
    }
  }
  return out;
}

}  // namespace kcef::pipeline
