#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factorlab/data/sequence.hpp"
#include "factorlab/data/vocab.hpp"

namespace factorlab::data {

/// A generated benchmark: its vocabulary plus every statement and QA record.
struct QADataset {
  Vocab vocab;
  std::vector<TokenSequence> records;

  std::vector<const TokenSequence*> train_records() const {
    std::vector<const TokenSequence*> out;
    for (const auto& r : records) {
      if (r.split == Split::train) out.push_back(&r);
    }
    return out;
  }

  std::vector<const TokenSequence*> eval_queries(Direction dir) const {
    std::vector<const TokenSequence*> out;
    for (const auto& r : records) {
      if (r.kind == RecordKind::qa && r.split == Split::eval && r.direction == dir) {
        out.push_back(&r);
      }
    }
    return out;
  }

  int max_answer_len() const {
    int m = 0;
    for (const auto& r : records) {
      if (r.kind == RecordKind::qa) {
        m = std::max(m, static_cast<int>(r.answer_tokens().size()));
      }
    }
    return m;
  }

  int max_sequence_len() const {
    int m = 0;
    for (const auto& r : records) m = std::max(m, r.length());
    return m;
  }

  void validate() const {
    for (const auto& r : records) r.validate(vocab);
  }
};

inline std::string vocab_path_for(const std::string& jsonl_path) {
  const size_t dot = jsonl_path.rfind('.');
  const std::string stem = (dot == std::string::npos) ? jsonl_path : jsonl_path.substr(0, dot);
  return stem + ".vocab";
}

inline nlohmann::json record_to_json(const TokenSequence& r) {
  nlohmann::json j;
  j["text_tokens"] = r.tokens;
  j["kind"] = to_string(r.kind);
  j["direction"] = to_string(r.direction);
  j["split"] = to_string(r.split);
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : r.spans) {
    spans.push_back({{"start", s.start}, {"end", s.end}, {"kind", to_string(s.kind)}});
  }
  j["spans"] = std::move(spans);
  if (r.kind == RecordKind::qa) j["answer_start"] = r.answer_start;
  if (!r.mirror_answer.empty()) j["mirror"] = r.mirror_answer;
  return j;
}

inline TokenSequence record_from_json(const nlohmann::json& j) {
  TokenSequence r;
  r.tokens = j.at("text_tokens").get<std::vector<int>>();
  r.kind = record_kind_from(j.at("kind").get<std::string>());
  r.direction = direction_from(j.at("direction").get<std::string>());
  r.split = split_from(j.at("split").get<std::string>());
  for (const auto& s : j.at("spans")) {
    r.spans.push_back(EntitySpan{s.at("start").get<int>(), s.at("end").get<int>(),
                                 span_kind_from(s.at("kind").get<std::string>())});
  }
  if (j.contains("answer_start")) r.answer_start = j.at("answer_start").get<int>();
  if (j.contains("mirror")) r.mirror_answer = j.at("mirror").get<std::vector<int>>();
  return r;
}

/// One record per line; a sidecar <stem>.vocab file lists token strings by id.
inline void save_dataset(const QADataset& ds, const std::string& jsonl_path) {
  std::ofstream out(jsonl_path);
  require(out.good(), cat("save_dataset: cannot open ", jsonl_path));
  for (const auto& r : ds.records) {
    out << record_to_json(r).dump() << '\n';
  }
  require(out.good(), cat("save_dataset: write failed for ", jsonl_path));
  ds.vocab.save(vocab_path_for(jsonl_path));
}

inline QADataset load_dataset(const std::string& jsonl_path) {
  QADataset ds;
  ds.vocab = Vocab::load(vocab_path_for(jsonl_path));
  std::ifstream in(jsonl_path);
  require(in.good(), cat("load_dataset: cannot open ", jsonl_path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      ds.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      fail("load_dataset: ", jsonl_path, " line ", line_no, ": ", e.what());
    }
  }
  ds.validate();
  return ds;
}

}  // namespace factorlab::data
