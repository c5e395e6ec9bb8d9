#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factorlab/common.hpp"

namespace factorlab::kgqa {

struct EntityMention {
  std::string surface;
  int start = 0;  // character offsets into the passage text
  int end = 0;
};

struct CorpusTriple {
  std::string head, relation, tail;
};

struct AnnotatedPassage {
  std::string id;
  std::string text;
  std::vector<EntityMention> entities;
  std::vector<CorpusTriple> triples;

  bool has_entity(const std::string& surface) const {
    for (const auto& e : entities) {
      if (e.surface == surface) return true;
    }
    return false;
  }

  /// Character offset of the first mention of a surface, or -1.
  int first_mention(const std::string& surface) const {
    int best = -1;
    for (const auto& e : entities) {
      if (e.surface == surface && (best < 0 || e.start < best)) best = e.start;
    }
    return best;
  }

  void validate() const {
    for (const auto& e : entities) {
      if (e.start < 0 || e.end > static_cast<int>(text.size()) || e.start >= e.end) {
        fail("passage ", id, ": entity \"", e.surface, "\" offsets [", e.start, ",", e.end,
             ") out of bounds for text of length ", text.size());
      }
      const std::string actual = text.substr(static_cast<size_t>(e.start),
                                             static_cast<size_t>(e.end - e.start));
      if (actual != e.surface) {
        fail("passage ", id, ": entity \"", e.surface, "\" does not match text at offsets, found \"",
             actual, "\"");
      }
    }
    for (const auto& t : triples) {
      if (!has_entity(t.head)) fail("passage ", id, ": triple references unknown entity \"", t.head, "\"");
      if (!has_entity(t.tail)) fail("passage ", id, ": triple references unknown entity \"", t.tail, "\"");
    }
  }
};

inline AnnotatedPassage passage_from_json(const nlohmann::json& j) {
  AnnotatedPassage p;
  p.id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  for (const auto& e : j.at("entities")) {
    p.entities.push_back(EntityMention{e.at("surface").get<std::string>(),
                                       e.at("start").get<int>(), e.at("end").get<int>()});
  }
  for (const auto& t : j.at("triples")) {
    p.triples.push_back(CorpusTriple{t.at("head").get<std::string>(),
                                     t.at("relation").get<std::string>(),
                                     t.at("tail").get<std::string>()});
  }
  return p;
}

/// Parse and validate a JSON-lines corpus. In permissive mode malformed
/// records are reported with their line number and skipped; otherwise the
/// first problem is fatal.
inline std::vector<AnnotatedPassage> parse_corpus(const std::string& path, bool permissive = false,
                                                  std::ostream* diagnostics = nullptr) {
  std::ifstream in(path);
  require(in.good(), cat("parse_corpus: cannot open ", path));
  std::vector<AnnotatedPassage> passages;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto p = passage_from_json(nlohmann::json::parse(line));
      p.validate();
      passages.push_back(std::move(p));
    } catch (const std::exception& e) {
      if (!permissive) fail("parse_corpus: ", path, " line ", line_no, ": ", e.what());
      if (diagnostics) *diagnostics << path << " line " << line_no << ": skipped: " << e.what() << "\n";
    }
  }
  return passages;
}

}  // namespace factorlab::kgqa
