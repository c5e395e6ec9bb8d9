#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "factorlab/config_text.hpp"
#include "factorlab/data/dataset.hpp"
#include "factorlab/kgqa/corpus.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::kgqa {

enum class Orientation { forward, backward };

struct RelationTriple {
  std::string head, relation, tail;
  std::string passage_id;
  int passage_index = 0;  // position of the passage in the corpus
  int triple_index = 0;   // position within the passage annotation list
  Orientation orientation = Orientation::forward;
};

/// Question patterns per relation: the forward pattern's hole takes the
/// head (question queries the tail), the backward pattern's hole takes the
/// tail (question queries the head).
class QuestionTemplates {
 public:
  struct Patterns {
    std::string forward;
    std::string backward;
  };

  static QuestionTemplates load(const std::string& path) {
    return from_config(ConfigText::parse_file(path));
  }

  static QuestionTemplates from_config(const ConfigText& cfg) {
    QuestionTemplates t;
    for (const auto& [key, value] : cfg.values()) {
      const size_t dot = key.rfind('.');
      require(dot != std::string::npos, cat("templates: bad key \"", key, "\""));
      const std::string relation = key.substr(0, dot);
      const std::string which = key.substr(dot + 1);
      require(value.find("{}") != std::string::npos && value.find("{}") == value.rfind("{}"),
              cat("templates: pattern for ", key, " must contain exactly one {} hole"));
      if (which == "forward") {
        t.patterns_[relation].forward = value;
      } else if (which == "backward") {
        t.patterns_[relation].backward = value;
      } else {
        fail("templates: expected forward/backward under ", relation, ", got ", which);
      }
    }
    for (const auto& [rel, p] : t.patterns_) {
      require(!p.forward.empty() && !p.backward.empty(),
              cat("templates: relation ", rel, " needs both forward and backward patterns"));
    }
    return t;
  }

  bool has(const std::string& relation) const { return patterns_.count(relation) > 0; }

  const Patterns& for_relation(const std::string& relation) const {
    auto it = patterns_.find(relation);
    if (it == patterns_.end()) fail("templates: no patterns for relation \"", relation, "\"");
    return it->second;
  }

  static std::string fill(const std::string& pattern, const std::string& entity) {
    const size_t hole = pattern.find("{}");
    require(hole != std::string::npos, "templates: pattern has no hole");
    return pattern.substr(0, hole) + entity + pattern.substr(hole + 2);
  }

 private:
  std::map<std::string, Patterns> patterns_;
};

/// Rendered question pair for one triple: the forward question queries the
/// tail given the head, the backward question queries the head given the tail.
struct RenderedQuestions {
  std::string forward_question, forward_answer;
  std::string backward_question, backward_answer;
};

inline RenderedQuestions render_questions(const RelationTriple& triple,
                                          const QuestionTemplates& templates) {
  const auto& p = templates.for_relation(triple.relation);
  RenderedQuestions r;
  r.forward_question = QuestionTemplates::fill(p.forward, triple.head);
  r.forward_answer = triple.tail;
  r.backward_question = QuestionTemplates::fill(p.backward, triple.tail);
  r.backward_answer = triple.head;
  return r;
}

/// Keep only triples whose head's first mention precedes the tail's first
/// mention in the passage; ties (identical first offsets) are excluded.
inline std::vector<RelationTriple> extract_forward_triples(const AnnotatedPassage& passage,
                                                           int passage_index = 0) {
  std::vector<RelationTriple> out;
  for (size_t i = 0; i < passage.triples.size(); ++i) {
    const auto& t = passage.triples[i];
    const int head_at = passage.first_mention(t.head);
    const int tail_at = passage.first_mention(t.tail);
    if (head_at < 0 || tail_at < 0 || head_at >= tail_at) continue;
    out.push_back(RelationTriple{t.head, t.relation, t.tail, passage.id, passage_index,
                                 static_cast<int>(i), Orientation::forward});
  }
  return out;
}

/// Drop every triple of a relation with fewer than min_count instances.
/// Counting happens over the triples given here, before any ambiguity
/// filtering.
inline std::vector<RelationTriple> filter_rare_relations(std::vector<RelationTriple> triples,
                                                         int min_count) {
  require(min_count >= 1, "filter_rare_relations: min_count must be at least 1");
  std::map<std::string, int> counts;
  for (const auto& t : triples) ++counts[t.relation];
  std::vector<RelationTriple> out;
  for (auto& t : triples) {
    if (counts[t.relation] >= min_count) out.push_back(std::move(t));
  }
  return out;
}

/// Keep only triples where both the (head, relation) pair and the
/// (relation, tail) pair are unique dataset-wide, so every question has a
/// single answer.
inline std::vector<RelationTriple> filter_ambiguous(std::vector<RelationTriple> triples) {
  std::map<std::pair<std::string, std::string>, int> head_rel, rel_tail;
  for (const auto& t : triples) {
    ++head_rel[{t.head, t.relation}];
    ++rel_tail[{t.relation, t.tail}];
  }
  std::vector<RelationTriple> out;
  for (auto& t : triples) {
    if (head_rel[{t.head, t.relation}] == 1 && rel_tail[{t.relation, t.tail}] == 1) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

enum class SplitMode { shared_seed, independent_seeds };

inline SplitMode split_mode_from(const std::string& s) {
  if (s == "shared-seed") return SplitMode::shared_seed;
  if (s == "independent-seeds") return SplitMode::independent_seeds;
  fail("unknown split mode \"", s, "\" (expected shared-seed or independent-seeds)");
}

struct BuildOptions {
  std::string corpus_path;
  std::string templates_path;
  int min_count = 500;
  uint64_t split_seed = 1;
  SplitMode split_mode = SplitMode::shared_seed;
  double train_fraction = 0.8;
  bool permissive = false;
};

struct BuildResult {
  data::QADataset dataset;
  std::vector<std::pair<std::string, int>> relation_counts;  // final dataset, descending
  int n_passages = 0;
  int n_extracted = 0;
  int n_after_rare = 0;
  int n_after_ambiguity = 0;

  std::string stats_text() const {
    std::ostringstream os;
    os << "relation\tcount\n";
    for (const auto& [rel, n] : relation_counts) os << rel << '\t' << n << '\n';
    os << "total\t" << n_after_ambiguity << '\n';
    return os.str();
  }
};

namespace detail {

inline std::vector<std::string> whitespace_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

inline std::vector<bool> eval_assignment(int n, double train_fraction, Rng rng) {
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  const int n_train = static_cast<int>(std::llround(train_fraction * n));
  std::vector<bool> is_eval(static_cast<size_t>(n), false);
  for (int i = n_train; i < n; ++i) is_eval[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
  return is_eval;
}

}  // namespace detail

/// Full pipeline: parse -> extract forward triples -> rare-relation filter
/// -> ambiguity filter -> render questions -> tokenize -> split. Output
/// ordering is canonical (passage order, then triple order), so identical
/// inputs give byte-identical outputs.
inline BuildResult build(const BuildOptions& opt, std::ostream* diagnostics = nullptr) {
  const auto passages = parse_corpus(opt.corpus_path, opt.permissive, diagnostics);
  const auto templates = QuestionTemplates::load(opt.templates_path);

  BuildResult result;
  result.n_passages = static_cast<int>(passages.size());

  std::vector<RelationTriple> triples;
  for (size_t i = 0; i < passages.size(); ++i) {
    auto forward = extract_forward_triples(passages[i], static_cast<int>(i));
    for (auto& t : forward) triples.push_back(std::move(t));
  }
  // Canonical output order: passage id, then annotation position.
  std::stable_sort(triples.begin(), triples.end(),
                   [](const RelationTriple& a, const RelationTriple& b) {
                     return a.passage_id != b.passage_id ? a.passage_id < b.passage_id
                                                         : a.triple_index < b.triple_index;
                   });
  result.n_extracted = static_cast<int>(triples.size());

  triples = filter_rare_relations(std::move(triples), opt.min_count);
  result.n_after_rare = static_cast<int>(triples.size());
  triples = filter_ambiguous(std::move(triples));
  result.n_after_ambiguity = static_cast<int>(triples.size());

  std::map<std::string, int> final_counts;
  for (const auto& t : triples) ++final_counts[t.relation];
  result.relation_counts.assign(final_counts.begin(), final_counts.end());
  std::sort(result.relation_counts.begin(), result.relation_counts.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second > b.second : a.first < b.first;
            });

  // Passages that still back at least one triple are kept as statements.
  std::set<int> kept_passages;
  for (const auto& t : triples) kept_passages.insert(t.passage_index);

  data::QADataset& ds = result.dataset;
  auto add_words = [&](data::TokenSequence& seq, const std::string& text) {
    for (const auto& w : detail::whitespace_words(text)) seq.tokens.push_back(ds.vocab.add(w));
  };

  for (int pi : kept_passages) {
    data::TokenSequence st;
    st.kind = data::RecordKind::statement;
    st.split = data::Split::train;
    st.tokens.push_back(data::Vocab::kBos);
    add_words(st, passages[static_cast<size_t>(pi)].text);
    st.tokens.push_back(data::Vocab::kEos);
    ds.records.push_back(std::move(st));
  }

  const int n = static_cast<int>(triples.size());
  Rng rng(opt.split_seed);
  std::vector<bool> fwd_eval, bwd_eval;
  if (opt.split_mode == SplitMode::shared_seed) {
    fwd_eval = detail::eval_assignment(n, opt.train_fraction, rng.split("shared"));
    bwd_eval = fwd_eval;
  } else {
    fwd_eval = detail::eval_assignment(n, opt.train_fraction, rng.split("forward"));
    bwd_eval = detail::eval_assignment(n, opt.train_fraction, rng.split("backward"));
  }

  for (int i = 0; i < n; ++i) {
    const auto& t = triples[static_cast<size_t>(i)];
    const auto q = render_questions(t, templates);

    auto make_qa = [&](const std::string& question, const std::string& answer, bool backward,
                       bool is_eval) {
      data::TokenSequence r;
      r.kind = data::RecordKind::qa;
      r.direction = backward ? data::Direction::backward : data::Direction::forward;
      r.split = is_eval ? data::Split::eval : data::Split::train;
      r.tokens.push_back(data::Vocab::kBos);
      add_words(r, question);
      r.tokens.push_back(ds.vocab.add(":"));
      r.answer_start = static_cast<int>(r.tokens.size());
      const int ans_start = r.answer_start;
      add_words(r, answer);
      r.spans.push_back(
          data::EntitySpan{ans_start, static_cast<int>(r.tokens.size()), data::SpanKind::entity});
      r.tokens.push_back(data::Vocab::kEos);
      return r;
    };
    ds.records.push_back(make_qa(q.forward_question, q.forward_answer, false,
                                 fwd_eval[static_cast<size_t>(i)]));
    ds.records.push_back(make_qa(q.backward_question, q.backward_answer, true,
                                 bwd_eval[static_cast<size_t>(i)]));
  }
  ds.validate();
  return result;
}

}  // namespace factorlab::kgqa
