#pragma once

#include <string>
#include <vector>

#include "factorlab/common.hpp"
#include "factorlab/data/vocab.hpp"

namespace factorlab::data {

enum class RecordKind { statement, qa };
enum class Direction { none, forward, backward };
enum class Split { train, eval };

enum class SpanKind { key, value, entity, delimiter };

/// Half-open token range [start, end) with a role tag. Spans never overlap.
struct EntitySpan {
  int start = 0;
  int end = 0;
  SpanKind kind = SpanKind::entity;
};

/// One training/eval sequence: token ids plus role annotations. For qa
/// records, tokens[answer_start..] up to <eos> are the gold answer and
/// everything before answer_start is the prompt.
struct TokenSequence {
  std::vector<int> tokens;
  std::vector<EntitySpan> spans;
  RecordKind kind = RecordKind::statement;
  Direction direction = Direction::none;
  Split split = Split::train;
  int answer_start = -1;
  std::vector<int> mirror_answer;  // relationship task: the symmetric wrong answer

  int length() const { return static_cast<int>(tokens.size()); }

  std::vector<int> prompt_tokens() const {
    require(kind == RecordKind::qa && answer_start > 0, "prompt_tokens: not a qa record");
    return std::vector<int>(tokens.begin(), tokens.begin() + answer_start);
  }

  /// Gold answer tokens with any trailing <eos> stripped.
  std::vector<int> answer_tokens() const {
    require(kind == RecordKind::qa && answer_start > 0, "answer_tokens: not a qa record");
    std::vector<int> out(tokens.begin() + answer_start, tokens.end());
    while (!out.empty() && out.back() == Vocab::kEos) out.pop_back();
    return out;
  }

  /// Positions eligible for masking / prediction under mask-based plans.
  std::vector<int> maskable_positions(const Vocab& vocab) const {
    std::vector<int> out;
    for (int i = 0; i < length(); ++i) {
      if (vocab.maskable(tokens[static_cast<size_t>(i)])) out.push_back(i);
    }
    return out;
  }

  void validate(const Vocab& vocab) const {
    require(!tokens.empty(), "TokenSequence: empty");
    for (int t : tokens) {
      require(t >= 0 && t < vocab.size(), cat("TokenSequence: token id ", t, " out of vocab"));
    }
    int prev_end = -1;
    for (const auto& s : spans) {
      if (s.start < 0 || s.end > length() || s.start >= s.end) {
        fail("TokenSequence: bad span [", s.start, ",", s.end, ") for length ", length());
      }
      require(s.start >= prev_end, "TokenSequence: spans overlap or are unsorted");
      prev_end = s.end;
    }
    if (kind == RecordKind::qa) {
      require(answer_start > 0 && answer_start < length(),
              "TokenSequence: qa record needs a valid answer_start");
      require(!answer_tokens().empty(), "TokenSequence: qa record has empty answer");
    }
  }
};

inline const char* to_string(RecordKind k) {
  return k == RecordKind::statement ? "statement" : "qa";
}
inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::forward: return "forward";
    case Direction::backward: return "backward";
    default: return "none";
  }
}
inline const char* to_string(Split s) { return s == Split::train ? "train" : "eval"; }
inline const char* to_string(SpanKind k) {
  switch (k) {
    case SpanKind::key: return "key";
    case SpanKind::value: return "value";
    case SpanKind::entity: return "entity";
    default: return "delimiter";
  }
}

inline RecordKind record_kind_from(const std::string& s) {
  if (s == "statement") return RecordKind::statement;
  if (s == "qa") return RecordKind::qa;
  fail("unknown record kind \"", s, "\"");
}
inline Direction direction_from(const std::string& s) {
  if (s == "forward") return Direction::forward;
  if (s == "backward") return Direction::backward;
  if (s == "none") return Direction::none;
  fail("unknown direction \"", s, "\"");
}
inline Split split_from(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "eval") return Split::eval;
  fail("unknown split \"", s, "\"");
}
inline SpanKind span_kind_from(const std::string& s) {
  if (s == "key") return SpanKind::key;
  if (s == "value") return SpanKind::value;
  if (s == "entity") return SpanKind::entity;
  if (s == "delimiter") return SpanKind::delimiter;
  fail("unknown span kind \"", s, "\"");
}

}  // namespace factorlab::data
