#pragma once

#include <algorithm>
#include <vector>

#include "factorlab/data/sequence.hpp"
#include "factorlab/data/vocab.hpp"
#include "factorlab/model/visibility.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::objectives {

enum class PlanMode { ar, mlm, mlmu, plm };

/// Everything one training objective needs for one sequence: which positions
/// each query may see, which positions get predicted, the target token and
/// loss weight per prediction. No plan ever lets any position attend itself,
/// which keeps autoregressive, masked, and permutation masks mutually
/// consistent at the self-visibility boundary.
struct FactorizationPlan {
  PlanMode mode = PlanMode::ar;
  model::VisibilityMask visibility;
  std::vector<int> predict_positions;
  std::vector<int> targets;
  std::vector<double> weights;
  std::vector<int> permutation;    // plm only: maskable positions in sigma order
  std::vector<int> masked;         // mlm modes: sorted masked positions
  int maskable_count = 0;          // mlm modes: candidates for masking

  /// Encoder input: masked positions replaced by the <mask> token. Exclusion
  /// through the visibility columns already prevents leakage; the
  /// replacement keeps shapes static.
  std::vector<int> encoder_input(const std::vector<int>& tokens) const {
    std::vector<int> out = tokens;
    for (int p : masked) out[static_cast<size_t>(p)] = data::Vocab::kMask;
    return out;
  }
};

/// Left-to-right factorization: strictly causal visibility, predictions at
/// 1..D-1 (position 0 is <bos> and is never predicted), unit weights.
inline FactorizationPlan make_ar_plan(const data::TokenSequence& seq) {
  const int d_len = seq.length();
  require(d_len >= 2, "make_ar_plan: need at least 2 tokens");
  FactorizationPlan plan;
  plan.mode = PlanMode::ar;
  plan.visibility = model::VisibilityMask::strict_causal(d_len);
  for (int q = 1; q < d_len; ++q) {
    plan.predict_positions.push_back(q);
    plan.targets.push_back(seq.tokens[static_cast<size_t>(q)]);
    plan.weights.push_back(1.0);
  }
  return plan;
}

namespace detail {

/// Shared mask-mode visibility: a key is attendable iff it is not masked and
/// is not the query's own position. Reserved control tokens behave like any
/// other unmasked key (they are never in the masked set).
inline model::VisibilityMask mask_visibility(int d_len, const std::vector<int>& masked) {
  model::VisibilityMask vis = model::VisibilityMask::full_except_self(d_len);
  for (int m : masked) vis.clear_column(m);
  return vis;
}

inline FactorizationPlan mask_plan(PlanMode mode, const data::TokenSequence& seq,
                                   std::vector<int> masked, int maskable_count, double weight) {
  std::sort(masked.begin(), masked.end());
  FactorizationPlan plan;
  plan.mode = mode;
  plan.visibility = mask_visibility(seq.length(), masked);
  for (int m : masked) {
    plan.predict_positions.push_back(m);
    plan.targets.push_back(seq.tokens[static_cast<size_t>(m)]);
    plan.weights.push_back(weight);
  }
  plan.masked = std::move(masked);
  plan.maskable_count = maskable_count;
  return plan;
}

}  // namespace detail

/// Fixed-rate masking: each maskable position drops independently with
/// probability rate; an all-empty draw masks one uniformly chosen position.
inline FactorizationPlan make_mlm_plan(const data::TokenSequence& seq, double rate,
                                       const data::Vocab& vocab, Rng& rng) {
  require(rate > 0.0 && rate < 1.0, "make_mlm_plan: rate must be in (0,1)");
  const auto candidates = seq.maskable_positions(vocab);
  require(!candidates.empty(), "make_mlm_plan: sequence has no maskable positions");
  std::vector<int> masked;
  for (int p : candidates) {
    if (rng.next_bool(rate)) masked.push_back(p);
  }
  if (masked.empty()) {
    masked.push_back(candidates[static_cast<size_t>(rng.next_below(
        static_cast<int>(candidates.size())))]);
  }
  return detail::mask_plan(PlanMode::mlm, seq, std::move(masked),
                           static_cast<int>(candidates.size()), 1.0);
}

/// Uniform-count masking: the masked count m is uniform on {1..D}, the
/// masked set uniform among subsets of that size, and every prediction is
/// weighted D/m so the expected loss matches the permutation average.
inline FactorizationPlan make_mlmu_plan(const data::TokenSequence& seq, const data::Vocab& vocab,
                                        Rng& rng) {
  const auto candidates = seq.maskable_positions(vocab);
  require(!candidates.empty(), "make_mlmu_plan: sequence has no maskable positions");
  const int d_mask = static_cast<int>(candidates.size());
  const int m = 1 + rng.next_below(d_mask);
  std::vector<int> masked;
  for (int idx : rng.sample_distinct(d_mask, m)) {
    masked.push_back(candidates[static_cast<size_t>(idx)]);
  }
  const double weight = static_cast<double>(d_mask) / static_cast<double>(m);
  return detail::mask_plan(PlanMode::mlmu, seq, std::move(masked), d_mask, weight);
}

/// Permutation plan: a uniformly random factorization order over the
/// maskable positions, realized as a permutation-causal mask. Every maskable
/// position is predicted (no partial prediction). Reserved control tokens
/// stay visible to every query; their own rows see only other reserved
/// tokens so no content can route through them.
inline FactorizationPlan make_plm_plan(const data::TokenSequence& seq, const data::Vocab& vocab,
                                       Rng& rng) {
  const int d_len = seq.length();
  require(d_len >= 2, "make_plm_plan: need at least 2 tokens");
  const auto candidates = seq.maskable_positions(vocab);
  require(!candidates.empty(), "make_plm_plan: sequence has no maskable positions");

  std::vector<int> order = candidates;
  rng.shuffle(order);
  std::vector<int> rank(static_cast<size_t>(d_len), -1);  // -1 marks reserved positions
  for (size_t i = 0; i < order.size(); ++i) rank[static_cast<size_t>(order[i])] = static_cast<int>(i);

  FactorizationPlan plan;
  plan.mode = PlanMode::plm;
  plan.permutation = order;
  plan.visibility = model::VisibilityMask(d_len);
  for (int q = 0; q < d_len; ++q) {
    for (int k = 0; k < d_len; ++k) {
      if (q == k) continue;
      const bool k_reserved = rank[static_cast<size_t>(k)] < 0;
      const bool q_reserved = rank[static_cast<size_t>(q)] < 0;
      bool visible = false;
      if (k_reserved) {
        visible = true;
      } else if (!q_reserved) {
        visible = rank[static_cast<size_t>(k)] < rank[static_cast<size_t>(q)];
      }
      plan.visibility.set(q, k, visible);
    }
  }
  std::vector<int> sorted = candidates;
  for (int q : sorted) {
    plan.predict_positions.push_back(q);
    plan.targets.push_back(seq.tokens[static_cast<size_t>(q)]);
    plan.weights.push_back(1.0);
  }
  return plan;
}

/// Full token-order reversal with <bos>/<eos> re-anchored at the ends.
inline data::TokenSequence reverse_tokens(const data::TokenSequence& seq) {
  using data::Vocab;
  data::TokenSequence out;
  out.kind = seq.kind;
  out.direction = seq.direction;
  out.split = seq.split;

  int begin = 0, end = seq.length();
  const bool has_bos = end > 0 && seq.tokens[0] == Vocab::kBos;
  const bool has_eos = end > 0 && seq.tokens[static_cast<size_t>(end - 1)] == Vocab::kEos;
  if (has_bos) begin = 1;
  if (has_eos) end -= 1;

  if (has_bos) out.tokens.push_back(Vocab::kBos);
  for (int i = end - 1; i >= begin; --i) out.tokens.push_back(seq.tokens[static_cast<size_t>(i)]);
  if (has_eos) out.tokens.push_back(Vocab::kEos);

  // Original position i in [begin, end) lands at shift + (end - 1 - i).
  const int shift = has_bos ? 1 : 0;
  for (const auto& s : seq.spans) {
    out.spans.push_back(data::EntitySpan{shift + (end - s.end), shift + (end - s.start), s.kind});
  }
  std::sort(out.spans.begin(), out.spans.end(),
            [](const data::EntitySpan& x, const data::EntitySpan& y) { return x.start < y.start; });
  return out;
}

/// Reverse the ORDER of annotated spans while preserving token order inside
/// each span. Uncovered runs between spans move as implicit chunks. When
/// use_delimiters is set, every moved key/value/entity span is wrapped in
/// <rev>...</rev> so reversed text cannot be confused with forward text.
inline data::TokenSequence reverse_entities(const data::TokenSequence& seq,
                                            const std::vector<data::EntitySpan>& spans,
                                            bool use_delimiters) {
  using data::Vocab;
  const int d_len = seq.length();
  int begin = 0, end = d_len;
  const bool has_bos = d_len > 0 && seq.tokens[0] == Vocab::kBos;
  const bool has_eos = d_len > 0 && seq.tokens[static_cast<size_t>(d_len - 1)] == Vocab::kEos;
  if (has_bos) begin = 1;
  if (has_eos) end -= 1;

  // Validate and collect segments covering [begin, end).
  struct Segment {
    int start, end;
    bool wrap;
  };
  std::vector<data::EntitySpan> ordered = spans;
  std::sort(ordered.begin(), ordered.end(),
            [](const data::EntitySpan& a, const data::EntitySpan& b) { return a.start < b.start; });
  int cursor = begin;
  std::vector<Segment> segments;
  for (const auto& s : ordered) {
    if (s.start < cursor) fail("reverse_entities: overlapping spans at position ", s.start);
    require(s.start >= begin && s.end <= end, "reverse_entities: span outside content range");
    if (s.start > cursor) segments.push_back(Segment{cursor, s.start, false});
    const bool wrap = s.kind != data::SpanKind::delimiter;
    segments.push_back(Segment{s.start, s.end, wrap});
    cursor = s.end;
  }
  if (cursor < end) segments.push_back(Segment{cursor, end, false});

  data::TokenSequence out;
  out.kind = seq.kind;
  out.direction = seq.direction;
  out.split = seq.split;
  if (has_bos) out.tokens.push_back(Vocab::kBos);
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    const bool wrap = use_delimiters && it->wrap;
    if (wrap) out.tokens.push_back(Vocab::kRevOpen);
    const int span_start = static_cast<int>(out.tokens.size());
    for (int i = it->start; i < it->end; ++i) {
      out.tokens.push_back(seq.tokens[static_cast<size_t>(i)]);
    }
    if (it->wrap) {
      out.spans.push_back(
          data::EntitySpan{span_start, static_cast<int>(out.tokens.size()), data::SpanKind::entity});
    }
    if (wrap) out.tokens.push_back(Vocab::kRevClose);
  }
  if (has_eos) out.tokens.push_back(Vocab::kEos);
  return out;
}

inline data::TokenSequence reverse_entities(const data::TokenSequence& seq, bool use_delimiters) {
  return reverse_entities(seq, seq.spans, use_delimiters);
}

}  // namespace factorlab::objectives
