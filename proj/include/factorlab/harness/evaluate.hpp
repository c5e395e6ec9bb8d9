#pragma once

#include <vector>

#include "factorlab/data/dataset.hpp"
#include "factorlab/harness/generate.hpp"

namespace factorlab::harness {

struct EvalResult {
  double forward_acc = 0.0;   // percent
  double backward_acc = 0.0;  // percent
  double incorrect_rate = 0.0;
  bool has_mirror = false;
  int n_forward = 0;
  int n_backward = 0;
};

/// Exact match on token ids, <eos> stripped from both sides. The incorrect-
/// inference rate counts answers that equal the mirrored entity, over every
/// query that carries one.
template <typename Real>
EvalResult evaluate_exact_match(model::ModelState<Real>& state, const data::QADataset& ds,
                                bool mask_mode, int limit_per_direction = 0) {
  const int max_new = ds.max_answer_len() + 2;
  EvalResult result;
  int mirror_total = 0, mirror_hits = 0;

  for (const auto dir : {data::Direction::forward, data::Direction::backward}) {
    auto queries = ds.eval_queries(dir);
    if (limit_per_direction > 0 && static_cast<int>(queries.size()) > limit_per_direction) {
      queries.resize(static_cast<size_t>(limit_per_direction));
    }
    int hits = 0;
    for (const auto* q : queries) {
      const auto gen = generate(state, q->prompt_tokens(), mask_mode, max_new);
      if (gen.tokens == q->answer_tokens()) ++hits;
      if (!q->mirror_answer.empty()) {
        ++mirror_total;
        if (gen.tokens == q->mirror_answer) ++mirror_hits;
      }
    }
    const int n = static_cast<int>(queries.size());
    const double acc = n > 0 ? 100.0 * hits / n : 0.0;
    if (dir == data::Direction::forward) {
      result.forward_acc = acc;
      result.n_forward = n;
    } else {
      result.backward_acc = acc;
      result.n_backward = n;
    }
  }
  result.has_mirror = mirror_total > 0;
  result.incorrect_rate = mirror_total > 0 ? 100.0 * mirror_hits / mirror_total : 0.0;
  return result;
}

}  // namespace factorlab::harness
