#pragma once

#include <vector>

#include "factorlab/data/vocab.hpp"
#include "factorlab/model/transformer.hpp"

namespace factorlab::harness {

struct GenerationResult {
  std::vector<int> tokens;  // generated answer, <eos> stripped
  int forward_passes = 0;
  bool hit_eos = false;
};

namespace detail {

/// Lowest token id wins ties.
template <typename Real>
int argmax_row(const engine::Tensor<Real>* logits, int row) {
  const int vocab = logits->cols();
  int best = 0;
  Real best_v = logits->at(row, 0);
  for (int v = 1; v < vocab; ++v) {
    if (logits->at(row, v) > best_v) {
      best_v = logits->at(row, v);
      best = v;
    }
  }
  return best;
}

}  // namespace detail

/// Greedy left-to-right decoding: one forward pass per generated token (the
/// pass that emits <eos> included).
template <typename Real>
GenerationResult generate_autoregressive(model::ModelState<Real>& state,
                                         const std::vector<int>& prompt, int max_new,
                                         int eos_id = data::Vocab::kEos) {
  require(!prompt.empty(), "generate: empty prompt");
  if (static_cast<int>(prompt.size()) + max_new > state.config.max_seq_len) {
    fail("generate: prompt of ", prompt.size(), " plus ", max_new,
         " new tokens exceeds max_seq_len ", state.config.max_seq_len);
  }
  GenerationResult result;
  std::vector<int> seq = prompt;
  for (int step = 0; step < max_new; ++step) {
    seq.push_back(data::Vocab::kMask);  // placeholder at the next position
    const int d_len = static_cast<int>(seq.size());
    engine::Graph<Real> g;
    g.set_recording(false);
    auto* logits = model::forward_logits(g, state, seq, model::VisibilityMask::strict_causal(d_len),
                                         {d_len - 1});
    ++result.forward_passes;
    const int next = detail::argmax_row(logits, 0);
    seq.back() = next;
    if (next == eos_id) {
      result.hit_eos = true;
      return result;
    }
    result.tokens.push_back(next);
  }
  return result;
}

/// Mask-filling decoding: append max_new mask tokens, then repeatedly
/// predict the leftmost remaining mask with full bidirectional visibility
/// over everything already unmasked, commit the argmax, and stop at <eos>.
template <typename Real>
GenerationResult generate_leftmost_fill(model::ModelState<Real>& state,
                                        const std::vector<int>& prompt, int max_new,
                                        int eos_id = data::Vocab::kEos) {
  require(!prompt.empty(), "generate: empty prompt");
  if (static_cast<int>(prompt.size()) + max_new > state.config.max_seq_len) {
    fail("generate: prompt of ", prompt.size(), " plus ", max_new,
         " new tokens exceeds max_seq_len ", state.config.max_seq_len);
  }
  GenerationResult result;
  std::vector<int> seq = prompt;
  seq.resize(prompt.size() + static_cast<size_t>(max_new), data::Vocab::kMask);
  const int d_len = static_cast<int>(seq.size());

  for (int fill = 0; fill < max_new; ++fill) {
    const int pos = static_cast<int>(prompt.size()) + fill;
    // Unmasked positions are mutually visible (self excluded); positions
    // still masked are invisible to everyone.
    model::VisibilityMask mask = model::VisibilityMask::full_except_self(d_len);
    for (int m = pos; m < d_len; ++m) mask.clear_column(m);
    engine::Graph<Real> g;
    g.set_recording(false);
    auto* logits = model::forward_logits(g, state, seq, mask, {pos});
    ++result.forward_passes;
    const int next = detail::argmax_row(logits, 0);
    if (next == eos_id) {
      result.hit_eos = true;
      return result;
    }
    seq[static_cast<size_t>(pos)] = next;
    result.tokens.push_back(next);
  }
  return result;
}

template <typename Real>
GenerationResult generate(model::ModelState<Real>& state, const std::vector<int>& prompt,
                          bool mask_mode, int max_new, int eos_id = data::Vocab::kEos) {
  return mask_mode ? generate_leftmost_fill(state, prompt, max_new, eos_id)
                   : generate_autoregressive(state, prompt, max_new, eos_id);
}

}  // namespace factorlab::harness
