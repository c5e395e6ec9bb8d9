#pragma once

#include <algorithm>
#include <vector>

#include "factorlab/model/transformer.hpp"
#include "factorlab/objectives/loss.hpp"
#include "factorlab/objectives/plan.hpp"

namespace factorlab::objectives {

/// Exact-enumeration evaluation of the masked and permutation objectives on
/// a fixed model. The permutation objective is the expectation over all
/// factorization orders of the summed conditional losses; each conditional
/// p(x_q | visible set V) is evaluated with a masked forward pass, which is
/// exactly how the uniform-count objective evaluates the same conditional.
/// Feasible for small maskable counts only (full subset and permutation
/// enumeration).

namespace detail {

inline FactorizationPlan plan_for_conditional(const data::TokenSequence& seq,
                                              int maskable_count,
                                              const std::vector<int>& masked,
                                              const std::vector<int>& predict) {
  FactorizationPlan plan;
  plan.mode = PlanMode::mlm;
  std::vector<int> sorted_masked = masked;
  std::sort(sorted_masked.begin(), sorted_masked.end());
  plan.visibility = mask_visibility(seq.length(), sorted_masked);
  std::vector<int> sorted_predict = predict;
  std::sort(sorted_predict.begin(), sorted_predict.end());
  for (int q : sorted_predict) {
    plan.predict_positions.push_back(q);
    plan.targets.push_back(seq.tokens[static_cast<size_t>(q)]);
    plan.weights.push_back(1.0);
  }
  plan.masked = std::move(sorted_masked);
  plan.maskable_count = maskable_count;
  return plan;
}

/// Sum of cross-entropies for predicting `predict` positions with `masked`
/// positions hidden.
template <typename Real>
double conditional_loss(model::ModelState<Real>& state, const data::TokenSequence& seq,
                        int maskable_count, const std::vector<int>& masked,
                        const std::vector<int>& predict) {
  FactorizationPlan plan = plan_for_conditional(seq, maskable_count, masked, predict);
  engine::Graph<Real> g;
  auto* logits = model::forward_logits(g, state, plan.encoder_input(seq.tokens), plan.visibility,
                                       plan.predict_positions);
  auto terms = sequence_loss_terms(g, logits, plan);
  return static_cast<double>(terms.weighted_sum->item());
}

}  // namespace detail

/// E over masked-count m ~ U{1..D} and masked set M ~ U(subsets of size m)
/// of the weighted masked loss sum, weights D/m.
template <typename Real>
double enumerate_mlmu_loss(model::ModelState<Real>& state, const data::TokenSequence& seq,
                           const data::Vocab& vocab) {
  const auto candidates = seq.maskable_positions(vocab);
  const int d_mask = static_cast<int>(candidates.size());
  require(d_mask >= 1 && d_mask <= 12, "enumerate_mlmu_loss: maskable count must be small");

  double expectation = 0.0;
  for (int m = 1; m <= d_mask; ++m) {
    double sum_over_subsets = 0.0;
    long n_subsets = 0;
    for (unsigned bits = 0; bits < (1u << d_mask); ++bits) {
      if (__builtin_popcount(bits) != m) continue;
      std::vector<int> masked;
      for (int i = 0; i < d_mask; ++i) {
        if (bits & (1u << i)) masked.push_back(candidates[static_cast<size_t>(i)]);
      }
      const double ce_sum = detail::conditional_loss(state, seq, d_mask, masked, masked);
      sum_over_subsets += (static_cast<double>(d_mask) / m) * ce_sum;
      ++n_subsets;
    }
    expectation += sum_over_subsets / (static_cast<double>(n_subsets) * d_mask);
  }
  return expectation;
}

/// E over all factorization orders sigma of sum_t CE(x_sigma(t) |
/// x_sigma(<t)), each conditional evaluated with the positions outside the
/// prefix masked.
template <typename Real>
double enumerate_plm_loss(model::ModelState<Real>& state, const data::TokenSequence& seq,
                          const data::Vocab& vocab) {
  const auto candidates = seq.maskable_positions(vocab);
  const int d_mask = static_cast<int>(candidates.size());
  require(d_mask >= 1 && d_mask <= 8, "enumerate_plm_loss: maskable count must be small");

  std::vector<int> order(candidates.begin(), candidates.end());
  std::sort(order.begin(), order.end());
  double total = 0.0;
  long n_orders = 0;
  do {
    double seq_loss = 0.0;
    for (int t = 0; t < d_mask; ++t) {
      std::vector<int> masked(order.begin() + t, order.end());
      seq_loss += detail::conditional_loss(state, seq, d_mask, masked,
                                           {order[static_cast<size_t>(t)]});
    }
    total += seq_loss;
    ++n_orders;
  } while (std::next_permutation(order.begin(), order.end()));
  return total / static_cast<double>(n_orders);
}

}  // namespace factorlab::objectives
