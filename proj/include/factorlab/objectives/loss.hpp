#pragma once

#include <utility>
#include <vector>

#include "factorlab/engine/graph.hpp"
#include "factorlab/objectives/plan.hpp"

namespace factorlab::objectives {

template <typename Real>
struct LossTerms {
  engine::Tensor<Real>* weighted_sum = nullptr;  // scalar node
  double weight_total = 0.0;
};

/// Weighted cross-entropy over the plan's predictions. logits rows must line
/// up with plan.predict_positions. Callers accumulate weighted_sum and
/// weight_total across a batch and normalize once.
template <typename Real>
LossTerms<Real> sequence_loss_terms(engine::Graph<Real>& g, engine::Tensor<Real>* logits,
                                    const FactorizationPlan& plan) {
  const int n_pred = static_cast<int>(plan.predict_positions.size());
  if (logits->rows() != n_pred) {
    fail("sequence_loss: logits cover ", logits->rows(), " positions but plan predicts ", n_pred);
  }
  auto* logp = g.log_softmax_last(logits);
  std::vector<std::pair<int, int>> picks;
  picks.reserve(static_cast<size_t>(n_pred));
  for (int i = 0; i < n_pred; ++i) {
    picks.emplace_back(i, plan.targets[static_cast<size_t>(i)]);
  }
  auto* picked = g.pick(logp, std::move(picks));

  auto wt = engine::Tensor<Real>::zeros({n_pred});
  double total = 0.0;
  for (int i = 0; i < n_pred; ++i) {
    require(plan.weights[static_cast<size_t>(i)] > 0.0, "sequence_loss: weights must be positive");
    wt.values[static_cast<size_t>(i)] = static_cast<Real>(plan.weights[static_cast<size_t>(i)]);
    total += plan.weights[static_cast<size_t>(i)];
  }
  auto* weighted = g.mul(picked, g.constant(std::move(wt)));
  return LossTerms<Real>{g.scale(g.sum(weighted), -1.0), total};
}

/// Single-sequence loss normalized by its own weight total.
template <typename Real>
engine::Tensor<Real>* sequence_loss(engine::Graph<Real>& g, engine::Tensor<Real>* logits,
                                    const FactorizationPlan& plan) {
  auto terms = sequence_loss_terms(g, logits, plan);
  return g.scale(terms.weighted_sum, 1.0 / terms.weight_total);
}

}  // namespace factorlab::objectives
