#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "factorlab/data/dataset.hpp"
#include "factorlab/engine/adamw.hpp"
#include "factorlab/harness/evaluate.hpp"
#include "factorlab/harness/metrics.hpp"
#include "factorlab/harness/train_config.hpp"
#include "factorlab/model/checkpoint.hpp"
#include "factorlab/model/transformer.hpp"
#include "factorlab/objectives/loss.hpp"
#include "factorlab/objectives/plan.hpp"

namespace factorlab::harness {

namespace detail {

inline objectives::FactorizationPlan plan_for(Objective obj, double mlm_rate,
                                              const data::TokenSequence& seq,
                                              const data::Vocab& vocab, Rng& rng) {
  switch (obj) {
    case Objective::mlm: return objectives::make_mlm_plan(seq, mlm_rate, vocab, rng);
    case Objective::mlmu: return objectives::make_mlmu_plan(seq, vocab, rng);
    case Objective::plm: return objectives::make_plm_plan(seq, vocab, rng);
    default: return objectives::make_ar_plan(seq);
  }
}

/// Restrict a plan's predictions to the answer region of a qa record.
inline void restrict_to_answer(objectives::FactorizationPlan& plan,
                               const data::TokenSequence& seq) {
  if (seq.kind != data::RecordKind::qa) return;
  objectives::FactorizationPlan keep = plan;
  keep.predict_positions.clear();
  keep.targets.clear();
  keep.weights.clear();
  for (size_t i = 0; i < plan.predict_positions.size(); ++i) {
    if (plan.predict_positions[i] >= seq.answer_start) {
      keep.predict_positions.push_back(plan.predict_positions[i]);
      keep.targets.push_back(plan.targets[i]);
      keep.weights.push_back(plan.weights[i]);
    }
  }
  require(!keep.predict_positions.empty(),
          "answer_loss_only: plan has no predictions in the answer region");
  plan = std::move(keep);
}

/// The training pool: every train-split record, doubled with reversed
/// copies for the reverse objectives.
inline std::vector<data::TokenSequence> build_pool(Objective obj, const data::QADataset& ds) {
  std::vector<data::TokenSequence> pool;
  for (const auto& r : ds.records) {
    if (r.split == data::Split::train) pool.push_back(r);
  }
  if (obj == Objective::ar_rev_token) {
    const size_t n = pool.size();
    for (size_t i = 0; i < n; ++i) pool.push_back(objectives::reverse_tokens(pool[i]));
  } else if (obj == Objective::ar_rev_entity || obj == Objective::ar_rev_entity_delim) {
    const bool delims = obj == Objective::ar_rev_entity_delim;
    const size_t n = pool.size();
    for (size_t i = 0; i < n; ++i) pool.push_back(objectives::reverse_entities(pool[i], delims));
  }
  return pool;
}

}  // namespace detail

struct TrainResult {
  model::ModelState<float> state;
  std::vector<MetricsRecord> metrics;
  std::vector<std::pair<long, double>> timings;  // (step, seconds since start)
  EvalResult final_eval;
};

/// One full training run: per step, sample a batch, build one factorization
/// plan per sequence, forward, weighted loss normalized across the batch,
/// backward, optimizer step. Deterministic given config and dataset.
inline TrainResult train(TrainConfig cfg, const data::QADataset& ds, std::ostream* log = nullptr) {
  cfg.validate();
  ds.validate();
  const bool masked = mask_family(cfg.objective);

  cfg.model.vocab_size = ds.vocab.size();
  const int needed_len = std::max(ds.max_sequence_len(),
                                  ds.max_sequence_len() + ds.max_answer_len() + 2);
  if (cfg.model.max_seq_len < needed_len) cfg.model.max_seq_len = needed_len;
  cfg.model.validate();

  const auto pool = detail::build_pool(cfg.objective, ds);
  require(!pool.empty(), "train: dataset has no train-split records");

  Rng root(cfg.seed);
  TrainResult result;
  result.state = model::init_params<float>(cfg.model, root.split("init").next_u64());

  engine::AdamW<float>::Options opt_opts;
  opt_opts.learning_rate = cfg.learning_rate;
  opt_opts.weight_decay = cfg.weight_decay;
  opt_opts.warmup_fraction = cfg.warmup_fraction;
  opt_opts.total_steps = cfg.total_steps;
  engine::AdamW<float> optimizer(result.state.parameters(), opt_opts);

  Rng order_rng = root.split("order");
  Rng plan_rng = root.split("plans");
  std::vector<int> order(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) order[i] = static_cast<int>(i);
  size_t cursor = order.size();  // forces a shuffle on first use
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  double loss_accum = 0.0;
  long loss_count = 0;

  auto batch_loss = [&](Rng& rng, bool update) {
    engine::Graph<float> g;
    g.set_check_finite(false);  // the loss itself is checked every step
    std::vector<engine::Tensor<float>*> terms;
    double weight_total = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (update) {
        if (cursor >= order.size()) {
          order_rng.shuffle(order);
          cursor = 0;
        }
      }
      const auto& seq =
          update ? pool[static_cast<size_t>(order[cursor++])]
                 : pool[static_cast<size_t>(b % static_cast<int>(pool.size()))];
      auto plan = detail::plan_for(cfg.objective, cfg.mlm_rate, seq, ds.vocab, rng);
      if (cfg.answer_loss_only) detail::restrict_to_answer(plan, seq);
      auto* logits = model::forward_logits(g, result.state, plan.encoder_input(seq.tokens),
                                           plan.visibility, plan.predict_positions);
      auto terms_b = objectives::sequence_loss_terms(g, logits, plan);
      terms.push_back(terms_b.weighted_sum);
      weight_total += terms_b.weight_total;
    }
    auto* total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = g.add(total, terms[i]);
    auto* loss = g.scale(total, 1.0 / weight_total);
    const double loss_value = static_cast<double>(loss->item());
    if (update) {
      g.backward(loss);
      optimizer.step();
    }
    return loss_value;
  };

  auto record_metrics = [&](long step, double train_loss) {
    const auto eval = evaluate_exact_match(result.state, ds, masked, cfg.eval_limit);
    MetricsRecord rec;
    rec.step = step;
    rec.train_loss = train_loss;
    rec.forward_acc = eval.forward_acc;
    rec.backward_acc = eval.backward_acc;
    rec.incorrect_rate = eval.incorrect_rate;
    rec.has_incorrect = eval.has_mirror;
    result.metrics.push_back(rec);
    result.timings.emplace_back(step, elapsed());
    result.final_eval = eval;
    if (log) {
      *log << "step " << step << " loss " << format_fixed(train_loss, 4) << " fwd "
           << format_fixed(eval.forward_acc, 1) << " bwd " << format_fixed(eval.backward_acc, 1);
      if (eval.has_mirror) *log << " incorrect " << format_fixed(eval.incorrect_rate, 1);
      *log << "\n";
      log->flush();
    }
  };

  {
    Rng probe = root.split("probe");
    record_metrics(0, batch_loss(probe, false));
  }

  for (long step = 1; step <= cfg.total_steps; ++step) {
    const double loss_value = batch_loss(plan_rng, true);
    if (!std::isfinite(loss_value)) {
      fail("train: non-finite loss ", loss_value, " at step ", step, " (objective ",
           to_string(cfg.objective), ", lr ", cfg.learning_rate, ")");
    }
    loss_accum += loss_value;
    ++loss_count;

    const bool at_eval = step % cfg.eval_interval == 0 || step == cfg.total_steps;
    if (at_eval) {
      record_metrics(step, loss_accum / static_cast<double>(loss_count));
      loss_accum = 0.0;
      loss_count = 0;
    }
    if (cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0 &&
        !cfg.out_dir.empty()) {
      std::filesystem::create_directories(cfg.out_dir + "/checkpoints");
      char name[64];
      std::snprintf(name, sizeof(name), "step_%06ld.bin", step);
      model::save_checkpoint(cfg.out_dir + "/checkpoints/" + name, result.state,
                             {{"objective", to_string(cfg.objective)}});
    }
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir + "/checkpoints");
    model::save_checkpoint(cfg.out_dir + "/checkpoints/final.bin", result.state,
                           {{"objective", to_string(cfg.objective)}});
    write_file(cfg.out_dir + "/metrics.csv", metrics_csv(result.metrics));
    write_file(cfg.out_dir + "/timings.csv", timings_csv(result.timings));
    write_file(cfg.out_dir + "/config.txt", cfg.to_config_text());
  }
  return result;
}

inline TrainResult train_from_files(TrainConfig cfg, std::ostream* log = nullptr) {
  require(!cfg.data_path.empty(), "train: no dataset path configured");
  const auto ds = data::load_dataset(cfg.data_path);
  return train(std::move(cfg), ds, log);
}

}  // namespace factorlab::harness
