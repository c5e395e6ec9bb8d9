#pragma once

#include <string>

#include "factorlab/config_text.hpp"
#include "factorlab/model/config.hpp"

namespace factorlab::harness {

enum class Objective { ar, ar_rev_token, ar_rev_entity, ar_rev_entity_delim, mlm, mlmu, plm };

inline Objective objective_from(const std::string& s) {
  if (s == "ar") return Objective::ar;
  if (s == "ar-rev-token") return Objective::ar_rev_token;
  if (s == "ar-rev-entity") return Objective::ar_rev_entity;
  if (s == "ar-rev-entity-delim") return Objective::ar_rev_entity_delim;
  if (s == "mlm") return Objective::mlm;
  if (s == "mlmu") return Objective::mlmu;
  if (s == "plm") return Objective::plm;
  fail("unknown objective \"", s,
       "\" (expected ar, ar-rev-token, ar-rev-entity, ar-rev-entity-delim, mlm, mlmu, plm)");
}

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::ar: return "ar";
    case Objective::ar_rev_token: return "ar-rev-token";
    case Objective::ar_rev_entity: return "ar-rev-entity";
    case Objective::ar_rev_entity_delim: return "ar-rev-entity-delim";
    case Objective::mlm: return "mlm";
    case Objective::mlmu: return "mlmu";
    default: return "plm";
  }
}

/// True for objectives that train with masked prediction and therefore
/// generate by leftmost mask filling instead of a left-to-right loop.
inline bool mask_family(Objective o) {
  return o == Objective::mlm || o == Objective::mlmu || o == Objective::plm;
}

struct TrainConfig {
  Objective objective = Objective::mlmu;
  double mlm_rate = 0.15;
  model::ModelConfig model;  // vocab_size and max_seq_len auto-fill from data when 0
  std::string data_path;
  std::string out_dir;
  int batch_size = 32;
  long total_steps = 1000;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double warmup_fraction = 0.01;
  uint64_t seed = 1;
  long eval_interval = 100;
  long checkpoint_interval = 0;  // 0 = final checkpoint only
  int eval_limit = 0;            // 0 = evaluate every held-out query
  bool answer_loss_only = false;

  void validate() const {
    require(total_steps > 0, "TrainConfig: total_steps must be positive");
    require(batch_size > 0, "TrainConfig: batch_size must be positive");
    require(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
            "TrainConfig: warmup_fraction must be in [0,1)");
    require(eval_interval > 0, "TrainConfig: eval_interval must be positive");
    if (objective == Objective::mlm) {
      require(mlm_rate > 0.0 && mlm_rate < 1.0, "TrainConfig: mlm_rate must be in (0,1)");
    }
  }

  static TrainConfig from_config(const ConfigText& c) {
    TrainConfig t;
    if (c.has("objective")) t.objective = objective_from(c.get("objective"));
    if (c.has("mlm_rate")) t.mlm_rate = std::stod(c.get("mlm_rate"));
    if (c.has("data")) t.data_path = c.get("data");
    if (c.has("out_dir")) t.out_dir = c.get("out_dir");
    if (c.has("batch_size")) t.batch_size = std::stoi(c.get("batch_size"));
    if (c.has("total_steps")) t.total_steps = std::stol(c.get("total_steps"));
    if (c.has("learning_rate")) t.learning_rate = std::stod(c.get("learning_rate"));
    if (c.has("weight_decay")) t.weight_decay = std::stod(c.get("weight_decay"));
    if (c.has("warmup_fraction")) t.warmup_fraction = std::stod(c.get("warmup_fraction"));
    if (c.has("seed")) t.seed = std::stoull(c.get("seed"));
    if (c.has("eval_interval")) t.eval_interval = std::stol(c.get("eval_interval"));
    if (c.has("checkpoint_interval")) t.checkpoint_interval = std::stol(c.get("checkpoint_interval"));
    if (c.has("eval_limit")) t.eval_limit = std::stoi(c.get("eval_limit"));
    if (c.has("answer_loss_only")) t.answer_loss_only = c.get("answer_loss_only") == "true";
    if (c.has("model.n_layers")) t.model.n_layers = std::stoi(c.get("model.n_layers"));
    if (c.has("model.n_heads")) t.model.n_heads = std::stoi(c.get("model.n_heads"));
    if (c.has("model.embed_dim")) t.model.embed_dim = std::stoi(c.get("model.embed_dim"));
    if (c.has("model.max_seq_len")) t.model.max_seq_len = std::stoi(c.get("model.max_seq_len"));
    if (c.has("model.decoder_self_attention")) {
      t.model.decoder_self_attention = c.get("model.decoder_self_attention") == "true";
    }
    return t;
  }

  std::string to_config_text() const {
    std::string s;
    s += cat("objective: ", to_string(objective), "\n");
    s += cat("mlm_rate: ", mlm_rate, "\n");
    s += cat("data: ", data_path, "\n");
    s += cat("out_dir: ", out_dir, "\n");
    s += cat("batch_size: ", batch_size, "\n");
    s += cat("total_steps: ", total_steps, "\n");
    s += cat("learning_rate: ", learning_rate, "\n");
    s += cat("weight_decay: ", weight_decay, "\n");
    s += cat("warmup_fraction: ", warmup_fraction, "\n");
    s += cat("seed: ", seed, "\n");
    s += cat("eval_interval: ", eval_interval, "\n");
    s += cat("checkpoint_interval: ", checkpoint_interval, "\n");
    s += cat("eval_limit: ", eval_limit, "\n");
    s += cat("answer_loss_only: ", answer_loss_only ? "true" : "false", "\n");
    s += "model:\n";
    s += cat("  n_layers: ", model.n_layers, "\n");
    s += cat("  n_heads: ", model.n_heads, "\n");
    s += cat("  embed_dim: ", model.embed_dim, "\n");
    s += cat("  max_seq_len: ", model.max_seq_len, "\n");
    s += cat("  decoder_self_attention: ", model.decoder_self_attention ? "true" : "false", "\n");
    return s;
  }
};

}  // namespace factorlab::harness
