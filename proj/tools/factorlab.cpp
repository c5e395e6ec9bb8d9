// Command-line front end: data generation, the knowledge-graph QA builder,
// training, evaluation, the mask-rate sweep, entity PCA, and presets that
// reproduce whole experiment tables in one shot.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "factorlab/data/dataset.hpp"
#include "factorlab/harness/pca.hpp"
#include "factorlab/harness/presets.hpp"
#include "factorlab/harness/train.hpp"
#include "factorlab/kgqa/builder.hpp"
#include "factorlab/model/checkpoint.hpp"
#include "factorlab/taskgen/bios.hpp"
#include "factorlab/taskgen/relationship.hpp"
#include "factorlab/taskgen/retrieval.hpp"
#include "factorlab/taskgen/stargraph.hpp"

using namespace factorlab;

namespace {

/// FACTORLAB_SEED beats every configured or flagged seed.
bool env_seed(uint64_t* out) {
  const char* s = std::getenv("FACTORLAB_SEED");
  if (!s || !*s) return false;
  *out = std::stoull(s);
  return true;
}

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factorlab: factorization-agnostic language model training lab"};
  app.require_subcommand(1);

  // ---- gen-data ----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic benchmark dataset");
  std::string task, gen_out = "dataset.jsonl";
  uint64_t gen_seed = 1;
  int n_items = 0, key_len = 2, val_len = 2, entity_len = 2;
  int arms = 2, arm_len = 4, n_nodes = 20;
  double train_fraction = 0.8;
  gen->add_option("task", task, "retrieval | relationship | bios | stargraph")->required();
  gen->add_option("--out", gen_out, "output jsonl path (sidecar .vocab next to it)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--n", n_items, "pairs / triples / people / samples (task default if 0)");
  gen->add_option("--key-len", key_len, "retrieval key length");
  gen->add_option("--val-len", val_len, "retrieval value length");
  gen->add_option("--entity-len", entity_len, "relationship entity length");
  gen->add_option("--arms", arms, "star graph arm count");
  gen->add_option("--arm-len", arm_len, "star graph nodes per arm");
  gen->add_option("--n-nodes", n_nodes, "star graph node pool size");
  gen->add_option("--train-fraction", train_fraction, "query train fraction");

  // ---- build-kgqa --------------------------------------------------------
  auto* kg = app.add_subcommand("build-kgqa", "build a forward/backward QA dataset from a corpus");
  kgqa::BuildOptions kg_opt;
  std::string kg_out = "wikireversal.jsonl", kg_split_mode = "shared-seed";
  kg->add_option("--corpus", kg_opt.corpus_path, "annotated passage corpus (jsonl)")->required();
  kg->add_option("--templates", kg_opt.templates_path, "question templates file")->required();
  kg->add_option("--min-count", kg_opt.min_count, "minimum relation instance count");
  kg->add_option("--split-seed", kg_opt.split_seed, "train/eval split seed");
  kg->add_option("--split-mode", kg_split_mode, "shared-seed | independent-seeds");
  kg->add_flag("--permissive", kg_opt.permissive, "skip malformed records instead of failing");
  kg->add_option("--out", kg_out, "output jsonl path");

  // ---- train -------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train one objective on a dataset");
  std::string tr_config_path;
  std::string tr_objective, tr_data, tr_out_dir;
  long tr_steps = 0;
  int tr_batch = 0;
  double tr_lr = 0, tr_wd = -1, tr_warmup = -1, tr_rate = 0;
  uint64_t tr_seed = 0;
  long tr_eval_interval = 0, tr_ckpt_interval = -1;
  int tr_layers = 0, tr_heads = 0, tr_dim = 0, tr_max_len = 0, tr_eval_limit = -1;
  bool tr_answer_only = false, tr_dec_self = false;
  tr->add_option("--config", tr_config_path, "config file (key: value, two-space nesting)");
  tr->add_option("--objective", tr_objective,
                 "ar | ar-rev-token | ar-rev-entity | ar-rev-entity-delim | mlm | mlmu | plm");
  tr->add_option("--data", tr_data, "dataset jsonl path");
  tr->add_option("--out-dir", tr_out_dir, "output directory");
  tr->add_option("--total-steps", tr_steps, "optimizer steps");
  tr->add_option("--batch-size", tr_batch, "sequences per step");
  tr->add_option("--learning-rate", tr_lr, "peak learning rate");
  tr->add_option("--weight-decay", tr_wd, "decoupled weight decay");
  tr->add_option("--warmup-fraction", tr_warmup, "linear warmup fraction of total steps");
  tr->add_option("--mlm-rate", tr_rate, "fixed masking rate for the mlm objective");
  tr->add_option("--seed", tr_seed, "run seed");
  tr->add_option("--eval-interval", tr_eval_interval, "steps between metric rows");
  tr->add_option("--checkpoint-interval", tr_ckpt_interval,
                 "steps between checkpoints (0 = final only)");
  tr->add_option("--eval-limit", tr_eval_limit,
                 "held-out queries per direction during training evals (0 = all)");
  tr->add_option("--n-layers", tr_layers, "model layers");
  tr->add_option("--n-heads", tr_heads, "attention heads");
  tr->add_option("--embed-dim", tr_dim, "embedding dimension");
  tr->add_option("--max-seq-len", tr_max_len, "maximum sequence length (0 = fit dataset)");
  tr->add_flag("--answer-loss-only", tr_answer_only,
               "restrict the loss to answer tokens of qa records");
  tr->add_flag("--decoder-self-attention", tr_dec_self,
               "enable self-attention among decoder positions");

  // ---- eval --------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "exact-match evaluation of a checkpoint");
  std::string ev_ckpt, ev_data;
  int ev_limit = 0;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "dataset jsonl path")->required();
  ev->add_option("--limit", ev_limit, "held-out queries per direction (0 = all)");

  // ---- sweep-mask-rate ---------------------------------------------------
  auto* sw = app.add_subcommand("sweep-mask-rate", "fixed masking rates vs the uniform rate");
  std::vector<double> sw_rates = {0.15, 0.40, 0.85};
  std::string sw_data, sw_out_dir = "out/sweep";
  long sw_steps = 3000;
  int sw_jobs = default_jobs();
  uint64_t sw_seed = 1;
  sw->add_option("--data", sw_data, "dataset jsonl path")->required();
  sw->add_option("--rates", sw_rates, "masking rates (empty = uniform run only)")
      ->expected(0, 10);
  sw->add_option("--out-dir", sw_out_dir, "output directory");
  sw->add_option("--total-steps", sw_steps, "steps per run");
  sw->add_option("--jobs", sw_jobs, "parallel runs");
  sw->add_option("--seed", sw_seed, "run seed");

  // ---- pca ---------------------------------------------------------------
  auto* pc = app.add_subcommand("pca", "principal components of entity representations");
  std::string pc_ckpt, pc_data, pc_out_dir = "out/pca";
  pc->add_option("--checkpoint", pc_ckpt, "checkpoint file")->required();
  pc->add_option("--data", pc_data, "dataset jsonl path")->required();
  pc->add_option("--out-dir", pc_out_dir, "output directory");

  // ---- preset ------------------------------------------------------------
  auto* pr = app.add_subcommand("preset", "reproduce a full experiment table");
  std::string pr_name, pr_out = "out";
  uint64_t pr_seed = 1;
  int pr_jobs = default_jobs();
  double pr_scale = 1.0;
  pr->add_option("name", pr_name,
                 "table1_top | table1_bottom | table2 | fig5 | fig4a | wikireversal_fixture")
      ->required();
  pr->add_option("--out", pr_out, "output root directory");
  pr->add_option("--seed", pr_seed, "experiment seed");
  pr->add_option("--jobs", pr_jobs, "parallel training runs");
  pr->add_option("--budget-scale", pr_scale, "multiplier on preset step budgets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      uint64_t seed = gen_seed;
      env_seed(&seed);
      data::QADataset ds;
      if (task == "retrieval") {
        taskgen::RetrievalOptions o;
        if (n_items > 0) o.n_pairs = n_items;
        o.key_len = key_len;
        o.val_len = val_len;
        o.query_train_fraction = train_fraction;
        o.seed = seed;
        ds = taskgen::gen_retrieval(o);
      } else if (task == "relationship") {
        taskgen::RelationshipOptions o;
        if (n_items > 0) o.n_triples = n_items;
        o.entity_len = entity_len;
        o.query_train_fraction = train_fraction;
        o.seed = seed;
        ds = taskgen::gen_relationship(o);
      } else if (task == "bios") {
        taskgen::BiosOptions o;
        if (n_items > 0) o.n_people = n_items;
        o.query_train_fraction = train_fraction;
        o.seed = seed;
        ds = taskgen::gen_bios(o);
      } else if (task == "stargraph") {
        taskgen::StarGraphOptions o;
        if (n_items > 0) o.n_samples = n_items;
        o.arms = arms;
        o.arm_len = arm_len;
        o.n_nodes = n_nodes;
        o.query_train_fraction = train_fraction;
        o.seed = seed;
        ds = taskgen::gen_stargraph(o);
      } else {
        fail("unknown task \"", task, "\" (expected retrieval, relationship, bios, stargraph)");
      }
      data::save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.records.size() << " records to " << gen_out << " (vocab "
                << ds.vocab.size() << ")\n";
    } else if (*kg) {
      kg_opt.split_mode = kgqa::split_mode_from(kg_split_mode);
      env_seed(&kg_opt.split_seed);
      const auto result = kgqa::build(kg_opt, &std::cerr);
      data::save_dataset(result.dataset, kg_out);
      const std::string stats_path = kg_out + ".stats.tsv";
      harness::write_file(stats_path, result.stats_text());
      std::cout << "passages " << result.n_passages << ", extracted " << result.n_extracted
                << ", after rare-filter " << result.n_after_rare << ", after ambiguity "
                << result.n_after_ambiguity << "\n"
                << result.stats_text();
      std::cout << "wrote " << kg_out << " and " << stats_path << "\n";
    } else if (*tr) {
      harness::TrainConfig cfg;
      if (!tr_config_path.empty()) {
        cfg = harness::TrainConfig::from_config(ConfigText::parse_file(tr_config_path));
      }
      if (!tr_objective.empty()) cfg.objective = harness::objective_from(tr_objective);
      if (!tr_data.empty()) cfg.data_path = tr_data;
      if (!tr_out_dir.empty()) cfg.out_dir = tr_out_dir;
      if (tr_steps > 0) cfg.total_steps = tr_steps;
      if (tr_batch > 0) cfg.batch_size = tr_batch;
      if (tr_lr > 0) cfg.learning_rate = tr_lr;
      if (tr_wd >= 0) cfg.weight_decay = tr_wd;
      if (tr_warmup >= 0) cfg.warmup_fraction = tr_warmup;
      if (tr_rate > 0) cfg.mlm_rate = tr_rate;
      if (tr_seed > 0) cfg.seed = tr_seed;
      if (tr_eval_interval > 0) cfg.eval_interval = tr_eval_interval;
      if (tr_ckpt_interval >= 0) cfg.checkpoint_interval = tr_ckpt_interval;
      if (tr_eval_limit >= 0) cfg.eval_limit = tr_eval_limit;
      if (tr_layers > 0) cfg.model.n_layers = tr_layers;
      if (tr_heads > 0) cfg.model.n_heads = tr_heads;
      if (tr_dim > 0) cfg.model.embed_dim = tr_dim;
      if (tr_max_len > 0) cfg.model.max_seq_len = tr_max_len;
      if (tr_answer_only) cfg.answer_loss_only = true;
      if (tr_dec_self) cfg.model.decoder_self_attention = true;
      env_seed(&cfg.seed);
      const auto result = harness::train_from_files(cfg, &std::cout);
      std::cout << "final: fwd " << harness::format_fixed(result.final_eval.forward_acc, 1)
                << " bwd " << harness::format_fixed(result.final_eval.backward_acc, 1) << "\n";
    } else if (*ev) {
      auto [state, header] = model::load_checkpoint<float>(ev_ckpt);
      const auto ds = data::load_dataset(ev_data);
      const bool masked = harness::mask_family(harness::objective_from(header.get("objective")));
      const auto eval = harness::evaluate_exact_match(state, ds, masked, ev_limit);
      std::cout << "forward_accuracy: " << harness::format_fixed(eval.forward_acc, 2) << "\n"
                << "backward_accuracy: " << harness::format_fixed(eval.backward_acc, 2) << "\n";
      if (eval.has_mirror) {
        std::cout << "incorrect_inference: " << harness::format_fixed(eval.incorrect_rate, 2)
                  << "\n";
      }
    } else if (*sw) {
      const auto ds = data::load_dataset(sw_data);
      harness::TrainConfig base;
      base.data_path = sw_data;
      base.out_dir = sw_out_dir;
      base.total_steps = sw_steps;
      base.eval_interval = std::max<long>(1, sw_steps / 10);
      base.seed = sw_seed;
      env_seed(&base.seed);
      const auto rows = harness::mask_rate_sweep(sw_rates, base, ds, sw_jobs, &std::cout);
      const std::string md = harness::detail::two_row_table("Mask-rate sweep", rows);
      harness::write_file(sw_out_dir + "/table.md", md);
      std::cout << md;
    } else if (*pc) {
      auto [state, header] = model::load_checkpoint<float>(pc_ckpt);
      const auto ds = data::load_dataset(pc_data);
      const auto result = harness::pca_entities(state, ds, 2);
      std::filesystem::create_directories(pc_out_dir + "/plots");
      harness::write_file(pc_out_dir + "/pca.csv", result.csv());
      harness::write_file(pc_out_dir + "/plots/pca.svg",
                          harness::svg::scatter(result.coords, "entity representations"));
      std::cout << "wrote " << result.labels.size() << " entity projections to " << pc_out_dir
                << "\n";
    } else if (*pr) {
      env_seed(&pr_seed);
      harness::run_preset(pr_name, pr_out, pr_seed, pr_jobs, &std::cout, pr_scale);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
