#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "factorlab/harness/svg.hpp"
#include "factorlab/harness/train.hpp"
#include "factorlab/kgqa/builder.hpp"
#include "factorlab/taskgen/bios.hpp"
#include "factorlab/taskgen/relationship.hpp"
#include "factorlab/taskgen/retrieval.hpp"
#include "factorlab/taskgen/stargraph.hpp"

namespace factorlab::harness {

struct PresetRunSpec {
  std::string name;  // column label and output subdirectory
  TrainConfig config;
};

struct PresetRunOutcome {
  std::string name;
  EvalResult eval;                     // full held-out evaluation after training
  std::vector<MetricsRecord> metrics;
};

/// Run training jobs, at most `jobs` at a time. Each run owns its output
/// directory; logs go to <out_dir>/train.log. Results keep spec order.
inline std::vector<PresetRunOutcome> run_training_set(const std::vector<PresetRunSpec>& specs,
                                                      const data::QADataset& ds, int jobs,
                                                      std::ostream* progress = nullptr) {
  std::vector<PresetRunOutcome> outcomes(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        const auto& spec = specs[i];
        std::filesystem::create_directories(spec.config.out_dir);
        std::ofstream log(spec.config.out_dir + "/train.log");
        auto result = train(spec.config, ds, &log);
        const bool masked = mask_family(spec.config.objective);
        PresetRunOutcome out;
        out.name = spec.name;
        out.eval = evaluate_exact_match(result.state, ds, masked);
        out.metrics = std::move(result.metrics);

        std::vector<svg::Series> curves(2);
        curves[0].name = "forward";
        curves[1].name = "backward";
        for (const auto& m : out.metrics) {
          curves[0].points.emplace_back(double(m.step), m.forward_acc);
          curves[1].points.emplace_back(double(m.step), m.backward_acc);
        }
        std::filesystem::create_directories(spec.config.out_dir + "/plots");
        write_file(spec.config.out_dir + "/plots/accuracy.svg",
                   svg::line_chart(curves, spec.name + " exact match", "step", "accuracy %"));
        outcomes[i] = std::move(out);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (size_t i = 0; i < specs.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (progress) {
      *progress << specs[i].name << ": fwd " << format_fixed(outcomes[i].eval.forward_acc, 1)
                << " bwd " << format_fixed(outcomes[i].eval.backward_acc, 1) << "\n";
    }
  }
  return outcomes;
}

namespace detail {

inline std::string two_row_table(const std::string& task_label,
                                 const std::vector<PresetRunOutcome>& runs,
                                 bool with_incorrect = false) {
  std::string md = "| " + task_label + " |";
  for (const auto& r : runs) md += " " + r.name + " |";
  md += "\n|---|";
  for (size_t i = 0; i < runs.size(); ++i) md += "---|";
  md += "\n| Forward |";
  for (const auto& r : runs) md += " " + format_fixed(r.eval.forward_acc, 1) + " |";
  md += "\n| Backward |";
  for (const auto& r : runs) md += " " + format_fixed(r.eval.backward_acc, 1) + " |";
  md += "\n";
  if (with_incorrect) {
    md += "| Incorrect Inference |";
    for (const auto& r : runs) md += " " + format_fixed(r.eval.incorrect_rate, 1) + " |";
    md += "\n";
  }
  return md;
}

inline TrainConfig base_config(const std::string& out_dir, uint64_t seed) {
  TrainConfig c;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.embed_dim = 128;
  c.out_dir = out_dir;
  c.seed = seed;
  return c;
}

}  // namespace detail

/// The mask-rate comparison: one fixed-rate masked run per rate plus one
/// uniform-rate run, identical seeds and budget.
inline std::vector<PresetRunOutcome> mask_rate_sweep(const std::vector<double>& rates,
                                                     TrainConfig base, const data::QADataset& ds,
                                                     int jobs, std::ostream* progress = nullptr) {
  std::vector<PresetRunSpec> specs;
  const std::string root = base.out_dir;
  for (double r : rates) {
    TrainConfig c = base;
    c.objective = Objective::mlm;
    c.mlm_rate = r;
    c.weight_decay = 0.01;
    char name[32];
    std::snprintf(name, sizeof(name), "mlm-%02d", static_cast<int>(r * 100 + 0.5));
    c.out_dir = root + "/" + name;
    specs.push_back({name, c});
  }
  {
    TrainConfig c = base;
    c.objective = Objective::mlmu;
    c.weight_decay = 0.0;
    c.out_dir = root + "/mlmu";
    specs.push_back({"mlmu", c});
  }
  return run_training_set(specs, ds, jobs, progress);
}

struct PresetResult {
  std::string name;
  std::string table_md;
  std::vector<PresetRunOutcome> runs;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"table1_top", "table1_bottom", "table2",
                                                 "fig5",       "fig4a",         "wikireversal_fixture"};
  return names;
}

/// One preset per reproduced table or figure: generate the data, train every
/// objective column, evaluate, and emit a markdown table plus plot data.
inline PresetResult run_preset(const std::string& name, const std::string& out_root,
                               uint64_t seed, int jobs, std::ostream* progress = nullptr,
                               double budget_scale = 1.0) {
  const std::string out = out_root + "/" + name;
  std::filesystem::create_directories(out);
  auto scaled = [&](long steps) {
    return std::max<long>(1, static_cast<long>(steps * budget_scale));
  };

  PresetResult result;
  result.name = name;

  if (name == "table1_top" || name == "fig4a") {
    taskgen::RetrievalOptions data_opt;
    data_opt.seed = Rng(seed).split("data").next_u64();
    auto ds = taskgen::gen_retrieval(data_opt);
    data::save_dataset(ds, out + "/retrieval.jsonl");

    TrainConfig base = detail::base_config(out, seed);
    base.batch_size = 16;
    base.learning_rate = 1e-3;
    base.total_steps = scaled(3000);
    base.eval_interval = std::max<long>(1, base.total_steps / 10);

    if (name == "fig4a") {
      base.total_steps = scaled(3000);
      base.eval_interval = std::max<long>(1, base.total_steps / 5);
      result.runs = mask_rate_sweep({0.15, 0.40, 0.85}, base, ds, jobs, progress);
      result.table_md = detail::two_row_table("Retrieval Task (mask-rate sweep)", result.runs);
      std::vector<svg::BarGroup> groups = {{"forward", {}}, {"backward", {}}};
      std::vector<std::string> names;
      for (const auto& r : result.runs) {
        names.push_back(r.name);
        groups[0].values.push_back(r.eval.forward_acc);
        groups[1].values.push_back(r.eval.backward_acc);
      }
      std::filesystem::create_directories(out + "/plots");
      write_file(out + "/plots/sweep.svg",
                 svg::bar_chart(names, groups, "fixed vs uniform masking rate", "exact match %"));
    } else {
      std::vector<PresetRunSpec> specs;
      for (const auto& [label, obj] :
           std::vector<std::pair<std::string, Objective>>{{"ar", Objective::ar},
                                                          {"ar-rev-token", Objective::ar_rev_token},
                                                          {"mlm", Objective::mlm},
                                                          {"mlmu", Objective::mlmu}}) {
        TrainConfig c = base;
        c.objective = obj;
        c.mlm_rate = 0.15;
        c.weight_decay = mask_family(obj) && obj == Objective::mlmu ? 0.0 : 0.01;
        c.total_steps = obj == Objective::mlmu ? scaled(6000) : base.total_steps;
        c.eval_interval = std::max<long>(1, c.total_steps / 10);
        c.out_dir = out + "/" + label;
        specs.push_back({label, c});
      }
      result.runs = run_training_set(specs, ds, jobs, progress);
      result.table_md = detail::two_row_table("Retrieval Task", result.runs);
    }
  } else if (name == "table1_bottom") {
    taskgen::RelationshipOptions data_opt;
    data_opt.seed = Rng(seed).split("data").next_u64();
    auto ds = taskgen::gen_relationship(data_opt);
    data::save_dataset(ds, out + "/relationship.jsonl");

    TrainConfig base = detail::base_config(out, seed);
    base.batch_size = 16;
    base.learning_rate = 1e-3;

    std::vector<PresetRunSpec> specs;
    for (const auto& [label, obj] : std::vector<std::pair<std::string, Objective>>{
             {"ar-rev-entity", Objective::ar_rev_entity},
             {"ar-rev-entity-delim", Objective::ar_rev_entity_delim},
             {"mlm", Objective::mlm},
             {"mlmu", Objective::mlmu}}) {
      TrainConfig c = base;
      c.objective = obj;
      c.mlm_rate = 0.15;
      c.weight_decay = obj == Objective::mlmu ? 0.0 : 0.01;
      c.total_steps = obj == Objective::mlmu ? scaled(6000) : scaled(3000);
      c.eval_interval = std::max<long>(1, c.total_steps / 10);
      c.out_dir = out + "/" + label;
      specs.push_back({label, c});
    }
    result.runs = run_training_set(specs, ds, jobs, progress);
    result.table_md = detail::two_row_table("Relationship Task", result.runs, true);
  } else if (name == "table2") {
    taskgen::BiosOptions data_opt;
    data_opt.seed = Rng(seed).split("data").next_u64();
    auto ds = taskgen::gen_bios(data_opt);
    data::save_dataset(ds, out + "/bios.jsonl");

    TrainConfig base = detail::base_config(out, seed);
    base.batch_size = 16;
    base.learning_rate = 1e-3;
    base.eval_limit = 100;

    std::vector<PresetRunSpec> specs;
    for (const auto& [label, obj] :
         std::vector<std::pair<std::string, Objective>>{{"ar", Objective::ar},
                                                        {"ar-rev-token", Objective::ar_rev_token},
                                                        {"mlm", Objective::mlm},
                                                        {"mlmu", Objective::mlmu}}) {
      TrainConfig c = base;
      c.objective = obj;
      c.mlm_rate = 0.15;
      c.weight_decay = obj == Objective::mlmu ? 0.0 : 0.01;
      c.total_steps = obj == Objective::mlmu ? scaled(12000) : scaled(4000);
      c.eval_interval = std::max<long>(1, c.total_steps / 12);
      c.out_dir = out + "/" + label;
      specs.push_back({label, c});
    }
    result.runs = run_training_set(specs, ds, jobs, progress);
    result.table_md = detail::two_row_table("Biographies", result.runs);
  } else if (name == "fig5") {
    taskgen::StarGraphOptions data_opt;
    data_opt.seed = Rng(seed).split("data").next_u64();
    auto ds = taskgen::gen_stargraph(data_opt);
    data::save_dataset(ds, out + "/stargraph.jsonl");

    TrainConfig base = detail::base_config(out, seed);
    base.model.n_layers = 4;
    base.batch_size = 16;
    base.learning_rate = 1e-3;
    base.eval_limit = 200;

    std::vector<PresetRunSpec> specs;
    for (const auto& [label, obj] :
         std::vector<std::pair<std::string, Objective>>{{"ar", Objective::ar},
                                                        {"ar-rev-token", Objective::ar_rev_token},
                                                        {"mlmu", Objective::mlmu}}) {
      TrainConfig c = base;
      c.objective = obj;
      c.weight_decay = obj == Objective::mlmu ? 0.0 : 0.01;
      c.total_steps = obj == Objective::mlmu ? scaled(8000) : scaled(4000);
      c.eval_interval = std::max<long>(1, c.total_steps / 10);
      c.out_dir = out + "/" + label;
      specs.push_back({label, c});
    }
    result.runs = run_training_set(specs, ds, jobs, progress);
    std::string md = "| Star Graph |";
    for (const auto& r : result.runs) md += " " + r.name + " |";
    md += "\n|---|";
    for (size_t i = 0; i < result.runs.size(); ++i) md += "---|";
    md += "\n| Accuracy |";
    for (const auto& r : result.runs) md += " " + format_fixed(r.eval.forward_acc, 1) + " |";
    md += "\n";
    result.table_md = md;
  } else if (name == "wikireversal_fixture") {
    kgqa::BuildOptions build_opt;
    build_opt.corpus_path = std::string(FACTORLAB_DATA_DIR) + "/fixtures/wikireversal/corpus.jsonl";
    build_opt.templates_path =
        std::string(FACTORLAB_DATA_DIR) + "/fixtures/wikireversal/templates.txt";
    build_opt.min_count = 3;
    build_opt.split_seed = Rng(seed).split("split").next_u64();
    const auto built = kgqa::build(build_opt);
    data::save_dataset(built.dataset, out + "/wikireversal.jsonl");
    write_file(out + "/stats.tsv", built.stats_text());

    TrainConfig base = detail::base_config(out, seed);
    base.model.n_layers = 2;
    base.model.embed_dim = 64;
    base.model.n_heads = 4;
    base.batch_size = 8;
    base.learning_rate = 1e-3;

    std::vector<PresetRunSpec> specs;
    for (const auto& [label, obj] : std::vector<std::pair<std::string, Objective>>{
             {"ar", Objective::ar}, {"mlmu", Objective::mlmu}}) {
      TrainConfig c = base;
      c.objective = obj;
      c.weight_decay = obj == Objective::mlmu ? 0.0 : 0.01;
      c.total_steps = scaled(600);
      c.eval_interval = std::max<long>(1, c.total_steps / 6);
      c.out_dir = out + "/" + label;
      specs.push_back({label, c});
    }
    result.runs = run_training_set(specs, built.dataset, jobs, progress);
    result.table_md = detail::two_row_table("WikiReversal Fixture", result.runs);
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    fail("unknown preset \"", name, "\"; available:", known);
  }

  write_file(out + "/table.md", result.table_md);
  if (progress) *progress << result.table_md;
  return result;
}

}  // namespace factorlab::harness
