#pragma once

#include <string>
#include <utility>
#include <vector>

#include "factorlab/taskgen/retrieval.hpp"

namespace factorlab::taskgen {

struct StarGraphOptions {
  int n_samples = 5000;
  int arms = 2;
  int arm_len = 4;  // nodes per arm, excluding the start node
  int n_nodes = 20;
  double query_train_fraction = 0.8;
  uint64_t seed = 1;
};

/// One sampled star: `arms` disjoint simple paths radiating from a start
/// node, a shuffled edge list, and the unique walk from start to the queried
/// end node.
struct StarGraphInstance {
  std::vector<std::pair<int, int>> edges;  // oriented outward, shuffled
  int start = 0;
  int end = 0;
  std::vector<int> gold_path;  // start ... end

  void validate(int arms) const {
    require(!gold_path.empty() && gold_path.front() == start && gold_path.back() == end,
            "StarGraphInstance: gold path endpoints do not match the query");
    for (size_t i = 0; i + 1 < gold_path.size(); ++i) {
      bool found = false;
      for (const auto& [a, b] : edges) {
        found = found || (a == gold_path[i] && b == gold_path[i + 1]);
      }
      require(found, "StarGraphInstance: gold path uses a missing edge");
    }
    int out_degree = 0;
    for (const auto& [a, b] : edges) out_degree += (a == start) ? 1 : 0;
    require(out_degree == arms, "StarGraphInstance: start node degree does not equal arms");
  }
};

inline StarGraphInstance sample_star(const StarGraphOptions& opt, Rng& rng) {
  const int nodes_needed = opt.arms * opt.arm_len + 1;
  const auto picks = rng.sample_distinct(opt.n_nodes, nodes_needed);

  StarGraphInstance inst;
  inst.start = picks[0];
  std::vector<std::vector<int>> arm_nodes(static_cast<size_t>(opt.arms));
  int cursor = 1;
  for (int a = 0; a < opt.arms; ++a) {
    int prev = inst.start;
    for (int i = 0; i < opt.arm_len; ++i) {
      const int node = picks[static_cast<size_t>(cursor++)];
      arm_nodes[static_cast<size_t>(a)].push_back(node);
      inst.edges.emplace_back(prev, node);
      prev = node;
    }
  }
  rng.shuffle(inst.edges);

  const int target_arm = rng.next_below(opt.arms);
  inst.end = arm_nodes[static_cast<size_t>(target_arm)].back();
  inst.gold_path.push_back(inst.start);
  for (int node : arm_nodes[static_cast<size_t>(target_arm)]) inst.gold_path.push_back(node);
  return inst;
}

/// Render "a,b|c,d|.../start,end=path" as one token per node id or separator.
inline data::TokenSequence serialize_star(const StarGraphInstance& inst, data::Vocab& vocab,
                                          data::Split split) {
  data::TokenSequence s;
  s.kind = data::RecordKind::qa;
  s.direction = data::Direction::forward;
  s.split = split;
  auto node = [&](int n) { return vocab.add(std::to_string(n)); };
  s.tokens.push_back(data::Vocab::kBos);
  for (size_t i = 0; i < inst.edges.size(); ++i) {
    if (i) s.tokens.push_back(vocab.add("|"));
    s.tokens.push_back(node(inst.edges[i].first));
    s.tokens.push_back(vocab.add(","));
    s.tokens.push_back(node(inst.edges[i].second));
  }
  s.tokens.push_back(vocab.add("/"));
  s.tokens.push_back(node(inst.start));
  s.tokens.push_back(vocab.add(","));
  s.tokens.push_back(node(inst.end));
  s.tokens.push_back(vocab.add("="));
  s.answer_start = static_cast<int>(s.tokens.size());
  for (size_t i = 0; i < inst.gold_path.size(); ++i) {
    if (i) s.tokens.push_back(vocab.add(","));
    s.tokens.push_back(node(inst.gold_path[i]));
  }
  s.tokens.push_back(data::Vocab::kEos);
  return s;
}

/// Path-planning benchmark over sampled stars. Every record is a qa record;
/// the prompt ends at "=" and the answer is the comma-separated gold path.
inline data::QADataset gen_stargraph(const StarGraphOptions& opt) {
  require(opt.arms >= 2, "gen_stargraph: need at least 2 arms");
  require(opt.arm_len >= 1, "gen_stargraph: arm_len must be positive");
  if (opt.n_nodes < opt.arms * opt.arm_len + 1) {
    fail("gen_stargraph: infeasible, ", opt.arms, " arms of length ", opt.arm_len, " need at least ",
         opt.arms * opt.arm_len + 1, " nodes but only ", opt.n_nodes, " available");
  }

  data::QADataset ds;
  for (int n = 0; n < opt.n_nodes; ++n) ds.vocab.add(std::to_string(n));
  for (const char* s : {",", "|", "/", "="}) ds.vocab.add(s);

  Rng rng(opt.seed);
  const auto split = detail::split_assignment(opt.n_samples, opt.query_train_fraction,
                                              rng.split("query_split"));
  Rng sample_rng = rng.split("samples");
  for (int i = 0; i < opt.n_samples; ++i) {
    auto inst = sample_star(opt, sample_rng);
    inst.validate(opt.arms);
    ds.records.push_back(serialize_star(inst, ds.vocab, split[static_cast<size_t>(i)]));
  }
  ds.validate();
  return ds;
}

}  // namespace factorlab::taskgen
