#pragma once

#include <string>
#include <vector>

#include "factorlab/taskgen/retrieval.hpp"

namespace factorlab::taskgen {

struct RelationshipOptions {
  int n_triples = 500;
  int entity_len = 2;
  double query_train_fraction = 0.8;
  uint64_t seed = 1;
};

/// Non-reciprocal three-entity statements "A => B => C". Forward queries ask
/// what B points to (gold C), backward queries ask what points to B (gold
/// A). Each query record carries the mirrored entity so evaluation can score
/// the incorrect-inference rate of symmetry-assuming models.
inline data::QADataset gen_relationship(const RelationshipOptions& opt) {
  require(opt.n_triples > 0 && opt.entity_len > 0, "gen_relationship: sizes must be positive");

  data::QADataset ds;
  ds.vocab.add(":");
  const int arrow = ds.vocab.add("=>");

  Rng rng(opt.seed);
  const auto split = detail::split_assignment(opt.n_triples, opt.query_train_fraction,
                                              rng.split("query_split"));

  std::vector<data::TokenSequence> statements, queries;
  int next_token = 0;
  auto fresh_entity = [&] {
    std::vector<int> e;
    for (int i = 0; i < opt.entity_len; ++i) {
      e.push_back(ds.vocab.add("e" + std::to_string(next_token++)));
    }
    return e;
  };

  for (int n = 0; n < opt.n_triples; ++n) {
    const auto a = fresh_entity();
    const auto b = fresh_entity();
    const auto c = fresh_entity();

    data::TokenSequence st;
    st.kind = data::RecordKind::statement;
    st.split = data::Split::train;
    st.tokens.push_back(data::Vocab::kBos);
    auto push_entity = [&](const std::vector<int>& e) {
      const int start = static_cast<int>(st.tokens.size());
      for (int t : e) st.tokens.push_back(t);
      st.spans.push_back(
          data::EntitySpan{start, static_cast<int>(st.tokens.size()), data::SpanKind::entity});
    };
    auto push_arrow = [&] {
      const int start = static_cast<int>(st.tokens.size());
      st.tokens.push_back(arrow);
      st.spans.push_back(data::EntitySpan{start, start + 1, data::SpanKind::delimiter});
    };
    push_entity(a);
    push_arrow();
    push_entity(b);
    push_arrow();
    push_entity(c);
    st.tokens.push_back(data::Vocab::kEos);
    statements.push_back(std::move(st));

    auto fq = detail::make_query(ds.vocab, true, b, c, split[static_cast<size_t>(n)]);
    fq.mirror_answer = a;
    queries.push_back(std::move(fq));
    auto bq = detail::make_query(ds.vocab, false, b, a, split[static_cast<size_t>(n)]);
    bq.mirror_answer = c;
    queries.push_back(std::move(bq));
  }
  for (auto& s : statements) ds.records.push_back(std::move(s));
  for (auto& q : queries) ds.records.push_back(std::move(q));
  ds.validate();
  return ds;
}

}  // namespace factorlab::taskgen
