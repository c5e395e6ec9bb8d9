#pragma once

#include <string>
#include <vector>

#include "factorlab/data/dataset.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::taskgen {

struct RetrievalOptions {
  int n_pairs = 500;
  int key_len = 2;
  int val_len = 2;
  double query_train_fraction = 0.8;
  uint64_t seed = 1;
  int vocab_budget = 0;  // 0 = unbounded; otherwise cap on total vocab size
};

namespace detail {

/// Shared train/eval assignment: one seeded shuffle of item indices, the
/// same eval items for both query directions.
inline std::vector<data::Split> split_assignment(int n_items, double train_fraction, Rng rng) {
  require(train_fraction > 0.0 && train_fraction <= 1.0,
          "split_assignment: train fraction must be in (0,1]");
  std::vector<int> order(static_cast<size_t>(n_items));
  for (int i = 0; i < n_items; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  const int n_train = static_cast<int>(std::llround(train_fraction * n_items));
  std::vector<data::Split> split(static_cast<size_t>(n_items), data::Split::train);
  for (int i = n_train; i < n_items; ++i) {
    split[static_cast<size_t>(order[static_cast<size_t>(i)])] = data::Split::eval;
  }
  return split;
}

inline data::TokenSequence make_query(const data::Vocab& vocab, bool forward,
                                      const std::vector<int>& given,
                                      const std::vector<int>& answer, data::Split split) {
  data::TokenSequence q;
  q.kind = data::RecordKind::qa;
  q.direction = forward ? data::Direction::forward : data::Direction::backward;
  q.split = split;
  q.tokens.push_back(data::Vocab::kBos);
  q.tokens.push_back(forward ? data::Vocab::kFwd : data::Vocab::kBwd);
  q.spans.push_back(data::EntitySpan{1, 2, data::SpanKind::delimiter});
  const int given_start = static_cast<int>(q.tokens.size());
  for (int t : given) q.tokens.push_back(t);
  q.spans.push_back(
      data::EntitySpan{given_start, static_cast<int>(q.tokens.size()), data::SpanKind::entity});
  const int colon = vocab.id(":");
  q.spans.push_back(data::EntitySpan{static_cast<int>(q.tokens.size()),
                                     static_cast<int>(q.tokens.size()) + 1,
                                     data::SpanKind::delimiter});
  q.tokens.push_back(colon);
  q.answer_start = static_cast<int>(q.tokens.size());
  for (int t : answer) q.tokens.push_back(t);
  q.spans.push_back(
      data::EntitySpan{q.answer_start, static_cast<int>(q.tokens.size()), data::SpanKind::entity});
  q.tokens.push_back(data::Vocab::kEos);
  return q;
}

}  // namespace detail

/// Key-value retrieval: every pair is stated once, each direction is queried,
/// and a shared split holds the same pairs out of both query directions.
/// Every key/value token is globally unique across the dataset.
inline data::QADataset gen_retrieval(const RetrievalOptions& opt) {
  require(opt.n_pairs > 0 && opt.key_len > 0 && opt.val_len > 0,
          "gen_retrieval: sizes must be positive");
  const int tokens_needed =
      data::Vocab::kNumReserved + 1 + opt.n_pairs * (opt.key_len + opt.val_len);
  if (opt.vocab_budget > 0 && tokens_needed > opt.vocab_budget) {
    fail("gen_retrieval: vocabulary too small for unique tokens, need ", tokens_needed,
         " ids but budget is ", opt.vocab_budget);
  }

  data::QADataset ds;
  const int colon = ds.vocab.add(":");
  (void)colon;

  Rng rng(opt.seed);
  const auto split = detail::split_assignment(opt.n_pairs, opt.query_train_fraction,
                                              rng.split("query_split"));

  std::vector<data::TokenSequence> statements, queries;
  int next_token = 0;
  for (int p = 0; p < opt.n_pairs; ++p) {
    std::vector<int> key, value;
    for (int i = 0; i < opt.key_len; ++i) key.push_back(ds.vocab.add("t" + std::to_string(next_token++)));
    for (int i = 0; i < opt.val_len; ++i) value.push_back(ds.vocab.add("t" + std::to_string(next_token++)));

    data::TokenSequence st;
    st.kind = data::RecordKind::statement;
    st.split = data::Split::train;
    st.tokens.push_back(data::Vocab::kBos);
    for (int t : key) st.tokens.push_back(t);
    st.spans.push_back(data::EntitySpan{1, 1 + opt.key_len, data::SpanKind::key});
    st.spans.push_back(
        data::EntitySpan{1 + opt.key_len, 2 + opt.key_len, data::SpanKind::delimiter});
    st.tokens.push_back(ds.vocab.id(":"));
    for (int t : value) st.tokens.push_back(t);
    st.spans.push_back(data::EntitySpan{2 + opt.key_len, 2 + opt.key_len + opt.val_len,
                                        data::SpanKind::value});
    st.tokens.push_back(data::Vocab::kEos);
    statements.push_back(std::move(st));

    queries.push_back(detail::make_query(ds.vocab, true, key, value, split[static_cast<size_t>(p)]));
    queries.push_back(detail::make_query(ds.vocab, false, value, key, split[static_cast<size_t>(p)]));
  }
  for (auto& s : statements) ds.records.push_back(std::move(s));
  for (auto& q : queries) ds.records.push_back(std::move(q));
  ds.validate();
  return ds;
}

}  // namespace factorlab::taskgen
