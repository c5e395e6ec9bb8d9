#pragma once

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "factorlab/engine/graph.hpp"
#include "factorlab/model/config.hpp"
#include "factorlab/model/rope.hpp"
#include "factorlab/model/visibility.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::model {

template <typename Real>
struct AttentionParams {
  engine::Tensor<Real> wq, wk, wv, wo;  // each embed_dim x embed_dim
};

template <typename Real>
struct MlpParams {
  engine::Tensor<Real> w1;  // embed_dim x 4*embed_dim
  engine::Tensor<Real> w2;  // 4*embed_dim x embed_dim
};

template <typename Real>
struct EncoderLayer {
  AttentionParams<Real> attn;
  MlpParams<Real> mlp;
};

template <typename Real>
struct DecoderLayer {
  AttentionParams<Real> cross;
  MlpParams<Real> mlp;
  AttentionParams<Real> self;  // present only when decoder_self_attention is on
};

/// All learnable state. The decoder input is one shared learned embedding
/// broadcast to every position; only the rotary positional bias
/// differentiates decoder queries.
template <typename Real>
struct ModelState {
  ModelConfig config;
  engine::Tensor<Real> token_embedding;    // vocab x d
  std::vector<EncoderLayer<Real>> encoder;
  std::vector<DecoderLayer<Real>> decoder;
  engine::Tensor<Real> query_embedding;    // 1 x d
  engine::Tensor<Real> output_projection;  // d x vocab

  std::vector<std::pair<std::string, engine::Tensor<Real>*>> named_parameters() {
    std::vector<std::pair<std::string, engine::Tensor<Real>*>> out;
    out.emplace_back("token_embedding", &token_embedding);
    for (size_t l = 0; l < encoder.size(); ++l) {
      const std::string p = "encoder." + std::to_string(l) + ".";
      out.emplace_back(p + "attn.wq", &encoder[l].attn.wq);
      out.emplace_back(p + "attn.wk", &encoder[l].attn.wk);
      out.emplace_back(p + "attn.wv", &encoder[l].attn.wv);
      out.emplace_back(p + "attn.wo", &encoder[l].attn.wo);
      out.emplace_back(p + "mlp.w1", &encoder[l].mlp.w1);
      out.emplace_back(p + "mlp.w2", &encoder[l].mlp.w2);
    }
    for (size_t l = 0; l < decoder.size(); ++l) {
      const std::string p = "decoder." + std::to_string(l) + ".";
      out.emplace_back(p + "cross.wq", &decoder[l].cross.wq);
      out.emplace_back(p + "cross.wk", &decoder[l].cross.wk);
      out.emplace_back(p + "cross.wv", &decoder[l].cross.wv);
      out.emplace_back(p + "cross.wo", &decoder[l].cross.wo);
      if (config.decoder_self_attention) {
        out.emplace_back(p + "self.wq", &decoder[l].self.wq);
        out.emplace_back(p + "self.wk", &decoder[l].self.wk);
        out.emplace_back(p + "self.wv", &decoder[l].self.wv);
        out.emplace_back(p + "self.wo", &decoder[l].self.wo);
      }
      out.emplace_back(p + "mlp.w1", &decoder[l].mlp.w1);
      out.emplace_back(p + "mlp.w2", &decoder[l].mlp.w2);
    }
    out.emplace_back("query_embedding", &query_embedding);
    out.emplace_back("output_projection", &output_projection);
    return out;
  }

  std::vector<engine::Tensor<Real>*> parameters() {
    std::vector<engine::Tensor<Real>*> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  int64_t num_parameters() {
    int64_t n = 0;
    for (auto* t : parameters()) n += t->numel();
    return n;
  }
};

/// Truncated-normal(0.02) everywhere except the zero output projection, so a
/// fresh model emits exactly uniform logits.
template <typename Real>
ModelState<Real> init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  const int d = config.embed_dim;
  ModelState<Real> s;
  s.config = config;
  s.token_embedding = engine::Tensor<Real>::zeros({config.vocab_size, d}, true);
  s.query_embedding = engine::Tensor<Real>::zeros({1, d}, true);
  s.output_projection = engine::Tensor<Real>::zeros({d, config.vocab_size}, true);
  auto make_attn = [&] {
    AttentionParams<Real> a;
    a.wq = engine::Tensor<Real>::zeros({d, d}, true);
    a.wk = engine::Tensor<Real>::zeros({d, d}, true);
    a.wv = engine::Tensor<Real>::zeros({d, d}, true);
    a.wo = engine::Tensor<Real>::zeros({d, d}, true);
    return a;
  };
  auto make_mlp = [&] {
    MlpParams<Real> m;
    m.w1 = engine::Tensor<Real>::zeros({d, 4 * d}, true);
    m.w2 = engine::Tensor<Real>::zeros({4 * d, d}, true);
    return m;
  };
  for (int l = 0; l < config.n_layers; ++l) {
    s.encoder.push_back(EncoderLayer<Real>{make_attn(), make_mlp()});
    DecoderLayer<Real> dl{make_attn(), make_mlp(), {}};
    if (config.decoder_self_attention) dl.self = make_attn();
    s.decoder.push_back(std::move(dl));
  }

  Rng rng = Rng(seed).split("init_params");
  for (auto& [name, t] : s.named_parameters()) {
    if (name == "output_projection") continue;  // stays zero
    for (Real& v : t->values) v = static_cast<Real>(rng.next_trunc_normal(0.02));
  }
  return s;
}

namespace detail {

/// Flattened P x D visibility used inside attention.
struct AttentionRows {
  int n_queries = 0;
  int n_keys = 0;
  std::vector<uint8_t> blocked;   // true where attention must NOT happen
  std::vector<uint8_t> row_gate;  // 0 everywhere in rows with no visible key, else 1
};

inline AttentionRows rows_from_mask(const VisibilityMask& mask, const std::vector<int>& queries) {
  AttentionRows r;
  r.n_queries = static_cast<int>(queries.size());
  r.n_keys = mask.size();
  r.blocked.resize(static_cast<size_t>(r.n_queries) * r.n_keys);
  r.row_gate.resize(r.blocked.size());
  for (int i = 0; i < r.n_queries; ++i) {
    bool any = false;
    for (int k = 0; k < r.n_keys; ++k) {
      const bool vis = mask.at(queries[static_cast<size_t>(i)], k);
      r.blocked[static_cast<size_t>(i) * r.n_keys + k] = vis ? 0 : 1;
      any = any || vis;
    }
    for (int k = 0; k < r.n_keys; ++k) {
      r.row_gate[static_cast<size_t>(i) * r.n_keys + k] = any ? 1 : 0;
    }
  }
  return r;
}

inline AttentionRows rows_between(const VisibilityMask& mask, const std::vector<int>& queries,
                                  const std::vector<int>& keys) {
  AttentionRows r;
  r.n_queries = static_cast<int>(queries.size());
  r.n_keys = static_cast<int>(keys.size());
  r.blocked.resize(static_cast<size_t>(r.n_queries) * r.n_keys);
  r.row_gate.resize(r.blocked.size());
  for (int i = 0; i < r.n_queries; ++i) {
    bool any = false;
    for (int k = 0; k < r.n_keys; ++k) {
      const bool vis = mask.at(queries[static_cast<size_t>(i)], keys[static_cast<size_t>(k)]);
      r.blocked[static_cast<size_t>(i) * r.n_keys + k] = vis ? 0 : 1;
      any = any || vis;
    }
    for (int k = 0; k < r.n_keys; ++k) {
      r.row_gate[static_cast<size_t>(i) * r.n_keys + k] = any ? 1 : 0;
    }
  }
  return r;
}

/// Multi-head attention with rotary bias on queries and keys. Rows with no
/// visible key produce an exactly-zero context vector, so a fully blocked
/// query carries no information from the key stream at all.
template <typename Real>
engine::Tensor<Real>* attention(engine::Graph<Real>& g, AttentionParams<Real>& p, int n_heads, engine::Tensor<Real>* queries_in,
                                engine::Tensor<Real>* keys_in,
                                const std::vector<int>& q_positions,
                                const std::vector<int>& k_positions, const AttentionRows& rows) {
  const int d = queries_in->shape[1];
  const int hd = d / n_heads;
  auto* q_all = g.matmul(queries_in, &p.wq);
  auto* k_all = g.matmul(keys_in, &p.wk);
  auto* v_all = g.matmul(keys_in, &p.wv);

  auto gate = engine::Tensor<Real>::zeros({rows.n_queries, rows.n_keys});
  for (size_t i = 0; i < rows.row_gate.size(); ++i) {
    gate.values[i] = static_cast<Real>(rows.row_gate[i]);
  }
  auto* gate_c = g.constant(std::move(gate));

  std::vector<engine::Tensor<Real>*> contexts;
  contexts.reserve(static_cast<size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    auto* qh = apply_rope(g, g.slice_cols(q_all, h * hd, (h + 1) * hd), q_positions);
    auto* kh = apply_rope(g, g.slice_cols(k_all, h * hd, (h + 1) * hd), k_positions);
    auto* vh = g.slice_cols(v_all, h * hd, (h + 1) * hd);
    auto* scores = g.scale(g.matmul(qh, g.transpose(kh)), 1.0 / std::sqrt(double(hd)));
    auto* filled = g.masked_fill(scores, rows.blocked, -1e30);
    auto* weights = g.mul(g.softmax_last(filled), gate_c);
    contexts.push_back(g.matmul(weights, vh));
  }
  return g.matmul(g.concat_cols(contexts), &p.wo);
}

template <typename Real>
engine::Tensor<Real>* mlp_block(engine::Graph<Real>& g, MlpParams<Real>& p,
                                engine::Tensor<Real>* x) {
  return g.matmul(g.gelu(g.matmul(x, &p.w1)), &p.w2);
}

}  // namespace detail

/// Run the encoder over input_ids under the visibility mask. Returns the
/// output of every layer; decoder layer l cross-attends into layer l's
/// output. positions defaults to 0..D-1 (overridable for equivariance tests).
template <typename Real>
std::vector<engine::Tensor<Real>*> encode(engine::Graph<Real>& g, ModelState<Real>& state,
                                          const std::vector<int>& input_ids,
                                          const VisibilityMask& mask,
                                          const std::vector<int>* positions_override = nullptr) {
  const int d_len = static_cast<int>(input_ids.size());
  require(d_len > 0, "encode: empty input");
  if (d_len > state.config.max_seq_len) {
    fail("encode: sequence length ", d_len, " exceeds max_seq_len ", state.config.max_seq_len);
  }
  require(mask.size() == d_len, "encode: mask size does not match sequence length");
  for (int id : input_ids) {
    if (id < 0 || id >= state.config.vocab_size) {
      fail("encode: token id ", id, " outside vocab of size ", state.config.vocab_size);
    }
  }
  std::vector<int> positions;
  if (positions_override) {
    positions = *positions_override;
    require(static_cast<int>(positions.size()) == d_len, "encode: positions size mismatch");
  } else {
    positions.resize(static_cast<size_t>(d_len));
    std::iota(positions.begin(), positions.end(), 0);
  }
  std::vector<int> all_rows(static_cast<size_t>(d_len));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  const auto rows = detail::rows_from_mask(mask, all_rows);

  auto* x = g.embedding_gather(&state.token_embedding, input_ids);
  std::vector<engine::Tensor<Real>*> outputs;
  outputs.reserve(state.encoder.size());
  for (auto& layer : state.encoder) {
    auto* h = g.rmsnorm(x);
    x = g.add(x, detail::attention(g, layer.attn, state.config.n_heads, h, h, positions,
                                   positions, rows));
    x = g.add(x, detail::mlp_block(g, layer.mlp, g.rmsnorm(x)));
    outputs.push_back(x);
  }
  return outputs;
}

/// Decode vocab logits at predict_positions. The decoder stream starts from
/// the shared query embedding at every position; each block cross-attends
/// into the same-indexed encoder layer under the mask. A prediction at q
/// must not see the input at q: mask.at(q, q) has to be false.
template <typename Real>
engine::Tensor<Real>* decode(engine::Graph<Real>& g, ModelState<Real>& state,
                             const std::vector<engine::Tensor<Real>*>& encoder_layers,
                             const VisibilityMask& mask,
                             const std::vector<int>& predict_positions) {
  require(!predict_positions.empty(), "decode: predict_positions is empty");
  require(encoder_layers.size() == state.decoder.size(),
          "decode: encoder layer count does not match decoder depth");
  const int d_len = mask.size();
  for (int q : predict_positions) {
    require(q >= 0 && q < d_len, "decode: predict position out of range");
    if (mask.at(q, q)) {
      fail("decode: contract violation, mask allows position ", q, " to see its own input");
    }
  }
  const int n_pred = static_cast<int>(predict_positions.size());
  std::vector<int> key_positions(static_cast<size_t>(d_len));
  std::iota(key_positions.begin(), key_positions.end(), 0);
  const auto cross_rows = detail::rows_from_mask(mask, predict_positions);
  detail::AttentionRows self_rows;
  if (state.config.decoder_self_attention) {
    self_rows = detail::rows_between(mask, predict_positions, predict_positions);
  }

  auto* ones = g.constant(engine::Tensor<Real>::full({n_pred, 1}, Real(1)));
  auto* y = g.matmul(ones, &state.query_embedding);
  for (size_t l = 0; l < state.decoder.size(); ++l) {
    auto& layer = state.decoder[l];
    if (state.config.decoder_self_attention) {
      auto* h = g.rmsnorm(y);
      y = g.add(y, detail::attention(g, layer.self, state.config.n_heads, h, h,
                                     predict_positions, predict_positions, self_rows));
    }
    auto* enc_n = g.rmsnorm(encoder_layers[l]);
    y = g.add(y, detail::attention(g, layer.cross, state.config.n_heads, g.rmsnorm(y), enc_n,
                                   predict_positions, key_positions, cross_rows));
    y = g.add(y, detail::mlp_block(g, layer.mlp, g.rmsnorm(y)));
  }
  return g.matmul(g.rmsnorm(y), &state.output_projection);
}

/// encode + decode in one call.
template <typename Real>
engine::Tensor<Real>* forward_logits(engine::Graph<Real>& g, ModelState<Real>& state,
                                     const std::vector<int>& input_ids,
                                     const VisibilityMask& mask,
                                     const std::vector<int>& predict_positions) {
  auto layers = encode(g, state, input_ids, mask);
  return decode(g, state, layers, mask, predict_positions);
}

}  // namespace factorlab::model
