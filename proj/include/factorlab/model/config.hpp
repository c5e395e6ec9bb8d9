#pragma once

#include "factorlab/common.hpp"

namespace factorlab::model {

struct ModelConfig {
  int vocab_size = 0;
  int n_layers = 2;
  int n_heads = 4;
  int embed_dim = 128;
  int max_seq_len = 64;
  bool decoder_self_attention = false;

  int head_dim() const { return embed_dim / n_heads; }

  void validate() const {
    require(vocab_size > 0, "ModelConfig: vocab_size must be positive");
    require(n_layers > 0, "ModelConfig: n_layers must be positive");
    require(n_heads > 0, "ModelConfig: n_heads must be positive");
    require(max_seq_len > 0, "ModelConfig: max_seq_len must be positive");
    if (embed_dim <= 0 || embed_dim % n_heads != 0) {
      fail("ModelConfig: embed_dim (", embed_dim, ") must be a positive multiple of n_heads (",
           n_heads, ")");
    }
    if (head_dim() % 2 != 0) {
      fail("ModelConfig: head dimension ", head_dim(), " must be even for rotary embedding");
    }
  }
};

}  // namespace factorlab::model
