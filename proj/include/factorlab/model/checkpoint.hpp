#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "factorlab/model/transformer.hpp"

namespace factorlab::model {

/// Checkpoint layout: one version byte, a little-endian uint32 header
/// length, a "key: value" text header (config plus extra fields), then raw
/// little-endian parameter arrays in named_parameters order.
inline constexpr uint8_t kCheckpointVersion = 1;

template <typename Real>
void save_checkpoint(const std::string& path, ModelState<Real>& state,
                     const std::map<std::string, std::string>& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), cat("save_checkpoint: cannot open ", path));

  std::string header;
  const auto& c = state.config;
  header += "vocab_size: " + std::to_string(c.vocab_size) + "\n";
  header += "n_layers: " + std::to_string(c.n_layers) + "\n";
  header += "n_heads: " + std::to_string(c.n_heads) + "\n";
  header += "embed_dim: " + std::to_string(c.embed_dim) + "\n";
  header += "max_seq_len: " + std::to_string(c.max_seq_len) + "\n";
  header += cat("decoder_self_attention: ", c.decoder_self_attention ? "true" : "false", "\n");
  header += cat("precision: f", sizeof(Real) * 8, "\n");
  for (const auto& [k, v] : extra) header += k + ": " + v + "\n";

  out.put(static_cast<char>(kCheckpointVersion));
  const uint32_t len = static_cast<uint32_t>(header.size());
  char lenb[4] = {static_cast<char>(len & 0xFF), static_cast<char>((len >> 8) & 0xFF),
                  static_cast<char>((len >> 16) & 0xFF), static_cast<char>((len >> 24) & 0xFF)};
  out.write(lenb, 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (auto& [name, t] : state.named_parameters()) {
    out.write(reinterpret_cast<const char*>(t->values.data()),
              static_cast<std::streamsize>(t->values.size() * sizeof(Real)));
  }
  require(out.good(), cat("save_checkpoint: write failed for ", path));
}

struct LoadedHeader {
  std::map<std::string, std::string> fields;
  std::string get(const std::string& key) const {
    auto it = fields.find(key);
    require(it != fields.end(), cat("checkpoint header missing field: ", key));
    return it->second;
  }
};

template <typename Real>
std::pair<ModelState<Real>, LoadedHeader> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), cat("load_checkpoint: cannot open ", path));
  const int version = in.get();
  require(version == kCheckpointVersion,
          cat("load_checkpoint: unsupported version ", version, " in ", path));
  unsigned char lenb[4];
  in.read(reinterpret_cast<char*>(lenb), 4);
  const uint32_t len = static_cast<uint32_t>(lenb[0]) | (static_cast<uint32_t>(lenb[1]) << 8) |
                       (static_cast<uint32_t>(lenb[2]) << 16) |
                       (static_cast<uint32_t>(lenb[3]) << 24);
  std::string header(len, '\0');
  in.read(header.data(), len);
  require(in.good(), cat("load_checkpoint: truncated header in ", path));

  LoadedHeader h;
  size_t pos = 0;
  while (pos < header.size()) {
    const size_t nl = header.find('\n', pos);
    const std::string line = header.substr(pos, nl - pos);
    pos = (nl == std::string::npos) ? header.size() : nl + 1;
    const size_t colon = line.find(": ");
    if (colon != std::string::npos) h.fields[line.substr(0, colon)] = line.substr(colon + 2);
  }

  ModelConfig cfg;
  cfg.vocab_size = std::stoi(h.get("vocab_size"));
  cfg.n_layers = std::stoi(h.get("n_layers"));
  cfg.n_heads = std::stoi(h.get("n_heads"));
  cfg.embed_dim = std::stoi(h.get("embed_dim"));
  cfg.max_seq_len = std::stoi(h.get("max_seq_len"));
  cfg.decoder_self_attention = h.get("decoder_self_attention") == "true";
  require(h.get("precision") == cat("f", sizeof(Real) * 8),
          cat("load_checkpoint: precision mismatch, file has ", h.get("precision")));

  ModelState<Real> state = init_params<Real>(cfg, 0);
  for (auto& [name, t] : state.named_parameters()) {
    in.read(reinterpret_cast<char*>(t->values.data()),
            static_cast<std::streamsize>(t->values.size() * sizeof(Real)));
  }
  require(in.good(), cat("load_checkpoint: truncated parameter data in ", path));
  return {std::move(state), std::move(h)};
}

}  // namespace factorlab::model
