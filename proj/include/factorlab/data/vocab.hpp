#pragma once

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab::data {

/// Token string <-> id table. A fixed reserved block leads every vocabulary:
/// control tokens that never participate in masking or prediction, plus the
/// end-of-sequence token, which IS a valid prediction target (generation
/// stops when the model emits it, so the model must be able to learn it).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kMask = 3;
  static constexpr int kFwd = 4;
  static constexpr int kBwd = 5;
  static constexpr int kRevOpen = 6;
  static constexpr int kRevClose = 7;
  static constexpr int kUnk = 8;
  static constexpr int kNumReserved = 9;

  Vocab() {
    for (const char* s : {"<pad>", "<bos>", "<eos>", "<mask>", "<fwd>", "<bwd>", "<rev>",
                          "</rev>", "<unk>"}) {
      add(s);
    }
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
  }

  /// Id of a known token; throws if absent.
  int id(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) fail("Vocab: unknown token \"", token, "\"");
    return it->second;
  }

  int id_or_unk(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  const std::string& token(int id) const {
    require(id >= 0 && id < size(), cat("Vocab: id ", id, " out of range"));
    return tokens_[static_cast<size_t>(id)];
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  /// Reserved control tokens are never masked and never predicted. <eos> is
  /// the one reserved id that still counts as predictable content.
  bool maskable(int id) const { return id == kEos || id >= kNumReserved; }

  std::string render(const std::vector<int>& ids, bool skip_specials = false) const {
    std::string out;
    for (int id : ids) {
      if (skip_specials && id < kNumReserved && id != kEos) continue;
      if (!out.empty()) out += ' ';
      out += token(id);
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), cat("Vocab::save: cannot open ", path));
    for (const auto& t : tokens_) out << t << '\n';
    require(out.good(), cat("Vocab::save: write failed for ", path));
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), cat("Vocab::load: cannot open ", path));
    Vocab v;
    std::string line;
    int i = 0;
    while (std::getline(in, line)) {
      if (i < kNumReserved) {
        require(line == v.tokens_[static_cast<size_t>(i)],
                cat("Vocab::load: reserved token mismatch at id ", i, " in ", path));
      } else {
        v.add(line);
      }
      ++i;
    }
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace factorlab::data
