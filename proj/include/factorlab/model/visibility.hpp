#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab::model {

/// Square boolean attention mask. at(q, k) == true means query position q
/// may attend to key position k. Shared by encoder self-attention and
/// decoder cross-attention, which is what makes one matrix per plan enough.
class VisibilityMask {
 public:
  VisibilityMask() = default;
  explicit VisibilityMask(int size) : size_(size), allowed_(static_cast<size_t>(size) * size, 0) {
    require(size > 0, "VisibilityMask: size must be positive");
  }

  static VisibilityMask none(int size) { return VisibilityMask(size); }

  /// Strictly causal: q sees k iff k < q. Position 0 sees nothing.
  static VisibilityMask strict_causal(int size) {
    VisibilityMask m(size);
    for (int q = 0; q < size; ++q) {
      for (int k = 0; k < q; ++k) m.set(q, k, true);
    }
    return m;
  }

  /// Everything visible except self.
  static VisibilityMask full_except_self(int size) {
    VisibilityMask m(size);
    for (int q = 0; q < size; ++q) {
      for (int k = 0; k < size; ++k) m.set(q, k, q != k);
    }
    return m;
  }

  int size() const { return size_; }

  bool at(int q, int k) const { return allowed_[static_cast<size_t>(q) * size_ + k] != 0; }

  void set(int q, int k, bool v) { allowed_[static_cast<size_t>(q) * size_ + k] = v ? 1 : 0; }

  void clear_column(int k) {
    for (int q = 0; q < size_; ++q) set(q, k, false);
  }

  bool row_empty(int q) const {
    for (int k = 0; k < size_; ++k) {
      if (at(q, k)) return false;
    }
    return true;
  }

  /// Text rendering for golden tests: '#' visible, '.' blocked.
  std::string to_text() const {
    std::string s;
    s.reserve(static_cast<size_t>(size_) * (size_ + 1));
    for (int q = 0; q < size_; ++q) {
      for (int k = 0; k < size_; ++k) s += at(q, k) ? '#' : '.';
      s += '\n';
    }
    return s;
  }

  bool operator==(const VisibilityMask& o) const {
    return size_ == o.size_ && allowed_ == o.allowed_;
  }

 private:
  int size_ = 0;
  std::vector<uint8_t> allowed_;
};

}  // namespace factorlab::model
