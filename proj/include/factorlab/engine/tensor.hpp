#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab::engine {

/// Dense row-major tensor. Rank 1 or 2 covers everything this library does.
/// grad stays empty until backward touches the tensor.
template <typename Real>
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> values;
  bool requires_grad = false;
  std::vector<Real> grad;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<Real> v, bool rg = false)
      : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
    require(static_cast<int64_t>(values.size()) == numel_of(shape),
            "Tensor: values length does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      require(d > 0, "Tensor: dimensions must be positive");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s, bool rg = false) {
    const int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<Real>(static_cast<size_t>(n), Real(0)), rg);
  }

  static Tensor full(std::vector<int> s, Real fill, bool rg = false) {
    const int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<Real>(static_cast<size_t>(n), fill), rg);
  }

  static Tensor scalar(Real v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(values.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 1 : shape.back(); }

  Real& at(int r, int c) { return values[static_cast<size_t>(r) * cols() + c]; }
  Real at(int r, int c) const { return values[static_cast<size_t>(r) * cols() + c]; }

  Real item() const {
    require(numel() == 1, "Tensor::item: tensor is not scalar");
    return values[0];
  }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), Real(0));
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), Real(0)); }

  bool grad_present() const { return grad.size() == values.size(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  bool all_finite() const {
    for (Real v : values) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

}  // namespace factorlab::engine
