#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "factorlab/engine/tensor.hpp"

namespace factorlab::engine {

/// Reverse-mode tape. Operations append nodes in evaluation order, so every
/// node's inputs precede it and backward is a single reverse sweep. Interior
/// tensors are owned by the graph; leaves (parameters, constants) live
/// outside and keep their grads across graph lifetimes until zeroed.
template <typename Real>
class Graph {
 public:
  using T = Tensor<Real>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Graph-owned constant; never receives gradient.
  T* constant(T value) {
    value.requires_grad = false;
    return own(std::move(value));
  }

  T* add(T* a, T* b) {
    check_same_shape("add", a, b);
    T* out = fresh("add", a->shape, a, b);
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = a->values[i] + b->values[i];
    record(out, [a, b, out] {
      if (Real* ga = grad_ptr(a)) axpy(ga, out->grad.data(), out->numel(), Real(1));
      if (Real* gb = grad_ptr(b)) axpy(gb, out->grad.data(), out->numel(), Real(1));
    });
    return out;
  }

  T* sub(T* a, T* b) {
    check_same_shape("sub", a, b);
    T* out = fresh("sub", a->shape, a, b);
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = a->values[i] - b->values[i];
    record(out, [a, b, out] {
      if (Real* ga = grad_ptr(a)) axpy(ga, out->grad.data(), out->numel(), Real(1));
      if (Real* gb = grad_ptr(b)) axpy(gb, out->grad.data(), out->numel(), Real(-1));
    });
    return out;
  }

  /// Elementwise multiply.
  T* mul(T* a, T* b) {
    check_same_shape("multiply", a, b);
    T* out = fresh("multiply", a->shape, a, b);
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = a->values[i] * b->values[i];
    record(out, [a, b, out] {
      if (Real* ga = grad_ptr(a)) {
        for (size_t i = 0; i < out->grad.size(); ++i) ga[i] += out->grad[i] * b->values[i];
      }
      if (Real* gb = grad_ptr(b)) {
        for (size_t i = 0; i < out->grad.size(); ++i) gb[i] += out->grad[i] * a->values[i];
      }
    });
    return out;
  }

  T* scale(T* a, double c) {
    T* out = fresh("scale", a->shape, a);
    const Real rc = static_cast<Real>(c);
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = a->values[i] * rc;
    record(out, [a, out, rc] {
      if (Real* ga = grad_ptr(a)) axpy(ga, out->grad.data(), out->numel(), rc);
    });
    return out;
  }

  /// 2D matrix product [m,k] x [k,n] -> [m,n].
  T* matmul(T* a, T* b) {
    require(a->ndim() == 2 && b->ndim() == 2,
            cat("matmul: expects rank-2 inputs, got ", a->shape_str(), " and ", b->shape_str()));
    const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
    if (b->shape[0] != k) {
      fail("matmul: inner dimensions differ: ", a->shape_str(), " vs ", b->shape_str());
    }
    T* out = fresh("matmul", {m, n}, a, b);
    matmul_values(a->values.data(), b->values.data(), out->values.data(), m, k, n);
    record(out, [a, b, out, m, k, n] {
      // dA = dC * B^T ; dB = A^T * dC
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < m; ++i) {
          const Real* gout = out->grad.data() + static_cast<size_t>(i) * n;
          const Real* brow = b->values.data();
          Real* garow = ga + static_cast<size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            Real acc = 0;
            const Real* bk = brow + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) acc += gout[j] * bk[j];
            garow[kk] += acc;
          }
        }
      }
      if (Real* gb = grad_ptr(b)) {
        for (int i = 0; i < m; ++i) {
          const Real* arow = a->values.data() + static_cast<size_t>(i) * k;
          const Real* gout = out->grad.data() + static_cast<size_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            const Real aik = arow[kk];
            if (aik == Real(0)) continue;
            Real* gbk = gb + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) gbk[j] += aik * gout[j];
          }
        }
      }
    });
    return out;
  }

  T* transpose(T* a) {
    require(a->ndim() == 2, cat("transpose: expects rank-2 input, got ", a->shape_str()));
    const int r = a->shape[0], c = a->shape[1];
    T* out = fresh("transpose", {c, r}, a);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) out->at(j, i) = a->at(i, j);
    }
    record(out, [a, out, r, c] {
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < c; ++j) {
            ga[static_cast<size_t>(i) * c + j] += out->grad[static_cast<size_t>(j) * r + i];
          }
        }
      }
    });
    return out;
  }

  /// Row-wise softmax over the last axis.
  T* softmax_last(T* a) {
    T* out = fresh("softmax", a->shape, a);
    const int r = a->rows(), c = a->cols();
    for (int i = 0; i < r; ++i) softmax_row(a->values.data() + static_cast<size_t>(i) * c,
                                            out->values.data() + static_cast<size_t>(i) * c, c);
    record(out, [a, out, r, c] {
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < r; ++i) {
          const Real* y = out->values.data() + static_cast<size_t>(i) * c;
          const Real* gy = out->grad.data() + static_cast<size_t>(i) * c;
          Real dot = 0;
          for (int j = 0; j < c; ++j) dot += gy[j] * y[j];
          Real* g = ga + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) g[j] += (gy[j] - dot) * y[j];
        }
      }
    });
    return out;
  }

  T* log_softmax_last(T* a) {
    T* out = fresh("log_softmax", a->shape, a);
    const int r = a->rows(), c = a->cols();
    for (int i = 0; i < r; ++i) {
      const Real* x = a->values.data() + static_cast<size_t>(i) * c;
      Real* y = out->values.data() + static_cast<size_t>(i) * c;
      Real mx = x[0];
      for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
      double lse = 0;
      for (int j = 0; j < c; ++j) lse += std::exp(static_cast<double>(x[j] - mx));
      const Real shift = mx + static_cast<Real>(std::log(lse));
      for (int j = 0; j < c; ++j) y[j] = x[j] - shift;
    }
    record(out, [a, out, r, c] {
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < r; ++i) {
          const Real* y = out->values.data() + static_cast<size_t>(i) * c;
          const Real* gy = out->grad.data() + static_cast<size_t>(i) * c;
          Real gsum = 0;
          for (int j = 0; j < c; ++j) gsum += gy[j];
          Real* g = ga + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) {
            g[j] += gy[j] - static_cast<Real>(std::exp(static_cast<double>(y[j]))) * gsum;
          }
        }
      }
    });
    return out;
  }

  /// Row-wise RMS normalization (no learned gain): y = x / sqrt(mean(x^2) + eps).
  T* rmsnorm(T* a) {
    T* out = fresh("rmsnorm", a->shape, a);
    const int r = a->rows(), c = a->cols();
    for (int i = 0; i < r; ++i) {
      const Real* x = a->values.data() + static_cast<size_t>(i) * c;
      Real* y = out->values.data() + static_cast<size_t>(i) * c;
      double ms = 0;
      for (int j = 0; j < c; ++j) ms += static_cast<double>(x[j]) * x[j];
      const Real inv = static_cast<Real>(1.0 / std::sqrt(ms / c + kRmsEps));
      for (int j = 0; j < c; ++j) y[j] = x[j] * inv;
    }
    record(out, [a, out, r, c] {
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < r; ++i) {
          const Real* x = a->values.data() + static_cast<size_t>(i) * c;
          const Real* gy = out->grad.data() + static_cast<size_t>(i) * c;
          double ms = 0, xg = 0;
          for (int j = 0; j < c; ++j) {
            ms += static_cast<double>(x[j]) * x[j];
            xg += static_cast<double>(x[j]) * gy[j];
          }
          const double inv = 1.0 / std::sqrt(ms / c + kRmsEps);
          const double inv3 = inv * inv * inv;
          Real* g = ga + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) {
            g[j] += static_cast<Real>(inv * gy[j] - inv3 * x[j] * xg / c);
          }
        }
      }
    });
    return out;
  }

  /// tanh-approximation GELU.
  T* gelu(T* a) {
    T* out = fresh("gelu", a->shape, a);
    for (size_t i = 0; i < out->values.size(); ++i) {
      out->values[i] = static_cast<Real>(gelu_val(static_cast<double>(a->values[i])));
    }
    record(out, [a, out] {
      if (Real* ga = grad_ptr(a)) {
        for (size_t i = 0; i < out->grad.size(); ++i) {
          ga[i] += out->grad[i] * static_cast<Real>(gelu_grad(static_cast<double>(a->values[i])));
        }
      }
    });
    return out;
  }

  /// Gather rows of a [num, dim] table -> [ids.size(), dim].
  T* embedding_gather(T* table, std::vector<int> ids) {
    require(table->ndim() == 2, "embedding_gather: table must be rank-2");
    const int num = table->shape[0], dim = table->shape[1];
    require(!ids.empty(), "embedding_gather: empty id list");
    for (int id : ids) {
      if (id < 0 || id >= num) fail("embedding_gather: id ", id, " out of range [0,", num, ")");
    }
    T* out = fresh("embedding_gather", {static_cast<int>(ids.size()), dim}, table);
    for (size_t i = 0; i < ids.size(); ++i) {
      const Real* src = table->values.data() + static_cast<size_t>(ids[i]) * dim;
      std::copy(src, src + dim, out->values.data() + i * dim);
    }
    auto ids_keep = std::make_shared<std::vector<int>>(std::move(ids));
    record(out, [table, out, ids_keep, dim] {
      if (Real* gt = grad_ptr(table)) {
        for (size_t i = 0; i < ids_keep->size(); ++i) {
          Real* dst = gt + static_cast<size_t>((*ids_keep)[i]) * dim;
          const Real* src = out->grad.data() + i * dim;
          for (int j = 0; j < dim; ++j) dst[j] += src[j];
        }
      }
    });
    return out;
  }

  /// Concatenate rank-2 tensors along columns.
  T* concat_cols(const std::vector<T*>& parts) {
    require(!parts.empty(), "concat: no inputs");
    const int r = parts[0]->shape[0];
    int total = 0;
    for (T* p : parts) {
      require(p->ndim() == 2 && p->shape[0] == r,
              cat("concat: row mismatch, expected ", r, " rows, got ", p->shape_str()));
      total += p->shape[1];
    }
    T* out = fresh_multi("concat", {r, total}, parts);
    int col = 0;
    for (T* p : parts) {
      const int c = p->shape[1];
      for (int i = 0; i < r; ++i) {
        std::copy(p->values.data() + static_cast<size_t>(i) * c,
                  p->values.data() + static_cast<size_t>(i) * c + c,
                  out->values.data() + static_cast<size_t>(i) * total + col);
      }
      col += c;
    }
    auto parts_keep = std::make_shared<std::vector<T*>>(parts);
    record(out, [out, parts_keep, r, total] {
      int col = 0;
      for (T* p : *parts_keep) {
        const int c = p->shape[1];
        if (Real* gp = grad_ptr(p)) {
          for (int i = 0; i < r; ++i) {
            const Real* src = out->grad.data() + static_cast<size_t>(i) * total + col;
            Real* dst = gp + static_cast<size_t>(i) * c;
            for (int j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
        col += c;
      }
    });
    return out;
  }

  /// Column slice [begin, end) of a rank-2 tensor.
  T* slice_cols(T* a, int begin, int end) {
    require(a->ndim() == 2, "slice: expects rank-2 input");
    const int r = a->shape[0], c = a->shape[1];
    if (begin < 0 || end > c || begin >= end) {
      fail("slice: bad column range [", begin, ",", end, ") for ", a->shape_str());
    }
    const int w = end - begin;
    T* out = fresh("slice", {r, w}, a);
    for (int i = 0; i < r; ++i) {
      std::copy(a->values.data() + static_cast<size_t>(i) * c + begin,
                a->values.data() + static_cast<size_t>(i) * c + end,
                out->values.data() + static_cast<size_t>(i) * w);
    }
    record(out, [a, out, r, c, w, begin] {
      if (Real* ga = grad_ptr(a)) {
        for (int i = 0; i < r; ++i) {
          const Real* src = out->grad.data() + static_cast<size_t>(i) * w;
          Real* dst = ga + static_cast<size_t>(i) * c + begin;
          for (int j = 0; j < w; ++j) dst[j] += src[j];
        }
      }
    });
    return out;
  }

  /// Replace elements where fill_here is true with a constant. Those
  /// positions carry no gradient and no dependence on the input.
  T* masked_fill(T* a, const std::vector<uint8_t>& fill_here, double value) {
    require(fill_here.size() == a->values.size(),
            "masked_fill: mask size does not match tensor");
    T* out = fresh("masked_fill", a->shape, a);
    const Real rv = static_cast<Real>(value);
    for (size_t i = 0; i < out->values.size(); ++i) {
      out->values[i] = fill_here[i] ? rv : a->values[i];
    }
    auto mask_keep = std::make_shared<std::vector<uint8_t>>(fill_here);
    record(out, [a, out, mask_keep] {
      if (Real* ga = grad_ptr(a)) {
        for (size_t i = 0; i < out->grad.size(); ++i) {
          if (!(*mask_keep)[i]) ga[i] += out->grad[i];
        }
      }
    });
    return out;
  }

  /// Gather individual elements by (row, col) -> rank-1 tensor.
  T* pick(T* a, std::vector<std::pair<int, int>> rc) {
    require(a->ndim() == 2, "pick: expects rank-2 input");
    require(!rc.empty(), "pick: empty index list");
    const int r = a->shape[0], c = a->shape[1];
    T* out = fresh("pick", {static_cast<int>(rc.size())}, a);
    for (size_t i = 0; i < rc.size(); ++i) {
      const auto [ri, ci] = rc[i];
      if (ri < 0 || ri >= r || ci < 0 || ci >= c) {
        fail("pick: index (", ri, ",", ci, ") out of range for ", a->shape_str());
      }
      out->values[i] = a->at(ri, ci);
    }
    auto rc_keep = std::make_shared<std::vector<std::pair<int, int>>>(std::move(rc));
    record(out, [a, out, rc_keep, c] {
      if (Real* ga = grad_ptr(a)) {
        for (size_t i = 0; i < rc_keep->size(); ++i) {
          const auto [ri, ci] = (*rc_keep)[i];
          ga[static_cast<size_t>(ri) * c + ci] += out->grad[i];
        }
      }
    });
    return out;
  }

  /// Sum of all elements -> scalar.
  T* sum(T* a) {
    T* out = fresh("sum", {1}, a);
    double acc = 0;
    for (Real v : a->values) acc += static_cast<double>(v);
    out->values[0] = static_cast<Real>(acc);
    record(out, [a, out] {
      if (Real* ga = grad_ptr(a)) {
        const Real g = out->grad[0];
        for (size_t i = 0; i < a->values.size(); ++i) ga[i] += g;
      }
    });
    return out;
  }

  /// Populate d(loss)/d(leaf) for every reachable tensor with requires_grad.
  /// Grads accumulate across backward calls until explicitly zeroed.
  void backward(T* loss) {
    require(recording_, "backward: graph was built in forward-only mode");
    require(!consumed_, "backward: graph already consumed");
    if (loss->numel() != 1) {
      fail("backward: loss must be scalar, got ", loss->shape_str());
    }
    consumed_ = true;
    loss->ensure_grad();
    loss->grad[0] += Real(1);
    for (size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].out->requires_grad && nodes_[i].out->grad_present()) nodes_[i].vjp();
    }
  }

  bool consumed() const { return consumed_; }
  size_t num_nodes() const { return nodes_.size(); }

  /// When on, every operation verifies its output is finite.
  void set_check_finite(bool on) { check_finite_ = on; }

  /// Forward-only mode: skips recording backward closures. backward() on
  /// such a graph is an error.
  void set_recording(bool on) { recording_ = on; }

  static constexpr double kRmsEps = 1e-6;

 private:
  struct Node {
    T* out;
    std::function<void()> vjp;
  };

  static Real* grad_ptr(T* t) {
    if (!t->requires_grad) return nullptr;
    t->ensure_grad();
    return t->grad.data();
  }

  static void axpy(Real* __restrict__ dst, const Real* __restrict__ src, int64_t n, Real a) {
    for (int64_t i = 0; i < n; ++i) dst[i] += a * src[i];
  }

  static void matmul_values(const Real* __restrict__ a, const Real* __restrict__ b,
                            Real* __restrict__ c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
      Real* __restrict__ crow = c + static_cast<size_t>(i) * n;
      const Real* __restrict__ arow = a + static_cast<size_t>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        const Real aik = arow[kk];
        if (aik == Real(0)) continue;
        const Real* __restrict__ brow = b + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }

  static void softmax_row(const Real* x, Real* y, int n) {
    Real mx = x[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double sum = 0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(static_cast<double>(x[j] - mx));
      y[j] = static_cast<Real>(e);
      sum += e;
    }
    const Real inv = static_cast<Real>(1.0 / sum);
    for (int j = 0; j < n; ++j) y[j] *= inv;
  }

  static double gelu_val(double x) {
    const double kC = 0.7978845608028654;  // sqrt(2/pi)
    const double u = kC * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
  }

  static double gelu_grad(double x) {
    const double kC = 0.7978845608028654;
    const double u = kC * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    const double du = kC * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
  }

  void check_same_shape(const char* op, T* a, T* b) {
    if (!a->same_shape(*b)) {
      fail(op, ": shape mismatch ", a->shape_str(), " vs ", b->shape_str());
    }
  }

  T* own(T t) {
    storage_.push_back(std::move(t));
    return &storage_.back();
  }

  T* fresh(const char* op, std::vector<int> shape, T* in0, T* in1 = nullptr) {
    T* out = own(T::zeros(std::move(shape)));
    out->requires_grad = in0->requires_grad || (in1 && in1->requires_grad);
    last_op_ = op;
    return out;
  }

  T* fresh_multi(const char* op, std::vector<int> shape, const std::vector<T*>& ins) {
    T* out = own(T::zeros(std::move(shape)));
    for (T* in : ins) out->requires_grad = out->requires_grad || in->requires_grad;
    last_op_ = op;
    return out;
  }

  void record(T* out, std::function<void()> vjp) {
    if (check_finite_ && !out->all_finite()) {
      fail(last_op_, ": non-finite value in output of shape ", out->shape_str());
    }
    if (recording_ && out->requires_grad) nodes_.push_back(Node{out, std::move(vjp)});
  }

  std::deque<T> storage_;
  std::vector<Node> nodes_;
  const char* last_op_ = "";
  bool consumed_ = false;
  bool check_finite_ = true;
  bool recording_ = true;
};

}  // namespace factorlab::engine
