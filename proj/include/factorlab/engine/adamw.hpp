#pragma once

#include <cmath>
#include <vector>

#include "factorlab/engine/tensor.hpp"

namespace factorlab::engine {

/// AdamW with bias-corrected moments, decoupled weight decay, and linear
/// learning-rate warmup over the first warmup_fraction of total_steps.
template <typename Real>
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    double warmup_fraction = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long total_steps = 1;
  };

  AdamW(std::vector<Tensor<Real>*> params, Options opt) : params_(std::move(params)), opt_(opt) {
    require(opt_.total_steps > 0, "AdamW: total_steps must be positive");
    require(opt_.warmup_fraction >= 0.0 && opt_.warmup_fraction < 1.0,
            "AdamW: warmup_fraction must be in [0,1)");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto* p : params_) {
      m_.emplace_back(p->values.size(), Real(0));
      v_.emplace_back(p->values.size(), Real(0));
    }
  }

  long step_count() const { return step_; }

  double effective_lr(long step_one_based) const {
    const double warmup_steps = opt_.warmup_fraction * static_cast<double>(opt_.total_steps);
    double ramp = 1.0;
    if (warmup_steps >= 1.0 && static_cast<double>(step_one_based) < warmup_steps) {
      ramp = static_cast<double>(step_one_based) / warmup_steps;
    }
    return opt_.learning_rate * ramp;
  }

  /// One update over all parameters; zeroes gradients afterwards.
  void step() {
    bool any_grad = false;
    for (auto* p : params_) any_grad = any_grad || p->grad_present();
    require(any_grad, "adamw_step: called before any backward populated gradients");

    ++step_;
    const double lr = effective_lr(step_);
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));

    for (size_t t = 0; t < params_.size(); ++t) {
      Tensor<Real>* p = params_[t];
      p->ensure_grad();
      Real* w = p->values.data();
      Real* g = p->grad.data();
      Real* m = m_[t].data();
      Real* v = v_[t].data();
      const size_t n = p->values.size();
      for (size_t i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * gi;
        const double vi = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * gi * gi;
        m[i] = static_cast<Real>(mi);
        v[i] = static_cast<Real>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        const double update = mhat / (std::sqrt(vhat) + opt_.epsilon) + opt_.weight_decay * w[i];
        w[i] = static_cast<Real>(w[i] - lr * update);
      }
      p->zero_grad();
    }
  }

 private:
  std::vector<Tensor<Real>*> params_;
  Options opt_;
  std::vector<std::vector<Real>> m_, v_;
  long step_ = 0;
};

}  // namespace factorlab::engine
