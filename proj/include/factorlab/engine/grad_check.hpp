#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "factorlab/engine/tensor.hpp"
#include "factorlab/rng.hpp"

namespace factorlab::engine {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_err = 0.0;
  bool passed(double tolerance) const { return worst_rel_err <= tolerance; }
};

/// Compare autograd gradients against central finite differences.
///
/// model_fn(accumulate_grads) must evaluate a deterministic scalar loss of
/// the current parameter values; when accumulate_grads is true it must also
/// populate parameter grads (one forward+backward). Gradients are zeroed
/// here before the autograd pass. When max_elements_per_param > 0, a seeded
/// subset of coordinates per parameter is probed instead of all of them.
template <typename Real>
GradCheckReport grad_check(const std::vector<std::pair<std::string, Tensor<Real>*>>& params,
                           const std::function<double(bool)>& model_fn, double h,
                           int max_elements_per_param = 0, uint64_t probe_seed = 17) {
  for (auto& [name, p] : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  model_fn(true);

  GradCheckReport report;
  Rng probe(probe_seed);
  for (auto& [name, p] : params) {
    GradCheckEntry entry{name, 0.0, 0.0};
    const int n = static_cast<int>(p->values.size());
    std::vector<int> idx;
    if (max_elements_per_param > 0 && n > max_elements_per_param) {
      idx = probe.sample_distinct(n, max_elements_per_param);
    } else {
      idx.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    }
    for (int i : idx) {
      const Real keep = p->values[static_cast<size_t>(i)];
      p->values[static_cast<size_t>(i)] = keep + static_cast<Real>(h);
      const double up = model_fn(false);
      p->values[static_cast<size_t>(i)] = keep - static_cast<Real>(h);
      const double down = model_fn(false);
      p->values[static_cast<size_t>(i)] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double ad = static_cast<double>(p->grad[static_cast<size_t>(i)]);
      const double abs_err = std::abs(fd - ad);
      const double rel = abs_err / std::max({1.0, std::abs(fd), std::abs(ad)});
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.worst_rel_err = std::max(report.worst_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace factorlab::engine
