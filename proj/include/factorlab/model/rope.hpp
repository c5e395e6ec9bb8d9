#pragma once

#include <cmath>
#include <vector>

#include "factorlab/engine/graph.hpp"

namespace factorlab::model {

/// Rotary position angles for one position: angle[i] = pos * base^(-2i/dim),
/// one angle per feature pair.
inline std::vector<double> rope_angles(int position, int head_dim, double base = 10000.0) {
  require(head_dim % 2 == 0, "rope: head dimension must be even");
  std::vector<double> angles(static_cast<size_t>(head_dim / 2));
  for (int i = 0; i < head_dim / 2; ++i) {
    const double inv_freq = std::pow(base, -2.0 * i / head_dim);
    angles[static_cast<size_t>(i)] = position * inv_freq;
  }
  return angles;
}

/// Apply the rotary rotation to each row of x (shape [n, head_dim]), where
/// row r corresponds to sequence position positions[r]. Feature pairs are
/// (i, i + head_dim/2).
template <typename Real>
engine::Tensor<Real>* apply_rope(engine::Graph<Real>& g, engine::Tensor<Real>* x,
                                 const std::vector<int>& positions, double base = 10000.0) {
  require(x->ndim() == 2, "rope: expects rank-2 input");
  const int n = x->shape[0], dim = x->shape[1];
  require(static_cast<int>(positions.size()) == n, "rope: positions size mismatch");
  require(dim % 2 == 0, "rope: head dimension must be even");
  const int half = dim / 2;

  auto cos_t = engine::Tensor<Real>::zeros({n, half});
  auto sin_t = engine::Tensor<Real>::zeros({n, half});
  for (int r = 0; r < n; ++r) {
    const auto angles = rope_angles(positions[static_cast<size_t>(r)], dim, base);
    for (int i = 0; i < half; ++i) {
      cos_t.at(r, i) = static_cast<Real>(std::cos(angles[static_cast<size_t>(i)]));
      sin_t.at(r, i) = static_cast<Real>(std::sin(angles[static_cast<size_t>(i)]));
    }
  }
  auto* cosm = g.constant(std::move(cos_t));
  auto* sinm = g.constant(std::move(sin_t));

  auto* a = g.slice_cols(x, 0, half);
  auto* b = g.slice_cols(x, half, dim);
  auto* rot_a = g.sub(g.mul(a, cosm), g.mul(b, sinm));
  auto* rot_b = g.add(g.mul(b, cosm), g.mul(a, sinm));
  return g.concat_cols({rot_a, rot_b});
}

}  // namespace factorlab::model
