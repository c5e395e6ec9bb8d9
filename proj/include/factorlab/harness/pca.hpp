#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "factorlab/data/dataset.hpp"
#include "factorlab/model/transformer.hpp"

namespace factorlab::harness {

/// Top-k eigenvectors of a dense symmetric matrix by power iteration with
/// deflation. Deterministic start vector; returns column vectors.
inline std::vector<std::vector<double>> top_eigenvectors(std::vector<double> sym, int dim, int k) {
  require(k >= 1 && k <= dim, "top_eigenvectors: need 1 <= k <= dim");
  std::vector<std::vector<double>> vectors;
  for (int comp = 0; comp < k; ++comp) {
    std::vector<double> v(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] = 1.0 + 0.01 * (i + 1) * (comp + 1);
    auto normalize = [&](std::vector<double>& x) {
      double n = 0;
      for (double xi : x) n += xi * xi;
      n = std::sqrt(n);
      if (n < 1e-300) return false;
      for (double& xi : x) xi /= n;
      return true;
    };
    normalize(v);
    std::vector<double> next(static_cast<size_t>(dim));
    for (int it = 0; it < 2000; ++it) {
      for (int i = 0; i < dim; ++i) {
        double acc = 0;
        for (int j = 0; j < dim; ++j) {
          acc += sym[static_cast<size_t>(i) * dim + j] * v[static_cast<size_t>(j)];
        }
        next[static_cast<size_t>(i)] = acc;
      }
      if (!normalize(next)) break;  // zero matrix: keep the start vector
      double delta = 0;
      for (int i = 0; i < dim; ++i) {
        delta = std::max(delta, std::abs(std::abs(next[static_cast<size_t>(i)]) -
                                         std::abs(v[static_cast<size_t>(i)])));
      }
      v = next;
      if (delta < 1e-14 && it > 4) break;
    }
    // Rayleigh quotient and deflation.
    double lambda = 0;
    for (int i = 0; i < dim; ++i) {
      double acc = 0;
      for (int j = 0; j < dim; ++j) {
        acc += sym[static_cast<size_t>(i) * dim + j] * v[static_cast<size_t>(j)];
      }
      lambda += v[static_cast<size_t>(i)] * acc;
    }
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        sym[static_cast<size_t>(i) * dim + j] -=
            lambda * v[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
      }
    }
    vectors.push_back(std::move(v));
  }
  return vectors;
}

struct PcaResult {
  std::vector<std::string> labels;
  std::vector<std::array<double, 2>> coords;

  std::string csv() const {
    std::string s = "entity,x,y\n";
    for (size_t i = 0; i < labels.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), ",%.8f,%.8f\n", coords[i][0], coords[i][1]);
      s += labels[i] + buf;
    }
    return s;
  }
};

/// Project mean-pooled entity representations onto the top principal
/// components. Representations are final-layer encoder states, pooled over
/// each entity's occurrences in statement records, then centered.
template <typename Real>
PcaResult pca_entities(model::ModelState<Real>& state, const data::QADataset& ds, int k = 2) {
  const int dim = state.config.embed_dim;

  struct Accum {
    std::vector<double> sum;
    int count = 0;
  };
  std::map<std::string, Accum> by_entity;

  for (const auto& r : ds.records) {
    if (r.kind != data::RecordKind::statement) continue;
    bool has_entity_span = false;
    for (const auto& s : r.spans) {
      has_entity_span = has_entity_span || s.kind != data::SpanKind::delimiter;
    }
    if (!has_entity_span) continue;

    engine::Graph<Real> g;
    const auto mask = model::VisibilityMask::full_except_self(r.length());
    auto* final_layer = model::encode(g, state, r.tokens, mask).back();
    for (const auto& s : r.spans) {
      if (s.kind == data::SpanKind::delimiter) continue;
      std::vector<int> ids(r.tokens.begin() + s.start, r.tokens.begin() + s.end);
      const std::string label = ds.vocab.render(ids);
      auto& acc = by_entity[label];
      if (acc.sum.empty()) acc.sum.assign(static_cast<size_t>(dim), 0.0);
      for (int pos = s.start; pos < s.end; ++pos) {
        for (int c = 0; c < dim; ++c) {
          acc.sum[static_cast<size_t>(c)] +=
              static_cast<double>(final_layer->at(pos, c)) / (s.end - s.start);
        }
      }
      acc.count += 1;
    }
  }

  const int n = static_cast<int>(by_entity.size());
  if (n < k) fail("pca_entities: only ", n, " entities but ", k, " components requested");

  PcaResult result;
  std::vector<double> rows(static_cast<size_t>(n) * dim);
  int row = 0;
  for (const auto& [label, acc] : by_entity) {
    result.labels.push_back(label);
    for (int c = 0; c < dim; ++c) {
      rows[static_cast<size_t>(row) * dim + c] = acc.sum[static_cast<size_t>(c)] / acc.count;
    }
    ++row;
  }
  // Center columns.
  for (int c = 0; c < dim; ++c) {
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += rows[static_cast<size_t>(i) * dim + c];
    mean /= n;
    for (int i = 0; i < n; ++i) rows[static_cast<size_t>(i) * dim + c] -= mean;
  }
  // Covariance, eigenvectors, projection.
  std::vector<double> cov(static_cast<size_t>(dim) * dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) {
      const double ra = rows[static_cast<size_t>(i) * dim + a];
      if (ra == 0.0) continue;
      for (int b = 0; b < dim; ++b) {
        cov[static_cast<size_t>(a) * dim + b] += ra * rows[static_cast<size_t>(i) * dim + b];
      }
    }
  }
  const auto components = top_eigenvectors(cov, dim, k);
  result.coords.assign(static_cast<size_t>(n), {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    for (int comp = 0; comp < std::min(k, 2); ++comp) {
      double acc = 0;
      for (int c = 0; c < dim; ++c) {
        acc += rows[static_cast<size_t>(i) * dim + c] * components[static_cast<size_t>(comp)][static_cast<size_t>(c)];
      }
      result.coords[static_cast<size_t>(i)][static_cast<size_t>(comp)] = acc;
    }
  }
  return result;
}

}  // namespace factorlab::harness
