#pragma once

// Slow, definition-level reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "smcr/numerics.hpp"

namespace oracle {

using smcr::Vector;

inline double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// DBSCAN via reachability closure: core points connected through chains of
// core neighbours form a component; a border point can belong to several
// components and is reported with every one it touches.
struct DbscanReference {
  std::vector<std::vector<std::size_t>> core_components;  // sorted members (core only)
  std::vector<std::vector<int>> border_options;           // per point, component ids it may join
  std::vector<char> is_core;
};

inline DbscanReference dbscan_reference(const std::vector<Vector>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) adj[i][j] = distance(pts[i], pts[j]) * distance(pts[i], pts[j]) <= eps * eps;
  DbscanReference ref;
  ref.is_core.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) count += adj[i][j];
    ref.is_core[i] = count >= min_pts;
  }
  // Transitive closure over the core-core graph (Floyd-Warshall style).
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = ref.is_core[i] && ref.is_core[j] && adj[i][j];
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  std::vector<int> comp(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ref.is_core[i] || comp[i] >= 0) continue;
    const int id = static_cast<int>(ref.core_components.size());
    ref.core_components.emplace_back();
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j] || j == i) {
        comp[j] = id;
        ref.core_components.back().push_back(j);
      }
  }
  ref.border_options.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ref.is_core[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (ref.is_core[j] && adj[i][j]) {
        auto& opts = ref.border_options[i];
        if (std::find(opts.begin(), opts.end(), comp[j]) == opts.end()) opts.push_back(comp[j]);
      }
  }
  return ref;
}

// Same partition up to relabeling.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

// Brute-force DBSCAN labels under the ascending-scan border rule: a border
// point goes to the component whose lowest-indexed core point comes first.
inline std::vector<int> dbscan_labels(const std::vector<Vector>& pts, double eps, int min_pts) {
  const auto ref = dbscan_reference(pts, eps, min_pts);
  std::vector<int> labels(pts.size(), -1);
  for (std::size_t c = 0; c < ref.core_components.size(); ++c)
    for (std::size_t i : ref.core_components[c]) labels[i] = static_cast<int>(c);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& opts = ref.border_options[i];
    if (!opts.empty()) labels[i] = *std::min_element(opts.begin(), opts.end());
  }
  return labels;
}

inline double cosine(const Vector& a, const Vector& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

struct Query {
  Vector feature;
  int identity;
  int camera;
};

struct Gallery {
  std::vector<Vector> features;
  std::vector<int> identities;
  std::vector<int> cameras;
};

// 1-based rank of every valid gallery entry, counted pairwise (no sort):
// rank(x) = 1 + #{valid y : sim(y) > sim(x) or (sim(y) == sim(x) and y < x)}.
inline std::vector<std::size_t> ranks(const Query& q, const Gallery& g) {
  const std::size_t n = g.features.size();
  std::vector<double> sim(n);
  std::vector<char> valid(n);
  for (std::size_t j = 0; j < n; ++j) {
    valid[j] = !(g.identities[j] == q.identity && g.cameras[j] == q.camera);
    sim[j] = cosine(q.feature, g.features[j]);
  }
  std::vector<std::size_t> r(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    if (!valid[x]) continue;
    std::size_t ahead = 0;
    for (std::size_t y = 0; y < n; ++y)
      if (valid[y] && (sim[y] > sim[x] || (sim[y] == sim[x] && y < x))) ++ahead;
    r[x] = ahead + 1;
  }
  return r;
}

inline std::optional<double> average_precision(const Query& q, const Gallery& g) {
  const auto r = ranks(q, g);
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < g.features.size(); ++j)
    if (r[j] > 0 && g.identities[j] == q.identity) hits.push_back(r[j]);
  if (hits.empty()) return std::nullopt;
  double sum = 0.0;
  for (std::size_t rj : hits) {
    std::size_t better = 0;
    for (std::size_t rk : hits) better += rk <= rj;
    sum += static_cast<double>(better) / static_cast<double>(rj);
  }
  return sum / static_cast<double>(hits.size());
}

inline std::optional<std::size_t> first_hit(const Query& q, const Gallery& g) {
  const auto r = ranks(q, g);
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < g.features.size(); ++j)
    if (r[j] > 0 && g.identities[j] == q.identity && (!best || r[j] < *best)) best = r[j];
  return best;
}

// Central finite difference of f at x along coordinate `i` of `target`.
inline double central_difference(const std::function<double()>& f, double& target, double h = 1e-5) {
  const double saved = target;
  target = saved + h;
  const double up = f();
  target = saved - h;
  const double down = f();
  target = saved;
  return (up - down) / (2.0 * h);
}

// Fourth-order central stencil; used where the loss bends sharply (nearly
// coincident features under a Euclidean distance).
inline double central_difference4(const std::function<double()>& f, double& target, double h = 1e-5) {
  const double saved = target;
  auto at = [&](double offset) {
    target = saved + offset;
    return f();
  };
  const double d = 8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h));
  target = saved;
  return d / (12.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Straightforward forward pass: tanh hidden layers, linear last layer, then
// L2 normalization.
inline Vector forward(const smcr::EncoderParams& p, const Vector& x) {
  Vector h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Vector next(layer.bias.size());
    for (std::size_t r = 0; r < next.size(); ++r) {
      double s = layer.bias[r];
      for (std::size_t c = 0; c < h.size(); ++c) s += layer.weight.data[r * layer.weight.cols + c] * h[c];
      next[r] = l + 1 < p.layers.size() ? std::tanh(s) : s;
    }
    h = next;
  }
  double n = 0.0;
  for (double v : h) n += v * v;
  n = std::sqrt(n);
  for (double& v : h) v /= n;
  return h;
}

}  // namespace oracle
