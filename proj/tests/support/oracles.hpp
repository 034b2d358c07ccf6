// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Slow reference implementations used to cross-check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "crash/geometry.hpp"
#include "crash/random.hpp"

namespace crash::oracle {

using geometry::Vec3;

inline double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Recomputes every candidate's distance to the whole selected set at every
// pick.
inline std::vector<std::size_t> greedy_maximin(const std::vector<Vec3>& pts, std::size_t m, std::size_t start) {
  std::vector<std::size_t> sel{start};
  std::vector<bool> taken(pts.size(), false);
  taken[start] = true;
  while (sel.size() < m) {
    std::size_t best = pts.size();
    double best_d = -1.0;
    for (std::size_t c = 0; c < pts.size(); ++c) {
      if (taken[c]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t s : sel) d = std::min(d, dist(pts[c], pts[s]));
      if (d > best_d) {
        best_d = d;
        best = c;
      }
    }
    sel.push_back(best);
    taken[best] = true;
  }
  return sel;
}

inline double min_pairwise(const std::vector<Vec3>& pts, const std::vector<std::size_t>& idx) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) d = std::min(d, dist(pts[idx[a]], pts[idx[b]]));
  }
  return d;
}

// All-pairs sort by (distance, index).
inline std::vector<geometry::Edge> brute_knn(const std::vector<Vec3>& pts, const std::vector<std::size_t>& src,
                                             const std::vector<std::size_t>& dst, std::size_t k) {
  std::vector<geometry::Edge> out;
  for (std::size_t s : src) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t d : dst) {
      if (d != s) cand.push_back({dist(pts[s], pts[d]), d});
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t i = 0; i < k; ++i) out.push_back({s, cand[i].second});
  }
  return out;
}

inline std::vector<Vec3> random_points(std::size_t n, Rng& rng, bool planar = false) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(), rng.uniform(), planar ? 0.0 : rng.uniform()});
  return pts;
}

// Snaps coordinates to a coarse grid so that distance ties actually occur.
inline std::vector<Vec3> lattice_points(std::size_t n, Rng& rng) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({double(rng.below(6)), double(rng.below(6)), double(rng.below(3))});
  }
  return pts;
}

}  // namespace crash::oracle
