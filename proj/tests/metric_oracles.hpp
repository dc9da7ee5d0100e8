// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force metric references. AP is computed by enumerating every distinct
// score as a threshold; IoU comparisons use integer frame counts, so
// boundary cases such as IoU = 3/10 are decided exactly.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "avlab/common/rng.hpp"
#include "avlab/metrics/metrics.hpp"

namespace avtest {

// The final division and the accumulation order (descending threshold) are
// those of the library, so agreement is expected bit for bit.
inline std::optional<double> oracle_ap(const std::vector<double>& scores, const std::vector<std::uint8_t>& rel,
                                       std::size_t n_pos) {
  if (n_pos == 0) return std::nullopt;
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double ap = 0.0;
  std::size_t prev_tp = 0;
  for (double t : thresholds) {
    std::size_t tp = 0, n = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++n;
        tp += rel[i] != 0;
      }
    }
    if (tp > prev_tp) ap += double(tp - prev_tp) * (double(tp) / double(n));
    prev_tp = tp;
  }
  return ap / double(n_pos);
}

inline std::optional<double> oracle_frame_ap(const std::vector<double>& scores, const std::vector<std::uint8_t>& gt) {
  std::size_t pos = 0;
  for (auto g : gt) pos += g != 0;
  return oracle_ap(scores, gt, pos);
}

// Frame-set intersection and union sizes.
inline std::pair<std::size_t, std::size_t> overlap(const avlab::metrics::Segment& a, const avlab::metrics::Segment& b) {
  std::size_t inter = 0, uni = 0;
  const std::size_t hi = std::max(a.end, b.end);
  for (std::size_t f = 0; f < hi; ++f) {
    const bool in_a = f >= a.start && f < a.end, in_b = f >= b.start && f < b.end;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return {inter, uni};
}

// Per-class AP at IoU >= tenths / 10.
inline std::vector<std::optional<double>> oracle_class_ap(const std::vector<avlab::metrics::Segment>& preds,
                                                          const std::vector<avlab::metrics::Segment>& gts,
                                                          int tenths, std::size_t num_classes) {
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> g_idx, p_idx;
    for (std::size_t i = 0; i < gts.size(); ++i)
      if (gts[i].cls == c) g_idx.push_back(i);
    if (g_idx.empty()) continue;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i].cls == c) p_idx.push_back(i);
    // Selection order: highest score first, earliest index on ties.
    std::vector<bool> taken(p_idx.size(), false), used(g_idx.size(), false);
    std::vector<double> scores;
    std::vector<std::uint8_t> tp;
    for (std::size_t step = 0; step < p_idx.size(); ++step) {
      std::size_t pick = p_idx.size();
      for (std::size_t k = 0; k < p_idx.size(); ++k) {
        if (taken[k]) continue;
        if (pick == p_idx.size() || preds[p_idx[k]].score > preds[p_idx[pick]].score) pick = k;
      }
      taken[pick] = true;
      const auto& p = preds[p_idx[pick]];
      std::size_t best = g_idx.size(), bi = 0, bu = 1;
      for (std::size_t k = 0; k < g_idx.size(); ++k) {
        const auto& g = gts[g_idx[k]];
        if (used[k] || g.video != p.video) continue;
        const auto [inter, uni] = overlap(p, g);
        if (10 * inter < std::size_t(tenths) * uni) continue;
        if (best == g_idx.size() || inter * bu > bi * uni) best = k, bi = inter, bu = uni;
      }
      if (best < g_idx.size()) used[best] = true;
      scores.push_back(p.score);
      tp.push_back(best < g_idx.size());
    }
    out[c] = oracle_ap(scores, tp, g_idx.size());
  }
  return out;
}

inline std::optional<double> oracle_map(const std::vector<avlab::metrics::Segment>& preds,
                                        const std::vector<avlab::metrics::Segment>& gts, int tenths,
                                        std::size_t num_classes) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ap : oracle_class_ap(preds, gts, tenths, num_classes)) {
    if (ap) total += *ap, ++n;
  }
  if (n == 0) return std::nullopt;
  return total / double(n);
}

struct MetricInstance {
  std::vector<double> scores;
  std::vector<std::uint8_t> gt;
  std::vector<avlab::metrics::Segment> preds, gts;
  std::size_t num_classes = 3;
};

// <= 100 frames, <= 10 ground-truth and <= 10 predicted segments. Scores come
// from a coarse grid so ties occur.
inline MetricInstance random_instance(std::uint64_t seed) {
  avlab::Rng rng(seed, "metric-instance");
  MetricInstance m;
  const auto n = std::size_t(rng.uniform_int(1, 100));
  const int levels = int(rng.uniform_int(2, 20));
  for (std::size_t i = 0; i < n; ++i) {
    m.scores.push_back(double(rng.uniform_int(0, levels)) / levels);
    m.gt.push_back(rng.bernoulli(0.3) ? std::uint8_t(rng.uniform_int(1, 2)) : 0);
  }
  const auto videos = std::size_t(rng.uniform_int(1, 3));
  auto seg = [&](bool pred) {
    avlab::metrics::Segment s;
    s.video = std::size_t(rng.uniform_int(0, std::int64_t(videos) - 1));
    s.cls = std::size_t(rng.uniform_int(0, std::int64_t(m.num_classes) - 1));
    s.start = std::size_t(rng.uniform_int(0, 30));
    s.end = s.start + std::size_t(rng.uniform_int(1, 15));
    s.score = pred ? double(rng.uniform_int(0, levels)) / levels : 1.0;
    return s;
  };
  const auto ng = rng.uniform_int(1, 10), np = rng.uniform_int(0, 10);
  for (std::int64_t i = 0; i < ng; ++i) m.gts.push_back(seg(false));
  for (std::int64_t i = 0; i < np; ++i) m.preds.push_back(seg(true));
  return m;
}

}  // namespace avtest
