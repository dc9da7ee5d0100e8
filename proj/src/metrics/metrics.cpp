// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "avlab/common/errors.hpp"

namespace avlab::metrics {

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> relevant,
                                        std::size_t n_positive) {
  if (scores.size() != relevant.size()) {
    throw DimensionError("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(relevant.size()) + " labels");
  }
  if (n_positive == 0) return std::nullopt;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });

  double ap = 0.0;
  std::size_t seen = 0, hits = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g, group_hits = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      group_hits += relevant[order[end]] ? 1 : 0;
      ++end;
    }
    seen += end - g;
    hits += group_hits;
    if (group_hits) ap += double(group_hits) * (double(hits) / double(seen));
    g = end;
  }
  return ap / double(n_positive);
}

std::optional<double> frame_ap(std::span<const double> scores, std::span<const std::uint8_t> gt) {
  if (scores.size() != gt.size()) {
    throw DimensionError("frame_ap: " + std::to_string(scores.size()) + " scores vs " + std::to_string(gt.size()) +
                         " ground-truth frames");
  }
  std::vector<std::uint8_t> rel(gt.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    rel[i] = gt[i] != 0;
    pos += rel[i];
  }
  return average_precision(scores, rel, pos);
}

double iou(const Segment& a, const Segment& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  const double inter = hi > lo ? double(hi - lo) : 0.0;
  const double uni = double(a.end - a.start) + double(b.end - b.start) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Segment> proposals_from_curve(std::span<const double> scores, double threshold, std::size_t min_len,
                                          std::size_t cls, std::size_t video) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("proposal threshold must lie in (0, 1)");
  std::vector<Segment> out;
  for (std::size_t i = 0; i < scores.size();) {
    if (!(scores[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double total = 0.0;
    while (j < scores.size() && scores[j] > threshold) total += scores[j++];
    if (j - i >= min_len) out.push_back({video, cls, i, j, total / double(j - i)});
    i = j;
  }
  return out;
}

std::vector<Segment> sweep_proposals(std::span<const double> scores, const ProposalConfig& cfg, std::size_t cls,
                                     std::size_t video) {
  std::vector<Segment> out;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (double t : cfg.thresholds) {
    for (const auto& s : proposals_from_curve(scores, t, cfg.min_len, cls, video)) {
      if (seen.insert({s.cls, s.start, s.end}).second) out.push_back(s);
    }
  }
  return out;
}

std::vector<Segment> segments_from_mask(std::span<const std::uint8_t> mask, std::size_t video) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < mask.size();) {
    std::size_t j = i + 1;
    while (j < mask.size() && mask[j] == mask[i]) ++j;
    if (mask[i] != 0) out.push_back({video, mask[i], i, j, 1.0});
    i = j;
  }
  return out;
}

std::vector<std::optional<double>> class_ap_at_iou(std::span<const Segment> preds, std::span<const Segment> gts,
                                                   double threshold, std::size_t num_classes) {
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> gt_idx;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].cls == c) gt_idx.push_back(g);
    }
    if (gt_idx.empty()) continue;

    std::vector<const Segment*> ranked;
    for (const auto& p : preds) {
      if (p.cls == c) ranked.push_back(&p);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Segment* a, const Segment* b) { return a->score > b->score; });

    std::vector<bool> used(gt_idx.size(), false);
    std::vector<double> scores;
    std::vector<std::uint8_t> tp;
    for (const Segment* p : ranked) {
      double best = -1.0;
      std::size_t best_k = gt_idx.size();
      for (std::size_t k = 0; k < gt_idx.size(); ++k) {
        const Segment& g = gts[gt_idx[k]];
        if (used[k] || g.video != p->video) continue;
        const double o = iou(*p, g);
        if (o >= threshold && o > best) {
          best = o;
          best_k = k;
        }
      }
      if (best_k < gt_idx.size()) used[best_k] = true;
      scores.push_back(p->score);
      tp.push_back(best_k < gt_idx.size() ? 1 : 0);
    }
    out[c] = average_precision(scores, tp, gt_idx.size());
  }
  return out;
}

std::optional<double> map_at_iou(std::span<const Segment> preds, std::span<const Segment> gts, double threshold,
                                 std::size_t num_classes) {
  const auto per_class = class_ap_at_iou(preds, gts, threshold, num_classes);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ap : per_class) {
    if (ap) {
      total += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / double(n);
}

EvalReport evaluate_scores(std::span<const VideoScores> videos, const std::vector<std::string>& class_names,
                           const ProposalConfig& proposals) {
  EvalReport r;
  r.class_names = class_names;
  r.proposals = proposals;
  r.n_videos = videos.size();
  const std::size_t C = class_names.size();

  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_gt;
  std::vector<Segment> preds, gts;
  std::size_t missing = 0;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto& vs = videos[v];
    if (vs.gt.empty()) {
      ++missing;
      continue;
    }
    if (vs.gt.size() != vs.a.size()) {
      throw DataError("video '" + vs.video_id + "': " + std::to_string(vs.a.size()) + " scores vs " +
                      std::to_string(vs.gt.size()) + " ground-truth frames");
    }
    if (vs.class_curves.rows() != vs.a.size() || vs.class_curves.cols() != C) {
      throw DimensionError("video '" + vs.video_id + "': class curves " + vs.class_curves.shape.str() +
                           " do not match " + std::to_string(vs.a.size()) + " frames x " + std::to_string(C) +
                           " classes");
    }
    for (auto g : vs.gt) {
      if (g >= C) throw DataError("video '" + vs.video_id + "': ground-truth class " + std::to_string(g) +
                                  " out of range");
    }
    all_scores.insert(all_scores.end(), vs.a.begin(), vs.a.end());
    all_gt.insert(all_gt.end(), vs.gt.begin(), vs.gt.end());
    for (const auto& s : segments_from_mask(vs.gt, v)) gts.push_back(s);
    std::vector<double> curve(vs.a.size());
    for (std::size_t c = 1; c < C; ++c) {
      for (std::size_t i = 0; i < curve.size(); ++i) curve[i] = vs.class_curves(i, c);
      for (const auto& s : sweep_proposals(curve, proposals, c, v)) preds.push_back(s);
    }
  }
  if (missing) {
    r.notes.push_back(std::to_string(missing) + " of " + std::to_string(videos.size()) +
                      " videos have no frame ground truth; skipped for frame AP and mAP");
  }

  r.n_frames = all_scores.size();
  r.n_positive_frames = static_cast<std::size_t>(std::count_if(all_gt.begin(), all_gt.end(), [](auto g) { return g != 0; }));
  r.n_gt_segments = gts.size();
  r.n_pred_segments = preds.size();
  if (r.n_frames == 0) {
    r.notes.push_back("no frame ground truth available; coarse and fine metrics skipped");
    return r;
  }
  r.frame_ap = frame_ap(all_scores, all_gt);
  if (!r.frame_ap) r.notes.push_back("no anomalous frames in ground truth; frame AP undefined");

  r.iou_thresholds.assign(std::begin(kIouThresholds), std::end(kIouThresholds));
  if (gts.empty()) {
    r.notes.push_back("no ground-truth anomaly segments; mAP undefined");
    r.iou_thresholds.clear();
    return r;
  }
  double total = 0.0;
  for (double t : r.iou_thresholds) {
    auto per_class = class_ap_at_iou(preds, gts, t, C);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& ap : per_class) {
      if (ap) {
        sum += *ap;
        ++n;
      }
    }
    r.map_per_iou.push_back(sum / double(n));
    total += r.map_per_iou.back();
    r.per_class_ap.push_back(std::move(per_class));
  }
  r.avg_map = total / double(r.map_per_iou.size());
  return r;
}

namespace {

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["frame_ap"] = opt_json(frame_ap);
  j["iou_thresholds"] = iou_thresholds;
  j["map_per_iou"] = map_per_iou;
  j["avg_map"] = opt_json(avg_map);
  j["class_names"] = class_names;
  auto per = nlohmann::ordered_json::array();
  for (const auto& row : per_class_ap) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& v : row) r.push_back(opt_json(v));
    per.push_back(r);
  }
  j["per_class_ap"] = per;
  j["counts"] = {{"videos", n_videos},
                 {"frames", n_frames},
                 {"positive_frames", n_positive_frames},
                 {"gt_segments", n_gt_segments},
                 {"pred_segments", n_pred_segments}};
  j["proposals"] = {{"thresholds", proposals.thresholds}, {"min_len", proposals.min_len}};
  j["notes"] = notes;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.frame_ap = opt_from(j.at("frame_ap"));
    r.iou_thresholds = j.at("iou_thresholds").get<std::vector<double>>();
    r.map_per_iou = j.at("map_per_iou").get<std::vector<double>>();
    r.avg_map = opt_from(j.at("avg_map"));
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_class_ap")) {
      std::vector<std::optional<double>> v;
      for (const auto& x : row) v.push_back(opt_from(x));
      r.per_class_ap.push_back(std::move(v));
    }
    const auto& c = j.at("counts");
    r.n_videos = c.at("videos").get<std::size_t>();
    r.n_frames = c.at("frames").get<std::size_t>();
    r.n_positive_frames = c.at("positive_frames").get<std::size_t>();
    r.n_gt_segments = c.at("gt_segments").get<std::size_t>();
    r.n_pred_segments = c.at("pred_segments").get<std::size_t>();
    r.proposals.thresholds = j.at("proposals").at("thresholds").get<std::vector<double>>();
    r.proposals.min_len = j.at("proposals").at("min_len").get<std::size_t>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

}  // namespace avlab::metrics
