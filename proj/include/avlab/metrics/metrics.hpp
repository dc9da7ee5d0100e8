// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Average precision is all-points: rank by score, and sum the precision at
// every recall step divided by the number of positives. Equal scores form one
// group; a group contributes (positives in group) x (precision after the
// whole group).
#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avlab/diff/matrix.hpp"

namespace avlab::metrics {

struct Segment {
  std::size_t video = 0;
  std::size_t cls = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  double score = 0.0;

  bool operator==(const Segment&) const = default;
};

inline constexpr double kIouThresholds[] = {0.1, 0.2, 0.3, 0.4, 0.5};

// AP from scores and binary relevance; absent when there is no positive.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> relevant,
                                        std::size_t n_positive);

// Frame-level AP over concatenated frames. gt is nonzero for anomalous frames.
std::optional<double> frame_ap(std::span<const double> scores, std::span<const std::uint8_t> gt);

double iou(const Segment& a, const Segment& b);

// Maximal runs with score > threshold and length >= min_len, scored by the
// mean in-run score.
std::vector<Segment> proposals_from_curve(std::span<const double> scores, double threshold, std::size_t min_len,
                                          std::size_t cls = 0, std::size_t video = 0);

struct ProposalConfig {
  std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t min_len = 2;
};

// Proposals of every threshold pooled, deduplicated by (class, start, end).
std::vector<Segment> sweep_proposals(std::span<const double> scores, const ProposalConfig& cfg, std::size_t cls = 0,
                                     std::size_t video = 0);

// Runs of equal nonzero class in a per-frame class mask.
std::vector<Segment> segments_from_mask(std::span<const std::uint8_t> mask, std::size_t video = 0);

// Per-class AP at one IoU threshold. Predictions are ranked by score (stable
// for ties); each one greedily claims the unmatched same-video ground truth
// with the highest IoU >= threshold (lowest index on ties). Entry c is absent
// when class c has no ground-truth segment.
std::vector<std::optional<double>> class_ap_at_iou(std::span<const Segment> preds, std::span<const Segment> gts,
                                                   double threshold, std::size_t num_classes);

// Mean of class_ap_at_iou over classes with ground truth; absent if none.
std::optional<double> map_at_iou(std::span<const Segment> preds, std::span<const Segment> gts, double threshold,
                                 std::size_t num_classes);

struct VideoScores {
  std::string video_id;
  std::vector<double> a;             // per raw frame
  Matrix<double> class_curves;       // raw frames x C, column 0 unused
  std::vector<std::uint8_t> gt;      // per raw frame class index; empty if absent
};

struct EvalReport {
  std::optional<double> frame_ap;
  std::vector<double> iou_thresholds;
  std::vector<double> map_per_iou;  // empty when no ground-truth segments
  std::optional<double> avg_map;
  std::vector<std::string> class_names;
  // per_class_ap[t][c] at iou_thresholds[t]; absent for classes without gt.
  std::vector<std::vector<std::optional<double>>> per_class_ap;
  std::size_t n_videos = 0;
  std::size_t n_frames = 0;
  std::size_t n_positive_frames = 0;
  std::size_t n_gt_segments = 0;
  std::size_t n_pred_segments = 0;
  ProposalConfig proposals;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

EvalReport evaluate_scores(std::span<const VideoScores> videos, const std::vector<std::string>& class_names,
                           const ProposalConfig& proposals = {});

}  // namespace avlab::metrics
