// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avlab/metrics/metrics.hpp"
#include "metric_oracles.hpp"

using namespace avlab;
using namespace avlab::metrics;

TEST_CASE("frame_ap: examples") {
  const std::vector<std::uint8_t> gt = {0, 1, 1, 0, 1, 0};
  const std::vector<double> same(gt.begin(), gt.end());
  CHECK(frame_ap(same, gt) == 1.0);

  std::vector<double> s(10, 0.1);
  std::vector<std::uint8_t> one(10, 0);
  one[4] = 1;
  s[4] = 0.9;
  CHECK(frame_ap(s, one) == 1.0);

  CHECK_FALSE(frame_ap(s, std::vector<std::uint8_t>(10, 0)).has_value());
  CHECK_THROWS_AS(frame_ap(s, gt), DimensionError);
}

TEST_CASE("frame_ap: anti-ordered ranking, 5 positives under 5 negatives") {
  // Positives sit at ranks 6..10: AP = (1/6 + 2/7 + 3/8 + 4/9 + 5/10) / 5
  // = 893 / 2520.
  std::vector<double> s;
  std::vector<std::uint8_t> gt;
  for (int i = 0; i < 10; ++i) {
    s.push_back(1.0 - 0.1 * i);
    gt.push_back(i >= 5);
  }
  const double ap = *frame_ap(s, gt);
  CHECK(ap == doctest::Approx(893.0 / 2520.0).epsilon(1e-15));
  CHECK(ap == *avtest::oracle_frame_ap(s, gt));

  // Exhaustive: mean over all 252 placements of 5 positives among 10 ranks
  // agrees with the closed form rank by rank.
  long double total = 0;
  int count = 0;
  for (int mask = 0; mask < 1024; ++mask) {
    if (__builtin_popcount(mask) != 5) continue;
    std::vector<std::uint8_t> g(10);
    for (int i = 0; i < 10; ++i) g[i] = (mask >> i) & 1;
    long double ref = 0;
    int hits = 0;
    for (int i = 0; i < 10; ++i)
      if (g[i]) ref += (long double)(++hits) / (i + 1);
    ref /= 5;
    CHECK(std::abs(*frame_ap(s, g) - double(ref)) < 1e-15);
    total += ref;
    ++count;
  }
  CHECK(count == 252);
}

TEST_CASE("frame_ap: ties count as one group") {
  // All equal: AP is the prevalence.
  const std::vector<double> flat(8, 0.5);
  const std::vector<std::uint8_t> gt = {1, 0, 0, 1, 0, 0, 0, 1};
  CHECK(*frame_ap(flat, gt) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
  // Order of tied entries does not matter.
  const std::vector<double> s = {0.9, 0.5, 0.5, 0.5, 0.1};
  CHECK(*frame_ap(s, std::vector<std::uint8_t>{0, 1, 0, 0, 1}) == *frame_ap(s, std::vector<std::uint8_t>{0, 0, 0, 1, 1}));
}

TEST_CASE("frame_ap: brute-force oracle on 200 instances") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = avtest::random_instance(seed);
    CHECK(frame_ap(m.scores, m.gt) == avtest::oracle_frame_ap(m.scores, m.gt));
  }
}

TEST_CASE("frame_ap: invariant under strictly monotone transforms") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = avtest::random_instance(seed);
    auto t1 = m.scores, t2 = m.scores;
    for (auto& v : t1) v = std::exp(3.0 * v) - 7.0;
    for (auto& v : t2) v = std::atan(v - 0.5) * 1e3;
    CHECK(frame_ap(t1, m.gt) == frame_ap(m.scores, m.gt));
    CHECK(frame_ap(t2, m.gt) == frame_ap(m.scores, m.gt));
  }
}

TEST_CASE("iou") {
  CHECK(iou({0, 1, 0, 10}, {0, 1, 0, 10}) == 1.0);
  CHECK(iou({0, 1, 0, 5}, {0, 1, 5, 10}) == 0.0);
  CHECK(iou({0, 1, 0, 10}, {0, 1, 7, 10}) == 0.3);
  CHECK(iou({0, 1, 0, 4}, {0, 1, 2, 6}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("proposals_from_curve: examples") {
  CHECK(proposals_from_curve(std::vector<double>(6, 0.2), 0.5, 1).empty());
  std::vector<double> c(10, 0.1);
  for (int i = 3; i < 7; ++i) c[i] = 0.9;
  const auto one = proposals_from_curve(c, 0.5, 2, 2, 4);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Segment{4, 2, 3, 7, 0.9});

  // Sawtooth, enumerated by hand: runs above 0.5 are [1,4), [5,6), [7,9).
  const std::vector<double> saw = {0.2, 0.6, 0.8, 0.6, 0.2, 0.6, 0.2, 0.95, 0.95, 0.1};
  const auto r1 = proposals_from_curve(saw, 0.5, 1);
  REQUIRE(r1.size() == 3);
  CHECK(r1[0].start == 1);
  CHECK(r1[0].end == 4);
  CHECK(r1[0].score == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r1[1].start == 5);
  CHECK(r1[1].end == 6);
  CHECK(r1[2].start == 7);
  CHECK(r1[2].end == 9);
  CHECK(r1[2].score == 0.95);
  CHECK(proposals_from_curve(saw, 0.5, 2).size() == 2);
  // At 0.7 only [2,3) and [7,9) exceed.
  const auto r2 = proposals_from_curve(saw, 0.7, 1);
  REQUIRE(r2.size() == 2);
  CHECK(r2[0].start == 2);
  CHECK(r2[0].end == 3);
  // Exactly at the threshold is not above it.
  CHECK(proposals_from_curve(std::vector<double>{0.5, 0.5}, 0.5, 1).empty());
  CHECK_THROWS_AS(proposals_from_curve(saw, 1.0, 1), ConfigError);
}

TEST_CASE("sweep_proposals pools thresholds and deduplicates") {
  const std::vector<double> saw = {0.2, 0.6, 0.8, 0.6, 0.2, 0.6, 0.2, 0.95, 0.95, 0.1};
  ProposalConfig cfg;
  cfg.thresholds = {0.5, 0.55, 0.7};
  cfg.min_len = 1;
  const auto s = sweep_proposals(saw, cfg, 1);
  // 0.5 and 0.55 give the same three runs; 0.7 adds [2,3) and repeats [7,9).
  CHECK(s.size() == 4);
}

TEST_CASE("segments_from_mask") {
  const std::vector<std::uint8_t> mask = {0, 2, 2, 0, 1, 1, 1, 2};
  const auto s = segments_from_mask(mask, 3);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == Segment{3, 2, 1, 3, 1.0});
  CHECK(s[1] == Segment{3, 1, 4, 7, 1.0});
  CHECK(s[2] == Segment{3, 2, 7, 8, 1.0});
}

TEST_CASE("map_at_iou: identical predictions and the IoU boundary") {
  const std::vector<Segment> gts = {{0, 1, 0, 10, 1}, {0, 2, 20, 30, 1}, {1, 1, 5, 9, 1}};
  for (double t : kIouThresholds) CHECK(map_at_iou(gts, gts, t, 3) == 1.0);

  // IoU exactly 3/10.
  const std::vector<Segment> g = {{0, 1, 0, 10, 1}};
  const std::vector<Segment> p = {{0, 1, 7, 10, 0.8}};
  CHECK(map_at_iou(p, g, 0.1, 2) == 1.0);
  CHECK(map_at_iou(p, g, 0.2, 2) == 1.0);
  CHECK(map_at_iou(p, g, 0.3, 2) == 1.0);
  CHECK(map_at_iou(p, g, 0.4, 2) == 0.0);
  CHECK(map_at_iou(p, g, 0.5, 2) == 0.0);

  // Other videos and classes never match.
  const std::vector<Segment> wrong = {{1, 1, 0, 10, 0.9}, {0, 2, 0, 10, 0.9}};
  CHECK(map_at_iou(wrong, g, 0.1, 3) == 0.0);
  CHECK_FALSE(map_at_iou(wrong, {}, 0.1, 3).has_value());
}

TEST_CASE("map_at_iou: one-to-one greedy matching") {
  // Two predictions on one ground truth: the second is a false positive.
  const std::vector<Segment> g = {{0, 1, 0, 10, 1}};
  const std::vector<Segment> p = {{0, 1, 0, 10, 0.9}, {0, 1, 0, 9, 0.8}};
  CHECK(*map_at_iou(p, g, 0.5, 2) == 1.0);
  const std::vector<Segment> p2 = {{0, 1, 0, 9, 0.7}, {0, 1, 0, 10, 0.8}};
  CHECK(*map_at_iou(p2, g, 0.5, 2) == 1.0);
  const std::vector<Segment> g2 = {{0, 1, 0, 10, 1}, {0, 1, 40, 50, 1}};
  CHECK(*map_at_iou(p, g2, 0.5, 2) == 0.5);
}

TEST_CASE("map_at_iou: brute-force oracle on 200 instances") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = avtest::random_instance(seed);
    for (int tenths = 1; tenths <= 5; ++tenths) {
      const double t = tenths / 10.0;
      CHECK(class_ap_at_iou(m.preds, m.gts, t, m.num_classes) ==
            avtest::oracle_class_ap(m.preds, m.gts, tenths, m.num_classes));
      CHECK(map_at_iou(m.preds, m.gts, t, m.num_classes) == avtest::oracle_map(m.preds, m.gts, tenths, m.num_classes));
    }
  }
}

TEST_CASE("map_at_iou: non-increasing in the IoU threshold") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = avtest::random_instance(seed);
    double prev = 2.0;
    for (double t : kIouThresholds) {
      const double v = map_at_iou(m.preds, m.gts, t, m.num_classes).value();
      CHECK(v <= prev);
      prev = v;
    }
  }
}

namespace {

std::vector<VideoScores> oracle_videos(std::uint64_t seed, bool perfect) {
  Rng rng(seed);
  std::vector<VideoScores> out;
  for (int v = 0; v < 4; ++v) {
    VideoScores s;
    s.video_id = "v" + std::to_string(v);
    const auto n = std::size_t(rng.uniform_int(20, 60));
    s.gt.assign(n, 0);
    if (v % 2) {
      const auto start = std::size_t(rng.uniform_int(0, std::int64_t(n) - 10));
      std::fill(s.gt.begin() + start, s.gt.begin() + start + 8, std::uint8_t(1 + v % 3));
    }
    s.a.resize(n);
    s.class_curves = Matrix<double>(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      s.a[i] = perfect ? (s.gt[i] ? 1.0 : 0.0) : rng.uniform();
      for (std::size_t c = 1; c < 4; ++c)
        s.class_curves(i, c) = perfect ? (s.gt[i] == c ? 0.95 : 0.0) : rng.uniform();
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<std::string> kClasses = {"normal", "a", "b", "c"};

}  // namespace

TEST_CASE("evaluate_scores: perfect oracle scores give AP and mAP of 1") {
  const auto r = evaluate_scores(oracle_videos(1, true), kClasses);
  CHECK(r.frame_ap == 1.0);
  CHECK(r.avg_map == 1.0);
  for (double m : r.map_per_iou) CHECK(m == 1.0);
  CHECK(r.n_videos == 4);
  CHECK(r.n_gt_segments == 2);
}

TEST_CASE("evaluate_scores: AVG is the mean of the five thresholds") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = evaluate_scores(oracle_videos(seed, false), kClasses);
    REQUIRE(r.map_per_iou.size() == 5);
    const double mean = std::accumulate(r.map_per_iou.begin(), r.map_per_iou.end(), 0.0) / 5.0;
    CHECK(std::abs(*r.avg_map - mean) <= 1e-12);
    CHECK(r.iou_thresholds == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  }
}

TEST_CASE("evaluate_scores: missing ground truth and bad shapes") {
  auto vids = oracle_videos(2, false);
  vids[0].gt.clear();
  const auto r = evaluate_scores(vids, kClasses);
  REQUIRE_FALSE(r.notes.empty());
  CHECK(r.notes[0].find("1 of 4") != std::string::npos);
  for (auto& v : vids) v.gt.clear();
  const auto none = evaluate_scores(vids, kClasses);
  CHECK_FALSE(none.frame_ap.has_value());
  CHECK_FALSE(none.avg_map.has_value());

  auto bad = oracle_videos(3, false);
  bad[1].gt.pop_back();
  CHECK_THROWS_AS(evaluate_scores(bad, kClasses), DataError);
  bad = oracle_videos(3, false);
  bad[1].class_curves = Matrix<double>(2, 4);
  CHECK_THROWS_AS(evaluate_scores(bad, kClasses), DimensionError);
}

TEST_CASE("EvalReport JSON round trip") {
  const auto r = evaluate_scores(oracle_videos(4, false), kClasses);
  const auto j = r.to_json();
  const auto back = EvalReport::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.to_json() == j);
  CHECK(back.frame_ap == r.frame_ap);
  CHECK(back.map_per_iou == r.map_per_iou);
  CHECK_THROWS_AS(EvalReport::from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("random scores: AP is near the prevalence over 20 seeds") {
  double total = 0, prevalence = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, "prevalence");
    std::vector<double> s(2000);
    std::vector<std::uint8_t> gt(2000);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.uniform();
      pos += gt[i] = rng.bernoulli(0.2);
    }
    total += *frame_ap(s, gt);
    prevalence += double(pos) / double(s.size());
  }
  CHECK(std::abs(total / 20 - prevalence / 20) < 0.02);
}
