// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "avlab/featureio/manifest.hpp"
#include "avlab/metrics/metrics.hpp"
#include "avlab/model/checkpoint.hpp"
#include "avlab/model/forward.hpp"
#include "avlab/train/dataset.hpp"

namespace avlab::train {

// Fine-grained curve for class c: A[i] * softmax(M[i, :] / tau)[c].
Matrix<double> class_curves(std::span<const float> a, const Matrix<float>& m, double tau);

// Raw per-video score matrix N x (1 + C): column 0 is A, then M.
Matrix<float> score_matrix(const model::DetectionOutput& det);

// Runs a checkpoint over loaded samples; returns one score matrix per sample.
std::vector<Matrix<float>> score_samples(const model::Checkpoint& ckpt, const std::vector<VideoSample>& samples);

// Data options matching what a checkpoint consumes.
DataOptions data_options_for(const model::Checkpoint& ckpt, bool load_gt);

// Score matrices at model resolution -> VideoScores at raw frame resolution.
metrics::VideoScores to_video_scores(const VideoSample& sample, const Matrix<float>& scores, double tau);

metrics::EvalReport evaluate(const model::Checkpoint& ckpt, const io::Manifest& manifest,
                             const metrics::ProposalConfig& proposals = {});

// Writes <out_dir>/<video_id>.scores.avfe (AVFE tag 2) for every video.
void write_score_dump(const model::Checkpoint& ckpt, const io::Manifest& manifest,
                      const std::filesystem::path& out_dir);

// Evaluates score files from `scores_dir` (named as by write_score_dump)
// against the manifest's ground truth. tau defaults to the loss default.
metrics::EvalReport evaluate_score_dump(const io::Manifest& manifest, const std::filesystem::path& scores_dir,
                                        double tau, const metrics::ProposalConfig& proposals = {});

}  // namespace avlab::train
