// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "avlab/featureio/manifest.hpp"
#include "avlab/losses/losses.hpp"
#include "avlab/metrics/metrics.hpp"
#include "avlab/model/checkpoint.hpp"
#include "avlab/model/forward.hpp"
#include "avlab/train/adam.hpp"

namespace avlab::train {

enum class TrainMode { teacher_av, student_visual, student_audio, distill_ukd };

const char* mode_name(TrainMode m);
TrainMode parse_mode(const std::string& s);
model::Architecture architecture_for(TrainMode m);

struct TrainConfig {
  std::uint64_t seed = 42;
  TrainMode mode = TrainMode::teacher_av;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  AdamConfig adam;
  losses::LossConfig loss;
  std::string teacher_checkpoint;       // distill_ukd only
  bool copy_heads_from_teacher = false;  // distill_ukd only
  std::size_t stride = 1;
  std::size_t max_len = 256;
  model::ForwardOptions forward;
  // Hidden widths; 0 picks the default for the data width d.
  std::size_t fusion_hidden = 0;
  std::size_t classifier_hidden = 0;
  std::size_t prompt_hidden = 0;
  std::size_t uncert_hidden = 0;
  std::size_t temporal_window = 9;
  std::string class_embeddings;  // optional AVFE file, tag 3, C x d
  std::size_t threads = 1;
  metrics::ProposalConfig proposals;  // final evaluation

  void validate() const;
  model::ModelDims dims_for(std::size_t d, std::size_t num_classes) const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double total = 0.0;
  double bce = 0.0;
  double align = 0.0;
  double ukd = 0.0;  // distill_ukd only
  double wall_seconds = 0.0;
};

struct RunReport {
  std::string mode;
  nlohmann::json config = nlohmann::json::object();
  std::vector<EpochLog> epochs;
  std::optional<metrics::EvalReport> eval;
  std::size_t param_count = 0;
  std::size_t optimizer_steps = 0;
  double wall_seconds = 0.0;

  // Timing fields are omitted when include_timing is false so that reports
  // of identical runs compare byte for byte.
  nlohmann::ordered_json to_json(bool include_timing) const;
  static RunReport from_json(const nlohmann::json& j);
};

struct TrainResult {
  model::Checkpoint checkpoint;
  RunReport report;
};

// Trains per cfg.mode on `train_set`. When `test_set` is given the final
// model is evaluated on it. `config_echo` is copied into the report.
TrainResult train(const TrainConfig& cfg, const io::Manifest& train_set, const io::Manifest* test_set = nullptr,
                  const nlohmann::json& config_echo = nlohmann::json::object());

}  // namespace avlab::train
