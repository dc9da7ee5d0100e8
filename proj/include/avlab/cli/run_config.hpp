// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration shared by all subcommands. Sources are layered as
// built-in defaults < preset < config file < --set overrides; later layers
// win key by key.
#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "avlab/featureio/synth.hpp"
#include "avlab/metrics/metrics.hpp"
#include "avlab/train/trainer.hpp"

namespace avlab::cli {

struct Paths {
  std::string data_dir = "data";
  std::string train_manifest;  // empty: <data_dir>/train.jsonl
  std::string test_manifest;   // empty: <data_dir>/test.jsonl
  std::string out_dir = "runs";

  std::filesystem::path train_path() const;
  std::filesystem::path test_path() const;
};

struct RunConfig {
  std::uint64_t seed = 42;  // feeds synth ("data") and training ("init", "shuffle")
  io::SynthConfig synth;
  train::TrainConfig train;
  metrics::ProposalConfig eval;
  Paths paths;
  bool record_timing = false;  // wall-clock fields in reports

  nlohmann::ordered_json to_json() const;
  // Strict: every key must exist in the defaults and have a compatible type.
  static RunConfig from_json(const nlohmann::json& j);
};

struct KeyDoc {
  std::string key;  // dotted, e.g. "train.lr"
  std::string default_value;
  std::string help;
};

// Every key of the configuration with its default, in file order.
std::vector<KeyDoc> key_docs();

std::vector<std::string> preset_names();
// Partial configuration for a named preset ("desk", "full").
nlohmann::json preset(const std::string& name);

// Layers `patch` onto `base`. Unknown keys and type mismatches throw
// ConfigError naming the key and `source`.
void merge_checked(nlohmann::ordered_json& base, const nlohmann::json& patch, const std::string& source);

// "section.key=value"; value is parsed as JSON when possible, else taken as
// a string.
nlohmann::json parse_override(const std::string& assignment);

// Builds the resolved configuration from the layers.
RunConfig resolve(const std::string& preset_name, const std::filesystem::path& config_file,
                  const std::vector<std::string>& overrides);

}  // namespace avlab::cli
