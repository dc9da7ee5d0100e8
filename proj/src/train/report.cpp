// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/trainer.hpp"

namespace avlab::train {

nlohmann::ordered_json RunReport::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["param_count"] = param_count;
  j["optimizer_steps"] = optimizer_steps;
  auto epochs_json = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    nlohmann::ordered_json ej{{"epoch", e.epoch}, {"total", e.total}, {"bce", e.bce}, {"align", e.align},
                              {"ukd", e.ukd}};
    if (include_timing) ej["wall_seconds"] = e.wall_seconds;
    epochs_json.push_back(ej);
  }
  j["epochs"] = epochs_json;
  j["eval"] = eval ? eval->to_json() : nlohmann::ordered_json(nullptr);
  if (include_timing) j["wall_seconds"] = wall_seconds;
  j["config"] = config;
  return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  try {
    RunReport r;
    r.mode = j.at("mode").get<std::string>();
    r.param_count = j.at("param_count").get<std::size_t>();
    r.optimizer_steps = j.at("optimizer_steps").get<std::size_t>();
    for (const auto& e : j.at("epochs")) {
      EpochLog log;
      log.epoch = e.at("epoch").get<std::size_t>();
      log.total = e.at("total").get<double>();
      log.bce = e.at("bce").get<double>();
      log.align = e.at("align").get<double>();
      log.ukd = e.at("ukd").get<double>();
      log.wall_seconds = e.value("wall_seconds", 0.0);
      r.epochs.push_back(log);
    }
    if (!j.at("eval").is_null()) r.eval = metrics::EvalReport::from_json(j.at("eval"));
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run report: ") + e.what());
  }
}

}  // namespace avlab::train
