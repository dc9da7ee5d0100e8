// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/adam.hpp"

#include <cmath>

namespace avlab::train {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
}

Adam::Adam(const model::ModelParams& params, AdamConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  for (const auto& e : params.entries()) {
    const std::size_t n = e.trainable ? e.value.size() : 0;
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void Adam::step(model::ModelParams& params, const std::vector<std::vector<double>>& grads) {
  auto& entries = params.entries();
  if (grads.size() != entries.size()) throw ContractError("Adam::step: gradient list does not match parameters");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (!e.trainable) continue;
    const auto& g = grads[i];
    if (g.size() != e.value.size()) {
      throw ContractError("Adam::step: gradient for '" + e.name + "' has " + std::to_string(g.size()) + " entries");
    }
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      double w = e.value.data[j];
      if (cfg_.weight_decay > 0.0) w -= cfg_.lr * cfg_.weight_decay * w;
      w -= cfg_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
      e.value.data[j] = static_cast<float>(w);
    }
  }
  params.check_finite();
}

}  // namespace avlab::train
