// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "avlab/model/params.hpp"

namespace avlab::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, as in AdamW

  void validate() const;
};

// Adam over the trainable entries of a ModelParams. Moments are kept in
// double; frozen entries are never touched.
class Adam {
 public:
  Adam(const model::ModelParams& params, AdamConfig cfg);

  // grads[i] pairs with params.entries()[i]; entries for frozen parameters
  // are ignored and may be empty.
  void step(model::ModelParams& params, const std::vector<std::vector<double>>& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace avlab::train
