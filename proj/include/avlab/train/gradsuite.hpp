// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks of every differentiable operation and of the two
// full training objectives, on small random problems.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avlab/losses/losses.hpp"
#include "avlab/model/params.hpp"

namespace avlab::train {

struct GradCase {
  std::string name;
  double worst = 0.0;  // largest relative error over all checked entries
};

struct GradSuiteConfig {
  double eps = 1e-4;
  std::size_t frames = 6;
  std::size_t d = 8;
  std::size_t num_classes = 3;
  losses::LossConfig loss;
};

// One case per operation plus "teacher_loss" and "ukd_loss".
std::vector<GradCase> gradient_suite(std::uint64_t seed, const GradSuiteConfig& cfg = {});

// Small random model whose zero-initialized tensors are filled with noise,
// so every parameter receives a gradient.
model::ModelParams perturbed_params(model::Architecture arch, const model::ModelDims& dims, std::uint64_t seed);

// Full teacher objective (adaptive fusion, prompt on) and full distillation
// objective as gradcheck cases over every trainable parameter.
GradCase check_teacher_loss(std::uint64_t seed, const GradSuiteConfig& cfg);
GradCase check_ukd_loss(std::uint64_t seed, const GradSuiteConfig& cfg);

}  // namespace avlab::train
