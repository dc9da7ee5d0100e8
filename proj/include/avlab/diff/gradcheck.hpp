// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "avlab/diff/ops.hpp"

namespace avlab::diff {

// Builds a scalar graph from leaves bound to the given inputs, in order.
using GraphBuilder = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

struct GradcheckReport {
  // Worst |a - b| / (|a| + |b| + 1e-8) per input block.
  std::vector<double> max_rel_err;
  // Probes whose branch signature differed from the base point. Their
  // entries are still compared, so a nonzero count explains large errors.
  std::size_t kink_crossings = 0;

  double worst() const;
};

double relative_error(double analytic, double numeric);

// Compares tape gradients against central differences
// (f(x + eps) - f(x - eps)) / (2 eps), element by element. Runs in double.
// eps must lie in [1e-6, 1e-3]; the builder must return a 1 x 1 node.
GradcheckReport gradcheck(const GraphBuilder& build, std::span<const Matrix<double>> inputs, double eps = 1e-4);

// Which side of every non-differentiable point the graph is on: relu signs,
// clamp regions and top-k selections. Central differences are meaningful
// only while this stays fixed across the +-eps probes.
std::vector<std::uint32_t> branch_signature(const Tape<double>& tape);

}  // namespace avlab::diff
