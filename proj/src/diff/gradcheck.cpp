// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace avlab::diff {

double GradcheckReport::worst() const {
  double w = 0.0;
  for (double e : max_rel_err) w = std::max(w, e);
  return w;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-8);
}

std::vector<std::uint32_t> branch_signature(const Tape<double>& tape) {
  std::vector<std::uint32_t> sig;
  for (const auto& rec : tape.records()) {
    const auto& in = tape.node(rec.inputs[0]).value;
    switch (rec.kind) {
      case OpKind::relu:
        for (double x : in) sig.push_back(x > 0.0);
        break;
      case OpKind::clamp:
        for (double x : in) sig.push_back(x < rec.a ? 0 : x > rec.b ? 2 : 1);
        break;
      case OpKind::topk_mean:
      case OpKind::topk_mean_cols:
        sig.insert(sig.end(), rec.indices.begin(), rec.indices.end());
        break;
      default:
        break;
    }
  }
  return sig;
}

namespace {

struct Probe {
  double value;
  std::vector<std::uint32_t> signature;
};

Probe evaluate(const GraphBuilder& build, std::span<const Matrix<double>> inputs) {
  Tape<double> tape;
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& m : inputs) leaves.push_back(tape.constant(m));
  const Var<double> root = build(tape, leaves);
  if (root.shape().size() != 1) throw ContractError("gradcheck: graph root has shape " + root.shape().str());
  return {root.item(), branch_signature(tape)};
}

}  // namespace

GradcheckReport gradcheck(const GraphBuilder& build, std::span<const Matrix<double>> inputs, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw ConfigError("gradcheck: eps " + std::to_string(eps) + " outside [1e-6, 1e-3]");
  }

  Tape<double> tape;
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m, true));
  const Var<double> root = build(tape, leaves);
  if (root.shape().size() != 1) throw ContractError("gradcheck: graph root has shape " + root.shape().str());
  tape.backward(root);
  const auto base = branch_signature(tape);

  GradcheckReport report;
  std::vector<Matrix<double>> probe(inputs.begin(), inputs.end());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto analytic = leaves[b].grad_matrix();
    double worst = 0.0;
    for (std::size_t i = 0; i < probe[b].data.size(); ++i) {
      const double x0 = inputs[b].data[i];
      probe[b].data[i] = x0 + eps;
      const auto fp = evaluate(build, probe);
      probe[b].data[i] = x0 - eps;
      const auto fm = evaluate(build, probe);
      probe[b].data[i] = x0;
      report.kink_crossings += (fp.signature != base) + (fm.signature != base);
      const double numeric = (fp.value - fm.value) / (2.0 * eps);
      worst = std::max(worst, relative_error(analytic.data[i], numeric));
    }
    report.max_rel_err.push_back(worst);
  }
  return report;
}

}  // namespace avlab::diff
