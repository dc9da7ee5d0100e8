// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avlab/diff/ops.hpp"
#include "avlab/model/forward.hpp"

namespace avlab::losses {

using diff::Var;

struct LossConfig {
  double k_ratio = 1.0 / 16.0;
  double tau = 0.07;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double bce_w = 1.0;
  double align_w = 1.0;
  double task_w = 1.0;  // student only
  double ukd_w = 1.0;   // distillation only

  void validate() const;
};

inline constexpr double kBceClamp = 1e-8;

// K = max(1, floor(n * k_ratio)).
std::size_t topk_count(std::size_t n, double k_ratio);

// p = topk_mean(A, k), loss = -[y log p + (1 - y) log(1 - p)] with p clamped
// to [1e-8, 1 - 1e-8]. A is N x 1.
template <class Real>
Var<Real> topk_bce(Var<Real> a, bool y, std::size_t k);

// Per-class mean of the top-k entries of each column of M (N x C) -> 1 x C.
// k > N is clamped to N with a warning.
template <class Real>
Var<Real> mil_align_scores(Var<Real> m, std::size_t k);

// -log softmax(S / tau)[t], averaged over the target classes. S is 1 x C.
template <class Real>
Var<Real> nce_from_scores(Var<Real> s, double tau, std::span<const std::size_t> targets);

// -alpha (1 - p_t)^gamma log p_t averaged over the targets, for a probability
// row p (1 x C).
template <class Real>
Var<Real> focal(Var<Real> p, std::span<const std::size_t> targets, double gamma, double alpha);
// Same loss from log-probabilities (all entries <= 0, else DomainError);
// avoids log(0) when p_t underflows.
template <class Real>
Var<Real> focal_from_log_probs(Var<Real> log_p, std::span<const std::size_t> targets, double gamma, double alpha);

// (nce + focal) / 2 on the MIL-Align scores of M.
template <class Real>
Var<Real> align_loss(Var<Real> m, std::size_t k, const LossConfig& cfg, std::span<const std::size_t> targets);

// mean_i [ ||x_av_i - x_vs_i||^2 exp(-log_var_i) + log_var_i ]. x_av and x_vs
// are L x d, log_var is L x 1. The caller passes teacher features as a
// constant so no gradient reaches the teacher.
template <class Real>
Var<Real> ukd_loss(Var<Real> x_av, Var<Real> x_vs, Var<Real> log_var);

template <class Real>
struct BranchLosses {
  Var<Real> total;  // bce_w * bce + align_w * align
  Var<Real> bce;
  Var<Real> align;
};

// Both branch losses for one video. `label` is the multi-hot video label;
// a normal video targets class 0 in the alignment branch.
template <class Real>
BranchLosses<Real> dual_branch_loss(const model::GraphOutputs<Real>& out, std::span<const std::uint8_t> label,
                                    const LossConfig& cfg);

}  // namespace avlab::losses
