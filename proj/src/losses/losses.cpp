// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/losses/losses.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace avlab::losses {

using namespace avlab::diff;

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("loss.tau must be > 0");
  if (!(k_ratio > 0.0 && k_ratio <= 1.0)) throw ConfigError("loss.k_ratio must lie in (0, 1]");
  if (!(focal_gamma >= 0.0)) throw ConfigError("loss.focal_gamma must be >= 0");
  if (!(focal_alpha > 0.0)) throw ConfigError("loss.focal_alpha must be > 0");
  for (double w : {bce_w, align_w, task_w, ukd_w}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
}

std::size_t topk_count(std::size_t n, double k_ratio) {
  const auto k = static_cast<std::size_t>(std::floor(double(n) * k_ratio));
  return std::max<std::size_t>(1, k);
}

namespace {

void check_targets(std::span<const std::size_t> targets, std::size_t classes) {
  if (targets.empty()) throw ContractError("loss needs at least one target class");
  for (auto t : targets) {
    if (t >= classes) {
      throw ContractError("target class " + std::to_string(t) + " out of range for " + std::to_string(classes) +
                          " classes");
    }
  }
}

// Sum over targets of f(t), in target order.
template <class Real, class F>
Var<Real> sum_over(std::span<const std::size_t> targets, F f) {
  Var<Real> acc = f(targets[0]);
  for (std::size_t i = 1; i < targets.size(); ++i) acc = add(acc, f(targets[i]));
  return acc;
}

}  // namespace

template <class Real>
Var<Real> topk_bce(Var<Real> a, bool y, std::size_t k) {
  auto p = clamp(topk_mean(a, k), kBceClamp, 1.0 - kBceClamp);
  if (y) return scale(log(p), -1.0);
  return scale(log(add_scalar(scale(p, -1.0), 1.0)), -1.0);
}

template <class Real>
Var<Real> mil_align_scores(Var<Real> m, std::size_t k) {
  if (k > m.rows()) {
    spdlog::warn("MIL-Align: K = {} exceeds {} frames, clamped", k, m.rows());
    k = m.rows();
  }
  return topk_mean_cols(m, k);
}

template <class Real>
Var<Real> nce_from_scores(Var<Real> s, double tau, std::span<const std::size_t> targets) {
  if (!(tau > 0.0)) throw ConfigError("nce: tau must be > 0");
  check_targets(targets, s.cols());
  auto log_p = log_softmax(scale(s, 1.0 / tau), 1);
  auto total = sum_over<Real>(targets, [&](std::size_t t) { return select(log_p, 0, t); });
  return scale(total, -1.0 / double(targets.size()));
}

template <class Real>
Var<Real> focal(Var<Real> p, std::span<const std::size_t> targets, double gamma, double alpha) {
  check_targets(targets, p.cols());
  auto total = sum_over<Real>(targets, [&](std::size_t t) {
    auto p_t = select(p, 0, t);
    auto w = pow_scalar(add_scalar(scale(p_t, -1.0), 1.0), gamma);
    return mul(w, log(p_t));
  });
  return scale(total, -alpha / double(targets.size()));
}

template <class Real>
Var<Real> focal_from_log_probs(Var<Real> log_p, std::span<const std::size_t> targets, double gamma, double alpha) {
  check_targets(targets, log_p.cols());
  // exp of a non-positive value never rounds above 1, so 1 - exp(lp) is a
  // valid pow base without clamping.
  for (Real v : log_p.values()) {
    if (v > Real(0)) throw DomainError("focal: log-probability " + std::to_string(static_cast<double>(v)) + " > 0");
  }
  auto total = sum_over<Real>(targets, [&](std::size_t t) {
    auto lp_t = select(log_p, 0, t);
    auto w = pow_scalar(add_scalar(scale(exp(lp_t), -1.0), 1.0), gamma);
    return mul(w, lp_t);
  });
  return scale(total, -alpha / double(targets.size()));
}

template <class Real>
Var<Real> align_loss(Var<Real> m, std::size_t k, const LossConfig& cfg, std::span<const std::size_t> targets) {
  auto s = mil_align_scores(m, k);
  auto nce = nce_from_scores(s, cfg.tau, targets);
  auto log_p = log_softmax(scale(s, 1.0 / cfg.tau), 1);
  auto foc = focal_from_log_probs(log_p, targets, cfg.focal_gamma, cfg.focal_alpha);
  return scale(add(nce, foc), 0.5);
}

template <class Real>
Var<Real> ukd_loss(Var<Real> x_av, Var<Real> x_vs, Var<Real> log_var) {
  if (x_av.shape() != x_vs.shape()) {
    throw DimensionError("ukd_loss: teacher " + x_av.shape().str() + " and student " + x_vs.shape().str() +
                         " features differ");
  }
  if (log_var.rows() != x_av.rows() || log_var.cols() != 1) {
    throw DimensionError("ukd_loss: log-variance " + log_var.shape().str() + " does not match " +
                         std::to_string(x_av.rows()) + " frames");
  }
  auto sq = row_sum(square(sub(x_av, x_vs)));
  auto weighted = mul(sq, exp(scale(log_var, -1.0)));
  return mean(add(weighted, log_var));
}

template <class Real>
BranchLosses<Real> dual_branch_loss(const model::GraphOutputs<Real>& out, std::span<const std::uint8_t> label,
                                    const LossConfig& cfg) {
  if (label.size() != out.m.cols()) {
    throw DimensionError("label has " + std::to_string(label.size()) + " classes, model has " +
                         std::to_string(out.m.cols()));
  }
  std::vector<std::size_t> targets;
  for (std::size_t c = 0; c < label.size(); ++c) {
    if (label[c]) targets.push_back(c);
  }
  if (targets.empty()) throw DataError("video label has no positive class");
  const bool anomalous = !(targets.size() == 1 && targets[0] == 0);
  const std::size_t k = topk_count(out.a.rows(), cfg.k_ratio);
  BranchLosses<Real> l;
  l.bce = topk_bce(out.a, anomalous, k);
  l.align = align_loss(out.m, k, cfg, targets);
  l.total = add(scale(l.bce, cfg.bce_w), scale(l.align, cfg.align_w));
  return l;
}

#define AVLAB_INSTANTIATE_LOSSES(R)                                                                          \
  template Var<R> topk_bce(Var<R>, bool, std::size_t);                                                      \
  template Var<R> mil_align_scores(Var<R>, std::size_t);                                                    \
  template Var<R> nce_from_scores(Var<R>, double, std::span<const std::size_t>);                            \
  template Var<R> focal(Var<R>, std::span<const std::size_t>, double, double);                              \
  template Var<R> focal_from_log_probs(Var<R>, std::span<const std::size_t>, double, double);               \
  template Var<R> align_loss(Var<R>, std::size_t, const LossConfig&, std::span<const std::size_t>);         \
  template Var<R> ukd_loss(Var<R>, Var<R>, Var<R>);                                                         \
  template BranchLosses<R> dual_branch_loss(const model::GraphOutputs<R>&, std::span<const std::uint8_t>, \
                                            const LossConfig&);

AVLAB_INSTANTIATE_LOSSES(float)
AVLAB_INSTANTIATE_LOSSES(double)

}  // namespace avlab::losses
