// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "avlab/common/rng.hpp"
#include "avlab/diff/gradcheck.hpp"
#include "avlab/model/forward.hpp"

namespace avlab::train {

using diff::Tape;
using diff::Var;
using M = Matrix<double>;

namespace {

M random(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  M m(r, c);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Keeps entries at least `margin` away from a kink at `at`, where central
// differences are meaningless.
M away_from(M m, double at, double margin) {
  for (auto& v : m.data) {
    if (std::abs(v - at) < margin) v = v < at ? at - margin : at + margin;
  }
  return m;
}

// Entries spaced at least 0.1 apart, in random order, so top-k selection is
// stable under a perturbation of eps.
M distinct(Rng& rng, std::size_t r, std::size_t c) {
  std::vector<std::size_t> rank(r * c);
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng.engine());
  M m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = 0.1 * double(rank[i]) + rng.uniform(-0.02, 0.02) - 1.0;
  return m;
}

// Contracts an output with fixed random weights so that every output entry
// contributes a distinct amount to the scalar.
Var<double> readout(Var<double> y, std::uint64_t seed) {
  Rng rng(seed, "readout");
  auto w = y.tape()->constant(random(rng, y.rows(), y.cols()));
  return diff::sum(diff::mul(y, w));
}

using Unary = std::function<Var<double>(Var<double>)>;
using Binary = std::function<Var<double>(Var<double>, Var<double>)>;

GradCase check(const std::string& name, std::uint64_t seed, std::vector<M> inputs,
               const std::function<Var<double>(std::span<const Var<double>>)>& f, double eps) {
  auto build = [&](Tape<double>&, std::span<const Var<double>> x) { return readout(f(x), seed); };
  return {name, diff::gradcheck(build, inputs, eps).worst()};
}

GradCase unary(const std::string& name, std::uint64_t seed, M x, const Unary& op, double eps) {
  return check(name, seed, {std::move(x)}, [&](auto v) { return op(v[0]); }, eps);
}

GradCase binary(const std::string& name, std::uint64_t seed, M a, M b, const Binary& op, double eps) {
  return check(name, seed, {std::move(a), std::move(b)}, [&](auto v) { return op(v[0], v[1]); }, eps);
}

struct ParamLeaves {
  std::vector<std::string> names;
  std::vector<M> values;
};

ParamLeaves trainable_leaves(const model::ModelParams& p) {
  ParamLeaves out;
  for (const auto& e : p.entries()) {
    if (!e.trainable) continue;
    out.names.push_back(e.name);
    out.values.push_back(e.value.cast<double>());
  }
  return out;
}

model::BoundParams<double> bind_leaves(const model::ModelParams& p, const ParamLeaves& leaves, Tape<double>& tape,
                                       std::span<const Var<double>> x) {
  model::BoundParams<double> bp(p.dims());
  for (const auto& e : p.entries()) {
    if (!e.trainable) bp.set(e.name, tape.constant(e.value.cast<double>()));
  }
  for (std::size_t i = 0; i < leaves.names.size(); ++i) bp.set(leaves.names[i], x[i]);
  return bp;
}

model::ModelDims suite_dims(const GradSuiteConfig& cfg) {
  auto dims = model::ModelDims::defaults(cfg.d, cfg.num_classes);
  dims.prompt_hidden = 2 * cfg.d;
  dims.temporal_window = 3;
  return dims;
}

// Anomalous for odd seeds (two classes), normal for even ones.
std::vector<std::uint8_t> suite_label(std::uint64_t seed, std::size_t num_classes) {
  std::vector<std::uint8_t> y(num_classes, 0);
  if (seed % 2 == 0) {
    y[0] = 1;
  } else {
    y[1] = 1;
    y[num_classes - 1] = 1;
  }
  return y;
}

// Redraws the inputs until no probe crosses a relu, clamp or top-k boundary;
// the one-sided analytic gradient cannot match a difference taken across one.
GradCase check_smooth(const std::string& name, std::uint64_t seed, const ParamLeaves& leaves,
                      const diff::GraphBuilder& build, const std::function<void(Rng&)>& draw, double eps) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    Rng rng(seed, "data/" + std::to_string(attempt));
    draw(rng);
    const auto report = diff::gradcheck(build, leaves.values, eps);
    if (report.kink_crossings == 0) return {name, report.worst()};
  }
  throw NumericError("gradient suite: every draw for seed " + std::to_string(seed) + " straddles a kink");
}

}  // namespace

model::ModelParams perturbed_params(model::Architecture arch, const model::ModelDims& dims, std::uint64_t seed) {
  Rng rng(seed, "init");
  auto p = model::ModelParams::init(arch, dims, rng);
  Rng noise(seed, "perturb");
  for (auto& e : p.entries()) {
    if (!e.trainable) continue;
    for (auto& v : e.value.data) v += static_cast<float>(noise.uniform(-0.2, 0.2));
  }
  return p;
}

GradCase check_teacher_loss(std::uint64_t seed, const GradSuiteConfig& cfg) {
  const auto dims = suite_dims(cfg);
  const auto params = perturbed_params(model::Architecture::teacher, dims, seed);
  const auto leaves = trainable_leaves(params);
  const auto label = suite_label(seed, cfg.num_classes);
  M xv, xa;
  auto build = [&](Tape<double>& tape, std::span<const Var<double>> x) {
    auto bp = bind_leaves(params, leaves, tape, x);
    auto out = model::forward_teacher(bp, tape.constant(xv), tape.constant(xa), {});
    return losses::dual_branch_loss(out, label, cfg.loss).total;
  };
  auto draw = [&](Rng& rng) {
    xv = random(rng, cfg.frames, cfg.d);
    xa = random(rng, cfg.frames, cfg.d);
  };
  return check_smooth("teacher_loss", seed, leaves, build, draw, cfg.eps);
}

GradCase check_ukd_loss(std::uint64_t seed, const GradSuiteConfig& cfg) {
  const auto dims = suite_dims(cfg);
  const auto params = perturbed_params(model::Architecture::student, dims, seed);
  const auto leaves = trainable_leaves(params);
  const auto label = suite_label(seed, cfg.num_classes);
  M xv, x_av;
  auto build = [&](Tape<double>& tape, std::span<const Var<double>> x) {
    auto bp = bind_leaves(params, leaves, tape, x);
    auto out = model::forward_student(bp, tape.constant(xv), true, {});
    auto task = losses::dual_branch_loss(out, label, cfg.loss).total;
    auto ukd = losses::ukd_loss(tape.constant(x_av), out.features, out.log_var);
    return diff::add(diff::scale(task, cfg.loss.task_w), diff::scale(ukd, cfg.loss.ukd_w));
  };
  auto draw = [&](Rng& rng) {
    xv = random(rng, cfg.frames, cfg.d);
    x_av = random(rng, cfg.frames, cfg.d, -2.0, 2.0);
  };
  return check_smooth("ukd_loss", seed, leaves, build, draw, cfg.eps);
}

std::vector<GradCase> gradient_suite(std::uint64_t seed, const GradSuiteConfig& cfg) {
  namespace d = diff;
  using E = d::Elementwise;
  Rng rng(seed, "gradsuite");
  const double eps = cfg.eps;
  std::vector<GradCase> out;
  auto x = [&](std::size_t r = 4, std::size_t c = 3) { return random(rng, r, c); };
  auto pos = [&](std::size_t r = 4, std::size_t c = 3) { return random(rng, r, c, 0.5, 2.0); };

  out.push_back(binary("matmul", seed, x(4, 3), x(3, 5), [](auto a, auto b) { return d::matmul(a, b); }, eps));
  out.push_back(unary("transpose", seed, x(), [](auto a) { return d::transpose(a); }, eps));
  out.push_back(binary("add", seed, x(), x(), [](auto a, auto b) { return d::add(a, b); }, eps));
  out.push_back(binary("sub", seed, x(), x(), [](auto a, auto b) { return d::sub(a, b); }, eps));
  out.push_back(binary("mul", seed, x(), x(), [](auto a, auto b) { return d::mul(a, b); }, eps));
  out.push_back(binary("add_row", seed, x(), x(1, 3), [](auto a, auto b) { return d::add_row(a, b); }, eps));
  out.push_back(unary("scale", seed, x(), [](auto a) { return d::scale(a, -1.7); }, eps));
  out.push_back(unary("add_scalar", seed, x(), [](auto a) { return d::add_scalar(a, 0.3); }, eps));
  out.push_back(binary("div_by_scalar", seed, x(), pos(1, 1), [](auto a, auto s) { return d::div_by_scalar(a, s); },
                       eps));
  out.push_back(unary("sigmoid", seed, x(), [](auto a) { return d::sigmoid(a); }, eps));
  out.push_back(unary("gelu", seed, x(), [](auto a) { return d::gelu(a); }, eps));
  out.push_back(unary("relu", seed, away_from(x(), 0.0, 0.05), [](auto a) { return d::relu(a); }, eps));
  out.push_back(unary("log", seed, pos(), [](auto a) { return d::log(a); }, eps));
  out.push_back(unary("exp", seed, x(), [](auto a) { return d::exp(a); }, eps));
  out.push_back(unary("square", seed, x(), [](auto a) { return d::square(a); }, eps));
  out.push_back(unary("pow_scalar", seed, pos(), [](auto a) { return d::pow_scalar(a, 1.5); }, eps));
  out.push_back(unary("clamp", seed, away_from(away_from(x(), -0.5, 0.05), 0.5, 0.05),
                      [](auto a) { return d::clamp(a, -0.5, 0.5); }, eps));
  out.push_back(unary("softmax_rows", seed, x(), [](auto a) { return d::softmax(a, 1); }, eps));
  out.push_back(unary("softmax_cols", seed, x(), [](auto a) { return d::softmax(a, 0); }, eps));
  out.push_back(unary("log_softmax_rows", seed, x(), [](auto a) { return d::log_softmax(a, 1); }, eps));
  out.push_back(unary("log_softmax_cols", seed, x(), [](auto a) { return d::log_softmax(a, 0); }, eps));
  out.push_back(binary("conv1d", seed, x(6, 3), x(9, 4), [](auto a, auto k) { return d::conv1d(a, k, 3, 1); }, eps));
  out.push_back(unary("topk_mean", seed, distinct(rng, 6, 1), [](auto a) { return d::topk_mean(a, 2); }, eps));
  out.push_back(unary("topk_mean_cols", seed, distinct(rng, 6, 3), [](auto a) { return d::topk_mean_cols(a, 2); },
                      eps));
  out.push_back(unary("sum", seed, x(), [](auto a) { return d::sum(a); }, eps));
  out.push_back(unary("mean", seed, x(), [](auto a) { return d::mean(a); }, eps));
  out.push_back(unary("row_sum", seed, x(), [](auto a) { return d::row_sum(a); }, eps));
  out.push_back(binary("concat_cols", seed, x(4, 2), x(4, 3), [](auto a, auto b) { return d::concat_cols(a, b); },
                       eps));
  out.push_back(unary("select", seed, x(), [](auto a) { return d::select(a, 2, 1); }, eps));
  out.push_back(unary("normalize_rows", seed, x(), [](auto a) { return d::normalize_rows(a, 1e-8); }, eps));
  for (auto [kind, name] : {std::pair{E::sigmoid, "sigmoid"}, {E::gelu, "gelu"}, {E::square, "square"}}) {
    out.push_back(unary(std::string("elementwise_") + name, seed, x(), [k = kind](auto a) { return d::elementwise(k, a); },
                        eps));
  }
  out.push_back(unary("elementwise_relu", seed, away_from(x(), 0.0, 0.05),
                      [](auto a) { return d::elementwise(E::relu, a); }, eps));
  out.push_back(unary("elementwise_log", seed, pos(), [](auto a) { return d::elementwise(E::log, a); }, eps));
  for (auto [kind, name] : {std::pair{E::add, "add"}, {E::sub, "sub"}, {E::mul, "mul"}}) {
    out.push_back(binary(std::string("elementwise_") + name, seed, x(), x(),
                         [k = kind](auto a, auto b) { return d::elementwise(k, a, b); }, eps));
  }
  out.push_back(check_teacher_loss(seed, cfg));
  out.push_back(check_ukd_loss(seed, cfg));
  return out;
}

}  // namespace avlab::train
