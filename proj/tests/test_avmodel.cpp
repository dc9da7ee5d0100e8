// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "avlab/featureio/avfe.hpp"
#include "avlab/model/checkpoint.hpp"
#include "avlab/model/forward.hpp"
#include "avlab/train/gradsuite.hpp"
#include "support.hpp"

using namespace avlab;
using namespace avlab::model;
using avtest::LD;
using avtest::Ref;
using avtest::to_ref;
using diff::Tape;

namespace {

ModelDims small_dims(std::size_t d = 8, std::size_t c = 3) {
  auto dims = ModelDims::defaults(d, c);
  dims.temporal_window = 3;
  return dims;
}

// Every entry, zero-initialized ones included, perturbed so the oracles see
// non-trivial values.
ModelParams params_for(Architecture arch, std::uint64_t seed = 5, ModelDims dims = small_dims()) {
  return train::perturbed_params(arch, dims, seed);
}

Ref P(const ModelParams& p, const std::string& name) { return to_ref(p.at(name)); }

Ref ref_linear(const ModelParams& p, const std::string& prefix, const Ref& x) {
  return avtest::ref_add_row(avtest::ref_matmul(x, P(p, prefix + ".weight")), P(p, prefix + ".bias"));
}

Ref ref_temporal_visual(const ModelParams& p, const Ref& x) {
  const std::size_t n = x.size(), d = x[0].size();
  const std::size_t half = p.dims().temporal_window / 2;
  const Ref q = avtest::ref_matmul(x, P(p, "temporal_visual.wq"));
  const Ref k = avtest::ref_matmul(x, P(p, "temporal_visual.wk"));
  const Ref v = avtest::ref_matmul(x, P(p, "temporal_visual.wv"));
  Ref att(n, std::vector<LD>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    // Only in-window keys participate.
    LD z = 0, mx = -1e300L;
    for (std::size_t j = 0; j < n; ++j) {
      if ((i > j ? i - j : j - i) > half) continue;
      LD s = 0;
      for (std::size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
      att[i][j] = s / std::sqrt(LD(d));
      mx = std::max(mx, att[i][j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if ((i > j ? i - j : j - i) > half) continue;
      z += (att[i][j] = std::exp(att[i][j] - mx));
    }
    for (std::size_t j = 0; j < n; ++j) att[i][j] /= z;
  }
  const Ref mixed = avtest::ref_add_row(
      avtest::ref_matmul(avtest::ref_matmul(att, v), P(p, "temporal_visual.wo")), P(p, "temporal_visual.bo"));
  return avtest::ref_add(x, mixed);
}

Ref ref_temporal_audio(const ModelParams& p, const Ref& x) {
  return avtest::ref_add(x, avtest::ref_conv1d(x, P(p, "temporal_audio.kernel"), 3, 1));
}

std::pair<Ref, Ref> ref_fuse(const ModelParams& p, const Ref& xv, const Ref& xa) {
  const Ref joint = avtest::ref_concat(xa, xv);
  const Ref w = avtest::ref_map(ref_linear(p, "fusion_gate", joint), avtest::ref_sigmoid);
  const Ref res =
      ref_linear(p, "fusion_res.fc2", avtest::ref_map(ref_linear(p, "fusion_res.fc1", joint), avtest::ref_gelu));
  Ref out = xv;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] += w[i][j] * res[i][j];
  return {out, w};
}

Ref ref_classify(const ModelParams& p, const Ref& x) {
  return avtest::ref_map(
      ref_linear(p, "classifier.fc2", avtest::ref_map(ref_linear(p, "classifier.fc1", x), avtest::ref_relu)),
      avtest::ref_sigmoid);
}

Ref ref_global(const Ref& a, const Ref& x) {
  Ref out(1, std::vector<LD>(x[0].size(), 0.0L));
  LD s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += a[i][0];
    for (std::size_t j = 0; j < x[0].size(); ++j) out[0][j] += a[i][0] * x[i][j];
  }
  for (auto& v : out[0]) v /= s + 1e-8L;
  return avtest::ref_normalize_rows(out, 1e-8L);
}

// Returns {X_cp, S_p}.
std::pair<Ref, Ref> ref_prompt(const ModelParams& p, const Ref& xc, const Ref& xp) {
  const std::size_t C = xc.size(), d = xc[0].size();
  Ref logits(C, std::vector<LD>(1));
  for (std::size_t c = 0; c < C; ++c) {
    LD s = 0;
    for (std::size_t j = 0; j < d; ++j) s += xc[c][j] * xp[0][j];
    logits[c][0] = s / std::sqrt(LD(d));
  }
  const Ref sp = avtest::ref_transpose(avtest::ref_softmax_rows(avtest::ref_transpose(logits)));
  Ref mix(C, std::vector<LD>(d));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t j = 0; j < d; ++j) mix[c][j] = sp[c][0] * xp[0][j] + xc[c][j];
  const Ref ffn =
      ref_linear(p, "prompt_ffn.fc2", avtest::ref_map(ref_linear(p, "prompt_ffn.fc1", mix), avtest::ref_gelu));
  return {avtest::ref_add(ffn, xc), sp};
}

Ref ref_align(const Ref& x, const Ref& xcp) {
  Ref m(x.size(), std::vector<LD>(xcp.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t c = 0; c < xcp.size(); ++c) {
      LD dot = 0, nx = 0, nc = 0;
      for (std::size_t j = 0; j < x[i].size(); ++j) {
        dot += x[i][j] * xcp[c][j];
        nx += x[i][j] * x[i][j];
        nc += xcp[c][j] * xcp[c][j];
      }
      m[i][c] = dot / ((std::sqrt(nx) + 1e-8L) * (std::sqrt(nc) + 1e-8L));
    }
  return m;
}

Ref ref_enhance(const ModelParams& p, const Ref& x) {
  const Ref conv = avtest::ref_add_row(avtest::ref_conv1d(x, P(p, "enhance.kernel"), 3, 1), P(p, "enhance.bias"));
  return avtest::ref_add(x, avtest::ref_map(conv, avtest::ref_relu));
}

Ref ref_uncert(const ModelParams& p, const Ref& x) {
  auto layer = [&](const Ref& in, const std::string& name) {
    return avtest::ref_add_row(avtest::ref_conv1d(in, P(p, name + ".kernel"), 3, 1), P(p, name + ".bias"));
  };
  Ref h = avtest::ref_map(layer(x, "uncert.conv1"), avtest::ref_relu);
  h = avtest::ref_map(layer(h, "uncert.conv2"), avtest::ref_relu);
  return avtest::ref_map(layer(h, "uncert.conv3"), [](LD v) { return std::clamp(v, -10.0L, 10.0L); });
}

Matrix<double> input(std::uint64_t seed, std::size_t n, std::size_t d, double scale = 1.0) {
  Rng rng(seed, "input");
  return avtest::random_matrix<double>(rng, n, d, -scale, scale);
}

constexpr double kTol = 1e-10;

}  // namespace

TEST_CASE("temporal encoders match transcriptions") {
  const auto p = params_for(Architecture::teacher);
  for (std::size_t n : {1, 2, 8, 13}) {
    Tape<double> t;
    auto bp = p.bind(t);
    const auto x = input(n, n, 8);
    CHECK(avtest::max_abs_diff(temporal_encode_visual(bp, t.constant(x)).value(), ref_temporal_visual(p, to_ref(x))) <
          kTol);
    CHECK(avtest::max_abs_diff(temporal_encode_audio(bp, t.constant(x)).value(), ref_temporal_audio(p, to_ref(x))) <
          kTol);
  }
}

TEST_CASE("temporal encoders: zeroed mixing is the identity, constant input stays constant") {
  auto p = params_for(Architecture::teacher);
  const auto x = input(1, 8, 8);
  {
    auto z = p;
    z.at("temporal_visual.wo") = Matrix<float>(8, 8);
    z.at("temporal_visual.bo") = Matrix<float>(1, 8);
    z.at("temporal_audio.kernel") = Matrix<float>(24, 8);
    Tape<double> t;
    auto bp = z.bind(t);
    CHECK(temporal_encode_visual(bp, t.constant(x)).value() == x);
    CHECK(temporal_encode_audio(bp, t.constant(x)).value() == x);
  }
  Matrix<double> c(10, 8);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 8; ++j) c(i, j) = 0.1 * double(j) - 0.3;
  Tape<double> t;
  auto bp = p.bind(t);
  const auto yv = temporal_encode_visual(bp, t.constant(c)).value();
  const auto ya = temporal_encode_audio(bp, t.constant(c)).value();
  for (std::size_t i = 1; i < 10; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(std::abs(yv(i, j) - yv(0, j)) < 1e-12);
      if (i >= 2 && i <= 8) CHECK(std::abs(ya(i, j) - ya(1, j)) < 1e-12);
    }
}

TEST_CASE("attention band mask") {
  const auto m = attention_band_mask(5, 3);
  CHECK(m(2, 1) == 0.0);
  CHECK(m(2, 3) == 0.0);
  CHECK(m(2, 2) == 0.0);
  CHECK(m(2, 0) == -1e9);
  CHECK(m(0, 4) == -1e9);
}

TEST_CASE("adaptive_fuse matches the transcription and closes cleanly") {
  auto p = params_for(Architecture::teacher);
  const auto xv = input(2, 7, 8), xa = input(3, 7, 8);
  {
    Tape<double> t;
    auto f = adaptive_fuse(p.bind(t), t.constant(xv), t.constant(xa));
    const auto [ref_x, ref_w] = ref_fuse(p, to_ref(xv), to_ref(xa));
    CHECK(avtest::max_abs_diff(f.x_av.value(), ref_x) < kTol);
    CHECK(avtest::max_abs_diff(f.gate.value(), ref_w) < kTol);
  }
  {
    auto z = p;
    z.at("fusion_res.fc2.weight") = Matrix<float>(8, 8);
    z.at("fusion_res.fc2.bias") = Matrix<float>(1, 8);
    Tape<double> t;
    CHECK(adaptive_fuse(z.bind(t), t.constant(xv), t.constant(xa)).x_av.value() == xv);
  }
  {
    auto g = p;
    g.at("fusion_gate.bias") = Matrix<float>(1, 8, -1e9f);
    Tape<double> t;
    const auto y = adaptive_fuse(g.bind(t), t.constant(xv), t.constant(xa)).x_av.value();
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data[i] - xv.data[i]) < 1e-6);
  }
  Tape<double> t;
  CHECK_THROWS_AS(adaptive_fuse(p.bind(t), t.constant(xv), t.constant(input(4, 6, 8))), DimensionError);
}

TEST_CASE("classify matches the transcription and its limits") {
  auto p = params_for(Architecture::teacher);
  const auto x = input(4, 9, 8, 3.0);
  {
    Tape<double> t;
    const auto a = classify(p.bind(t), t.constant(x)).value();
    CHECK(avtest::max_abs_diff(a, ref_classify(p, to_ref(x))) < kTol);
    for (double v : a.data) CHECK((v > 0.0 && v < 1.0));
  }
  {
    auto z = p;
    for (const char* n : {"classifier.fc1.weight", "classifier.fc1.bias", "classifier.fc2.weight",
                          "classifier.fc2.bias"})
      for (auto& v : z.at(n).data) v = 0.0f;
    Tape<double> t;
    for (double v : classify(z.bind(t), t.constant(x)).value().data) CHECK(v == 0.5);
  }
  {
    auto z = p;
    z.at("classifier.fc2.bias")(0, 0) = -1e9f;
    Tape<double> t;
    for (double v : classify(z.bind(t), t.constant(x)).value().data) CHECK(v < 1e-12);
  }
}

TEST_CASE("global_rep: transcription, one-hot and uniform weights") {
  const auto x = input(5, 6, 8);
  Rng rng(6);
  const auto a = avtest::random_matrix<double>(rng, 6, 1, 0.0, 1.0);
  Tape<double> t;
  CHECK(avtest::max_abs_diff(global_rep(t.constant(a), t.constant(x)).value(), ref_global(to_ref(a), to_ref(x))) <
        kTol);

  Matrix<double> onehot(6, 1);
  onehot(3, 0) = 1.0;
  const auto xp = global_rep(t.constant(onehot), t.constant(x)).value();
  const Ref row = avtest::ref_normalize_rows({to_ref(x)[3]}, 1e-8L);
  CHECK(avtest::max_abs_diff(xp, row) < 1e-12);

  // Uniform weights of any magnitude give the normalized mean frame.
  const auto u1 = global_rep(t.constant(Matrix<double>(6, 1, 0.2)), t.constant(x)).value();
  const auto u2 = global_rep(t.constant(Matrix<double>(6, 1, 0.9)), t.constant(x)).value();
  Ref mean(1, std::vector<LD>(8, 0.0L));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 8; ++j) mean[0][j] += x(i, j) / 6.0L;
  CHECK(avtest::max_abs_diff(u1, avtest::ref_normalize_rows(mean, 1e-8L)) < 1e-12);
  CHECK(avtest::max_abs_diff(u2, avtest::ref_normalize_rows(mean, 1e-8L)) < 1e-12);
}

TEST_CASE("av_prompt: transcription, skip path and symmetric weights") {
  auto p = params_for(Architecture::teacher);
  Rng rng(7);
  const auto xc = avtest::random_matrix<double>(rng, 3, 8);
  auto xp = avtest::random_matrix<double>(rng, 1, 8);
  {
    Tape<double> t;
    const auto out = av_prompt(p.bind(t), t.constant(xc), t.constant(xp));
    const auto [ref_cp, ref_sp] = ref_prompt(p, to_ref(xc), to_ref(xp));
    CHECK(avtest::max_abs_diff(out.x_cp.value(), ref_cp) < kTol);
    CHECK(avtest::max_abs_diff(out.s_p.value(), ref_sp) < kTol);
    double s = 0;
    for (double v : out.s_p.value().data) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(out.x_cp.shape() == Shape{3, 8});
  }
  {
    auto z = p;
    for (auto& v : z.at("prompt_ffn.fc2.weight").data) v = 0.0f;
    for (auto& v : z.at("prompt_ffn.fc2.bias").data) v = 0.0f;
    Tape<double> t;
    CHECK(av_prompt(z.bind(t), t.constant(xc), t.constant(xp)).x_cp.value() == xc);
  }
  {
    // Class rows on the first axes, X_p on the last one.
    Matrix<double> basis(3, 8);
    for (std::size_t c = 0; c < 3; ++c) basis(c, c) = 1.0;
    Matrix<double> orth(1, 8);
    orth(0, 7) = 1.0;
    Tape<double> t;
    for (double v : av_prompt(p.bind(t), t.constant(basis), t.constant(orth)).s_p.value().data)
      CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  Tape<double> t;
  CHECK_THROWS_AS(av_prompt(p.bind(t), t.constant(xc), t.constant(Matrix<double>(1, 7))), DimensionError);
}

TEST_CASE("align_map: cosine oracle, identical and orthogonal rows") {
  const auto x = input(8, 9, 8, 4.0);
  Rng rng(8);
  const auto xcp = avtest::random_matrix<double>(rng, 3, 8);
  Tape<double> t;
  const auto m = align_map(t.constant(x), t.constant(xcp)).value();
  CHECK(avtest::max_abs_diff(m, ref_align(to_ref(x), to_ref(xcp))) < 1e-12);
  for (double v : m.data) CHECK(std::abs(v) <= 1.0);

  Matrix<double> a({2, 2}, {3, 4, 0, 2});
  Matrix<double> c({2, 2}, {3, 4, 5, 0});
  const auto mm = align_map(t.constant(a), t.constant(c)).value();
  CHECK(std::abs(mm(0, 0) - 1.0) < 1e-8);  // the norm guard shifts it by ~eps / |x|
  CHECK(mm(1, 1) == 0.0);
}

TEST_CASE("enhance_visual: transcription, zero kernel and negative delta") {
  auto p = params_for(Architecture::student);
  const auto x = input(9, 7, 8);
  {
    Tape<double> t;
    CHECK(avtest::max_abs_diff(enhance_visual(p.bind(t), t.constant(x)).value(), ref_enhance(p, to_ref(x))) < kTol);
  }
  auto z = p;
  z.at("enhance.kernel") = Matrix<float>(24, 8);
  z.at("enhance.bias") = Matrix<float>(1, 8);
  {
    Tape<double> t;
    CHECK(enhance_visual(z.bind(t), t.constant(x)).value() == x);
  }
  // Centre tap -I on a positive input: the convolution is -x <= 0 and the ReLU
  // removes it.
  for (std::size_t i = 0; i < 8; ++i) z.at("enhance.kernel")(8 + i, i) = -1.0f;
  auto pos = x;
  for (auto& v : pos.data) v = std::abs(v) + 0.01;
  Tape<double> t;
  CHECK(enhance_visual(z.bind(t), t.constant(pos)).value() == pos);
  // On a negative input the copy survives: x + ReLU(-x) = 0.
  auto neg = pos;
  for (auto& v : neg.data) v = -v;
  for (double v : enhance_visual(z.bind(t), t.constant(neg)).value().data) CHECK(v == 0.0);
}

TEST_CASE("predict_uncertainty: transcription, zero init and clamp bounds") {
  const auto p = params_for(Architecture::student);
  const auto x = input(10, 11, 8);
  {
    Tape<double> t;
    CHECK(avtest::max_abs_diff(predict_uncertainty(p.bind(t), t.constant(x)).value(), ref_uncert(p, to_ref(x))) <
          kTol);
  }
  Rng rng(1);
  auto fresh = ModelParams::init(Architecture::student, small_dims(), rng);
  {
    Tape<double> t;
    for (double v : predict_uncertainty(fresh.bind(t), t.constant(x)).value().data) CHECK(v == 0.0);
  }
  for (float b : {50.0f, -50.0f}) {
    fresh.at("uncert.conv3.bias")(0, 0) = b;
    Tape<double> t;
    for (double v : predict_uncertainty(fresh.bind(t), t.constant(x)).value().data)
      CHECK(v == (b > 0 ? kLogVarMax : kLogVarMin));
  }
}

TEST_CASE("full forward: output ranges and shapes") {
  for (auto arch : {Architecture::teacher, Architecture::student}) {
    const auto p = params_for(arch, 12);
    Tape<double> t;
    auto bp = p.bind(t);
    const auto xv = t.constant(input(11, 9, 8, 3.0)), xa = t.constant(input(12, 9, 8, 3.0));
    const auto out = arch == Architecture::teacher ? forward_teacher(bp, xv, xa) : forward_student(bp, xv, true);
    CHECK(out.a.shape() == Shape{9, 1});
    CHECK(out.m.shape() == Shape{9, 3});
    CHECK(out.x_cp.shape() == Shape{3, 8});
    for (double v : out.a.value().data) CHECK((v >= 0.0 && v <= 1.0));
    for (double v : out.m.value().data) CHECK(std::abs(v) <= 1.0);
    CHECK(out.log_var.valid() == (arch == Architecture::student));
  }
}

TEST_CASE("full forward: input contract") {
  const auto p = params_for(Architecture::teacher);
  Tape<double> t;
  auto bp = p.bind(t);
  CHECK_THROWS_AS(forward_teacher(bp, t.constant(input(1, 5, 7)), t.constant(input(2, 5, 7))), DimensionError);
  CHECK_THROWS_AS(forward_teacher(bp, t.constant(input(1, 5, 8)), t.constant(input(2, 4, 8))), DimensionError);
  CHECK_THROWS_AS(detect(p, input(1, 5, 8).cast<float>(), nullptr), DataError);
}

TEST_CASE("ablation: a closed fusion residual is the visual-only pathway, bit for bit") {
  auto p = params_for(Architecture::teacher, 13);
  for (auto& v : p.at("fusion_res.fc2.weight").data) v = 0.0f;
  for (auto& v : p.at("fusion_res.fc2.bias").data) v = 0.0f;
  const auto xv = input(20, 12, 8).cast<float>(), xa = input(21, 12, 8).cast<float>();
  const auto fused = detect(p, xv, &xa);
  const auto visual = detect(p, xv, nullptr, {FusionMode::visual_only, true});
  CHECK(fused.a == visual.a);
  CHECK(fused.m == visual.m);
  CHECK(fused.x_av == visual.x_av);
  CHECK(fused.x_cp == visual.x_cp);

  // A fresh teacher starts with the residual closed.
  Rng rng(3);
  const auto init = ModelParams::init(Architecture::teacher, small_dims(), rng);
  CHECK(detect(init, xv, &xa).a == detect(init, xv, nullptr, {FusionMode::visual_only, true}).a);
}

TEST_CASE("ablation: a zero prompt FFN gives X_cp == X_c and the prompt-off map") {
  auto p = params_for(Architecture::teacher, 14);
  for (auto& v : p.at("prompt_ffn.fc2.weight").data) v = 0.0f;
  for (auto& v : p.at("prompt_ffn.fc2.bias").data) v = 0.0f;
  const auto xv = input(22, 10, 8).cast<float>(), xa = input(23, 10, 8).cast<float>();
  const auto on = detect(p, xv, &xa);
  const auto off = detect(p, xv, &xa, {FusionMode::adaptive, false});
  Tape<float> t;
  CHECK(on.x_cp == class_embeddings(p.bind(t)).value());
  CHECK(on.x_cp == off.x_cp);
  CHECK(on.m == off.m);
  CHECK(on.a == off.a);
}

TEST_CASE("parameter count has the closed form") {
  for (std::size_t d : {8, 16, 64}) {
    const auto dims = ModelDims::defaults(d, 4);
    const std::size_t C = 4, H = dims.fusion_hidden, hc = dims.classifier_hidden, hp = dims.prompt_hidden,
                      hu = dims.uncert_hidden;
    const std::size_t heads = (d * hc + hc) + (hc + 1) + C * d + (d * hp + hp) + (hp * d + d);
    const std::size_t temporal = 4 * d * d + d;
    const std::size_t teacher = temporal + 3 * d * d + (2 * d * d + d) + (2 * d * H + H) + (H * d + d) + heads;
    const std::size_t student = temporal + (3 * d * d + d) + (3 * d * hu + hu) + (3 * hu * hu + hu) + (3 * hu + 1) +
                                heads;
    Rng rng(1);
    const auto pt = ModelParams::init(Architecture::teacher, dims, rng);
    const auto ps = ModelParams::init(Architecture::student, dims, rng);
    CHECK(pt.trainable_count() == teacher);
    CHECK(ps.trainable_count() == student);
    // class_base is frozen.
    CHECK(pt.at("class_base").shape == Shape{C, d});
    // Quadratic in d at default widths: 4 + 3 + 2 + 2 + 1 + 1/4 + 8 = 20.25 d^2.
    CHECK(double(teacher) / double(d * d) < 20.25 + 64.0 / double(d));
  }
}

TEST_CASE("init: deterministic, finite, orthonormal class rows, validated dims") {
  Rng a(9), b(9);
  const auto p1 = ModelParams::init(Architecture::teacher, small_dims(), a);
  const auto p2 = ModelParams::init(Architecture::teacher, small_dims(), b);
  CHECK(p1 == p2);
  p1.check_finite();
  const auto& cb = p1.at("class_base");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < 8; ++k) dot += double(cb(i, k)) * cb(j, k);
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-6);
    }
  Matrix<float> given(3, 8, 0.5f);
  Rng c(9);
  CHECK(ModelParams::init(Architecture::student, small_dims(), c, &given).at("class_base") == given);
  Matrix<float> wrong(2, 8);
  CHECK_THROWS_AS(ModelParams::init(Architecture::student, small_dims(), c, &wrong), ConfigError);
  auto bad = small_dims();
  bad.temporal_window = 4;
  CHECK_THROWS_AS(ModelParams::init(Architecture::teacher, bad, c), ConfigError);
  bad = small_dims(2, 3);
  CHECK_THROWS_AS(ModelParams::init(Architecture::teacher, bad, c), ConfigError);

  auto nan = p1;
  nan.at("fusion_gate.bias")(0, 2) = NAN;
  try {
    nan.check_finite();
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("fusion_gate.bias") != std::string::npos);
  }
}

TEST_CASE("checkpoint: round trip is bit-exact") {
  avtest::TempDir dir("ckpt");
  for (auto arch : {Architecture::teacher, Architecture::student}) {
    Checkpoint ck{params_for(arch, 30), {{"mode", "test"}, {"classes", {"normal", "a", "b"}}}};
    const auto bytes = encode_checkpoint(ck);
    const auto back = decode_checkpoint(bytes);
    CHECK(back.params == ck.params);
    CHECK(back.meta == ck.meta);
    CHECK(encode_checkpoint(back) == bytes);
    save_checkpoint(ck, dir / "c.avck");
    CHECK(io::read_file_bytes(dir / "c.avck") == bytes);
    CHECK(load_checkpoint(dir / "c.avck").params == ck.params);
  }
}

TEST_CASE("checkpoint: corruption is rejected with the designated errors") {
  const auto good = encode_checkpoint({params_for(Architecture::student, 31), {}});
  auto b = good;
  b[1] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(b), BadMagicError);
  b = good;
  b[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(b), VersionMismatchError);
  b = good;
  b.back() ^= 0x80;
  CHECK_THROWS_AS(decode_checkpoint(b), ChecksumError);
  b = good;
  b[good.size() - 40] ^= 0x01;  // payload
  CHECK_THROWS_AS(decode_checkpoint(b), ChecksumError);
  b = good;
  b[20] ^= 0x20;  // header text
  CHECK_THROWS_AS(decode_checkpoint(b), FormatError);
  for (std::size_t cut : {std::size_t(2), std::size_t(10), std::size_t(100), good.size() - 3}) {
    b.assign(good.begin(), good.begin() + cut);
    CHECK_THROWS_AS(decode_checkpoint(b), TruncatedError);
  }
  b = good;
  b.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(b), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.avck"), DataError);

  auto nan = params_for(Architecture::student, 32);
  nan.at("enhance.bias")(0, 0) = INFINITY;
  CHECK_THROWS_AS(encode_checkpoint({nan, {}}), NumericError);
}
