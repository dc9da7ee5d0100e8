// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/model/forward.hpp"

#include <cmath>

namespace avlab::model {

using namespace avlab::diff;

const char* fusion_mode_name(FusionMode m) { return m == FusionMode::adaptive ? "adaptive" : "visual_only"; }

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "adaptive") return FusionMode::adaptive;
  if (s == "visual_only") return FusionMode::visual_only;
  throw ConfigError("model.fusion must be \"adaptive\" or \"visual_only\", got \"" + s + "\"");
}

template <class Real>
Var<Real> linear(const BoundParams<Real>& p, const std::string& prefix, Var<Real> x) {
  return add_row(matmul(x, p[prefix + ".weight"]), p[prefix + ".bias"]);
}

Matrix<double> attention_band_mask(std::size_t n, std::size_t window) {
  const std::size_t half = window / 2;
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dist = i > j ? i - j : j - i;
      m(i, j) = dist <= half ? 0.0 : -1e9;
    }
  }
  return m;
}

template <class Real>
Var<Real> temporal_encode_visual(const BoundParams<Real>& p, Var<Real> x) {
  const std::size_t d = x.cols();
  auto q = matmul(x, p["temporal_visual.wq"]);
  auto k = matmul(x, p["temporal_visual.wk"]);
  auto v = matmul(x, p["temporal_visual.wv"]);
  auto mask = x.tape()->constant(attention_band_mask(x.rows(), p.dims().temporal_window).template cast<Real>());
  auto scores = add(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(double(d))), mask);
  auto mixed = add_row(matmul(matmul(softmax(scores, 1), v), p["temporal_visual.wo"]), p["temporal_visual.bo"]);
  return add(x, mixed);
}

template <class Real>
Var<Real> temporal_encode_audio(const BoundParams<Real>& p, Var<Real> x) {
  return add(x, conv1d(x, p["temporal_audio.kernel"], 3, 1));
}

template <class Real>
Fused<Real> adaptive_fuse(const BoundParams<Real>& p, Var<Real> x_v, Var<Real> x_a) {
  if (x_v.shape() != x_a.shape()) {
    throw DimensionError("adaptive_fuse: visual " + x_v.shape().str() + " and audio " + x_a.shape().str() +
                         " differ");
  }
  auto joint = concat_cols(x_a, x_v);
  auto gate = sigmoid(linear(p, "fusion_gate", joint));
  auto res = linear(p, "fusion_res.fc2", gelu(linear(p, "fusion_res.fc1", joint)));
  return {add(x_v, mul(gate, res)), gate};
}

template <class Real>
Var<Real> classify(const BoundParams<Real>& p, Var<Real> x) {
  return sigmoid(linear(p, "classifier.fc2", relu(linear(p, "classifier.fc1", x))));
}

template <class Real>
Var<Real> global_rep(Var<Real> a, Var<Real> x) {
  auto pooled = matmul(transpose(a), x);
  auto weighted = div_by_scalar(pooled, add_scalar(sum(a), kNormEps));
  return normalize_rows(weighted, kNormEps);
}

template <class Real>
Var<Real> class_embeddings(const BoundParams<Real>& p) {
  return add(p["class_base"], p["text_prompt"]);
}

template <class Real>
Prompted<Real> av_prompt(const BoundParams<Real>& p, Var<Real> x_c, Var<Real> x_p) {
  if (x_p.rows() != 1 || x_p.cols() != x_c.cols()) {
    throw DimensionError("av_prompt: X_p " + x_p.shape().str() + " does not match X_c " + x_c.shape().str());
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(double(x_c.cols()));
  auto s_p = softmax(scale(matmul(x_c, transpose(x_p)), inv_sqrt_d), 0);
  auto x_mp = matmul(s_p, x_p);
  auto ffn = linear(p, "prompt_ffn.fc2", gelu(linear(p, "prompt_ffn.fc1", add(x_mp, x_c))));
  return {add(ffn, x_c), s_p};
}

template <class Real>
Var<Real> align_map(Var<Real> x, Var<Real> x_cp) {
  return matmul(normalize_rows(x, kNormEps), transpose(normalize_rows(x_cp, kNormEps)));
}

template <class Real>
Var<Real> enhance_visual(const BoundParams<Real>& p, Var<Real> x) {
  return add(x, relu(add_row(conv1d(x, p["enhance.kernel"], 3, 1), p["enhance.bias"])));
}

template <class Real>
Var<Real> predict_uncertainty(const BoundParams<Real>& p, Var<Real> x) {
  auto h = relu(add_row(conv1d(x, p["uncert.conv1.kernel"], 3, 1), p["uncert.conv1.bias"]));
  h = relu(add_row(conv1d(h, p["uncert.conv2.kernel"], 3, 1), p["uncert.conv2.bias"]));
  auto out = add_row(conv1d(h, p["uncert.conv3.kernel"], 3, 1), p["uncert.conv3.bias"]);
  return clamp(out, kLogVarMin, kLogVarMax);
}

namespace {

template <class Real>
void heads(const BoundParams<Real>& p, const ForwardOptions& opt, GraphOutputs<Real>& out) {
  out.a = classify(p, out.features);
  auto x_c = class_embeddings(p);
  if (opt.use_prompt) {
    auto prompted = av_prompt(p, x_c, global_rep(out.a, out.features));
    out.x_cp = prompted.x_cp;
    out.s_p = prompted.s_p;
  } else {
    out.x_cp = x_c;
  }
  out.m = align_map(out.features, out.x_cp);
}

template <class Real>
void check_input(const BoundParams<Real>& p, Var<Real> x, const char* what) {
  if (x.rows() == 0) throw ContractError(std::string(what) + " sequence is empty");
  if (x.cols() != p.dims().d) {
    throw DimensionError(std::string(what) + " features " + x.shape().str() + " do not match model width d = " +
                         std::to_string(p.dims().d));
  }
}

}  // namespace

template <class Real>
GraphOutputs<Real> forward_teacher(const BoundParams<Real>& p, Var<Real> x_v, Var<Real> x_a,
                                   const ForwardOptions& opt) {
  check_input(p, x_v, "visual");
  GraphOutputs<Real> out;
  auto tv = temporal_encode_visual(p, x_v);
  if (opt.fusion == FusionMode::adaptive) {
    check_input(p, x_a, "audio");
    if (x_a.rows() != x_v.rows()) {
      throw DimensionError("audio has " + std::to_string(x_a.rows()) + " frames, visual has " +
                           std::to_string(x_v.rows()));
    }
    auto fused = adaptive_fuse(p, tv, temporal_encode_audio(p, x_a));
    out.features = fused.x_av;
    out.gate = fused.gate;
  } else {
    out.features = tv;
  }
  heads(p, opt, out);
  return out;
}

template <class Real>
GraphOutputs<Real> forward_student(const BoundParams<Real>& p, Var<Real> x, bool with_uncertainty,
                                   const ForwardOptions& opt) {
  check_input(p, x, "student input");
  GraphOutputs<Real> out;
  out.features = enhance_visual(p, temporal_encode_visual(p, x));
  heads(p, opt, out);
  if (with_uncertainty) out.log_var = predict_uncertainty(p, x);
  return out;
}

DetectionOutput detect(const ModelParams& params, const Matrix<float>& x, const Matrix<float>* audio,
                       const ForwardOptions& opt) {
  Tape<float> tape;
  auto p = params.bind(tape);
  auto xv = tape.constant(x);
  GraphOutputs<float> g;
  if (params.architecture() == Architecture::teacher) {
    if (opt.fusion == FusionMode::adaptive && !audio) throw DataError("teacher inference needs audio features");
    auto xa = audio ? tape.constant(*audio) : Var<float>{};
    g = forward_teacher(p, xv, xa, opt);
  } else {
    g = forward_student(p, xv, false, opt);
  }
  DetectionOutput out;
  out.a.assign(g.a.values().begin(), g.a.values().end());
  out.m = g.m.value();
  out.x_av = g.features.value();
  out.x_cp = g.x_cp.value();
  return out;
}

#define AVLAB_INSTANTIATE_FORWARD(R)                                                                      \
  template Var<R> linear(const BoundParams<R>&, const std::string&, Var<R>);                             \
  template Var<R> temporal_encode_visual(const BoundParams<R>&, Var<R>);                                 \
  template Var<R> temporal_encode_audio(const BoundParams<R>&, Var<R>);                                  \
  template Fused<R> adaptive_fuse(const BoundParams<R>&, Var<R>, Var<R>);                                \
  template Var<R> classify(const BoundParams<R>&, Var<R>);                                               \
  template Var<R> global_rep(Var<R>, Var<R>);                                                            \
  template Var<R> class_embeddings(const BoundParams<R>&);                                               \
  template Prompted<R> av_prompt(const BoundParams<R>&, Var<R>, Var<R>);                                 \
  template Var<R> align_map(Var<R>, Var<R>);                                                             \
  template Var<R> enhance_visual(const BoundParams<R>&, Var<R>);                                         \
  template Var<R> predict_uncertainty(const BoundParams<R>&, Var<R>);                                    \
  template GraphOutputs<R> forward_teacher(const BoundParams<R>&, Var<R>, Var<R>, const ForwardOptions&); \
  template GraphOutputs<R> forward_student(const BoundParams<R>&, Var<R>, bool, const ForwardOptions&);

AVLAB_INSTANTIATE_FORWARD(float)
AVLAB_INSTANTIATE_FORWARD(double)

}  // namespace avlab::model
