// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Model graph. Teacher:
//
//   X_v' = temporal_encode_visual(X_v), X_a' = temporal_encode_audio(X_a)
//   X_av = X_v' + sigmoid(fusion_gate([X_a' X_v'])) * fusion_res([X_a' X_v'])
//   A    = classify(X_av)
//   X_p  = global_rep(A, X_av),  X_c = class_base + text_prompt
//   X_cp = av_prompt(X_c, X_p),  M = align_map(X_av, X_cp)
//
// Student: X_vs = enhance_visual(temporal_encode_visual(X)) replaces X_av,
// and predict_uncertainty(X) gives the per-frame log-variance.
#pragma once

#include "avlab/diff/ops.hpp"
#include "avlab/model/params.hpp"

namespace avlab::model {

using diff::Var;

enum class FusionMode { adaptive, visual_only };

const char* fusion_mode_name(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);

struct ForwardOptions {
  FusionMode fusion = FusionMode::adaptive;
  bool use_prompt = true;  // false: X_cp = X_c
};

inline constexpr double kNormEps = 1e-8;
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

// x W + b with weight `prefix.weight` (in x out) and bias `prefix.bias`.
template <class Real>
Var<Real> linear(const BoundParams<Real>& p, const std::string& prefix, Var<Real> x);

// Band mask for local attention: 0 where |i - j| <= window / 2, -1e9 elsewhere.
Matrix<double> attention_band_mask(std::size_t n, std::size_t window);

// Single-head local-window self-attention with residual:
// x + softmax(mask + (x Wq)(x Wk)^T / sqrt(d)) (x Wv) Wo + bo.
template <class Real>
Var<Real> temporal_encode_visual(const BoundParams<Real>& p, Var<Real> x);
// x + conv1d(x, kernel, 3, 1).
template <class Real>
Var<Real> temporal_encode_audio(const BoundParams<Real>& p, Var<Real> x);

template <class Real>
struct Fused {
  Var<Real> x_av;
  Var<Real> gate;  // W
};

// Operates on already temporally encoded features.
template <class Real>
Fused<Real> adaptive_fuse(const BoundParams<Real>& p, Var<Real> x_v, Var<Real> x_a);

// N x d -> N x 1 in (0, 1): fc1, ReLU, fc2, sigmoid.
template <class Real>
Var<Real> classify(const BoundParams<Real>& p, Var<Real> x);

// A: N x 1, x: N x d -> 1 x d.
template <class Real>
Var<Real> global_rep(Var<Real> a, Var<Real> x);

template <class Real>
Var<Real> class_embeddings(const BoundParams<Real>& p);

template <class Real>
struct Prompted {
  Var<Real> x_cp;  // C x d
  Var<Real> s_p;   // C x 1
};

// S_p = softmax_c(X_c X_p^T / sqrt(d)); X_mp = S_p X_p (C x d);
// X_cp = prompt_ffn(X_mp + X_c) + X_c, with prompt_ffn = fc2(GELU(fc1(.))).
template <class Real>
Prompted<Real> av_prompt(const BoundParams<Real>& p, Var<Real> x_c, Var<Real> x_p);

// Cosine similarity of every row of x (N x d) with every row of x_cp (C x d).
template <class Real>
Var<Real> align_map(Var<Real> x, Var<Real> x_cp);

// x + ReLU(conv1d(x) + b), width 3, pad 1.
template <class Real>
Var<Real> enhance_visual(const BoundParams<Real>& p, Var<Real> x);

// Three width-3 convolutions d -> h -> h -> 1 with ReLU between, clamped to
// [kLogVarMin, kLogVarMax]. N x 1.
template <class Real>
Var<Real> predict_uncertainty(const BoundParams<Real>& p, Var<Real> x);

template <class Real>
struct GraphOutputs {
  Var<Real> a;         // N x 1
  Var<Real> m;         // N x C
  Var<Real> features;  // X_av (teacher) or X_vs (student)
  Var<Real> x_cp;
  Var<Real> s_p;
  Var<Real> gate;     // teacher with adaptive fusion only
  Var<Real> log_var;  // student with uncertainty only
};

template <class Real>
GraphOutputs<Real> forward_teacher(const BoundParams<Real>& p, Var<Real> x_v, Var<Real> x_a,
                                   const ForwardOptions& opt = {});
template <class Real>
GraphOutputs<Real> forward_student(const BoundParams<Real>& p, Var<Real> x, bool with_uncertainty,
                                   const ForwardOptions& opt = {});

struct DetectionOutput {
  std::vector<float> a;  // N
  Matrix<float> m;       // N x C
  Matrix<float> x_av;    // N x d
  Matrix<float> x_cp;    // C x d
};

// Inference on one video. audio is required for the teacher and ignored by
// the student.
DetectionOutput detect(const ModelParams& params, const Matrix<float>& x, const Matrix<float>* audio,
                       const ForwardOptions& opt = {});

}  // namespace avlab::model
