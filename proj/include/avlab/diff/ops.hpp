// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations. Binary elementwise operations require equal
// shapes; the only broadcasts are the explicit ones (scalar constants,
// div_by_scalar with a 1 x 1 node, add_row for biases). A node feeding
// several consumers accumulates their gradients additively.
#pragma once

#include <cstddef>

#include "avlab/diff/tape.hpp"

namespace avlab::diff {

template <class Real>
Var<Real> matmul(Var<Real> a, Var<Real> b);
template <class Real>
Var<Real> transpose(Var<Real> a);

template <class Real>
Var<Real> add(Var<Real> a, Var<Real> b);
template <class Real>
Var<Real> sub(Var<Real> a, Var<Real> b);
template <class Real>
Var<Real> mul(Var<Real> a, Var<Real> b);
// a[i, :] + b for a bias row b of shape 1 x cols.
template <class Real>
Var<Real> add_row(Var<Real> a, Var<Real> bias);
template <class Real>
Var<Real> scale(Var<Real> a, double factor);
template <class Real>
Var<Real> add_scalar(Var<Real> a, double value);
// a / s where s is a 1 x 1 node.
template <class Real>
Var<Real> div_by_scalar(Var<Real> a, Var<Real> s);

template <class Real>
Var<Real> sigmoid(Var<Real> a);
// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <class Real>
Var<Real> gelu(Var<Real> a);
template <class Real>
Var<Real> relu(Var<Real> a);
// Throws DomainError on any entry <= 0.
template <class Real>
Var<Real> log(Var<Real> a);
template <class Real>
Var<Real> exp(Var<Real> a);
template <class Real>
Var<Real> square(Var<Real> a);
// a^p for a >= 0 (any real p >= 0). The derivative at a == 0 is taken as 0.
template <class Real>
Var<Real> pow_scalar(Var<Real> a, double p);
template <class Real>
Var<Real> clamp(Var<Real> a, double lo, double hi);

// axis 1 normalizes each row, axis 0 each column. Max-subtracted.
template <class Real>
Var<Real> softmax(Var<Real> a, int axis);
template <class Real>
Var<Real> log_softmax(Var<Real> a, int axis);

// Temporal convolution over the rows of x (N x d_in). The kernel has shape
// (width * d_in) x d_out, i.e. a row-major width x d_in x d_out array.
// Zero padding of `pad` frames on each side; width must be odd.
template <class Real>
Var<Real> conv1d(Var<Real> x, Var<Real> kernel, std::size_t width, std::size_t pad);

// Mean of the k largest entries (ties: lowest index first). Result is 1 x 1.
template <class Real>
Var<Real> topk_mean(Var<Real> x, std::size_t k);
// topk_mean applied to every column of an N x C input; result is 1 x C.
template <class Real>
Var<Real> topk_mean_cols(Var<Real> x, std::size_t k);

template <class Real>
Var<Real> sum(Var<Real> a);
template <class Real>
Var<Real> mean(Var<Real> a);
// N x d -> N x 1.
template <class Real>
Var<Real> row_sum(Var<Real> a);
template <class Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b);
// Single entry as a 1 x 1 node.
template <class Real>
Var<Real> select(Var<Real> a, std::size_t row, std::size_t col);
// Each row divided by (its L2 norm + eps).
template <class Real>
Var<Real> normalize_rows(Var<Real> a, double eps);

enum class Elementwise { sigmoid, gelu, relu, add, mul, sub, log, square };

template <class Real>
Var<Real> elementwise(Elementwise kind, Var<Real> a);
template <class Real>
Var<Real> elementwise(Elementwise kind, Var<Real> a, Var<Real> b);

}  // namespace avlab::diff
