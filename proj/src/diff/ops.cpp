// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace avlab::diff {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

template <class Real>
using Record = typename Tape<Real>::Record;

template <class Real>
Tape<Real>& tape_of(const Var<Real>& a) {
  if (!a.valid()) throw ContractError("operation on an unbound node");
  return *a.tape();
}

template <class Real>
Tape<Real>& tape_of(const Var<Real>& a, const Var<Real>& b) {
  Tape<Real>& t = tape_of(a);
  t.check_owned(b);
  return t;
}

template <class Real>
Record<Real> record(OpKind kind, NodeId in0) {
  Record<Real> r;
  r.kind = kind;
  r.inputs = {in0, 0};
  r.n_inputs = 1;
  return r;
}

template <class Real>
Record<Real> record(OpKind kind, NodeId in0, NodeId in1) {
  Record<Real> r;
  r.kind = kind;
  r.inputs = {in0, in1};
  r.n_inputs = 2;
  return r;
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

// Dot product with double accumulation. Four interleaved partial sums combined
// in a fixed order, so results are reproducible.
template <class X, class Y>
double dot(const X* x, const Y* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    s1 += static_cast<double>(x[i + 1]) * static_cast<double>(y[i + 1]);
    s2 += static_cast<double>(x[i + 2]) * static_cast<double>(y[i + 2]);
    s3 += static_cast<double>(x[i + 3]) * static_cast<double>(y[i + 3]);
  }
  for (; i < n; ++i) s0 += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return (s0 + s1) + (s2 + s3);
}

// out[i, j] = sum_t x[i, t] * y[j, t]  (x: m x k, y: n x k, out: m x n).
template <class Real>
std::vector<Real> matmul_nt(const Real* x, const Real* y, std::size_t m, std::size_t n, std::size_t k) {
  std::vector<Real> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* xi = x + i * k;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<Real>(dot(xi, y + j * k, k));
  }
  return out;
}

template <class Real>
std::vector<Real> transposed(const std::vector<Real>& v, std::size_t rows, std::size_t cols) {
  std::vector<Real> t(v.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = v[i * cols + j];
  return t;
}

template <class Real>
std::vector<Real>& grad_of(Tape<Real>& tape, NodeId id) {
  auto& n = tape.node(id);
  if (n.grad.empty()) n.grad.assign(n.shape.size(), Real(0));
  return n.grad;
}

template <class Real>
bool wants_grad(Tape<Real>& tape, NodeId id) {
  return tape.node(id).needs_grad;
}

template <class Real, class F>
Var<Real> unary(Record<Real> rec, Var<Real> a, F f) {
  Tape<Real>& t = tape_of(a);
  const auto& in = t.node(a.id());
  std::vector<Real> out(in.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(f(static_cast<double>(in.value[i])));
  return t.emit(std::move(rec), in.shape, std::move(out));
}

template <class Real, class F>
Var<Real> unary(OpKind kind, Var<Real> a, F f) {
  return unary(record<Real>(kind, a.id()), a, f);
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gelu_value(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double th = std::tanh(u);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// Iterates the softmax groups along `axis`: calls f(offset, stride, count).
template <class F>
void for_each_group(const Shape& s, int axis, F f) {
  if (axis == 1) {
    for (std::size_t r = 0; r < s.rows; ++r) f(r * s.cols, std::size_t{1}, s.cols);
  } else {
    for (std::size_t c = 0; c < s.cols; ++c) f(c, s.cols, s.rows);
  }
}

void check_axis(int axis) {
  if (axis != 0 && axis != 1) throw ContractError("softmax axis must be 0 or 1, got " + std::to_string(axis));
}

template <class Real>
void check_no_nan(const std::vector<Real>& v, const char* op) {
  for (Real x : v) {
    if (std::isnan(x)) throw NumericError(std::string(op) + ": NaN input");
  }
}

// Rows of the zero-padded sliding window matrix: row i holds
// x[i - pad + t, :] for t = 0..width-1 (zeros outside the sequence).
template <class Real>
std::vector<Real> im2col(const std::vector<Real>& x, std::size_t n, std::size_t d, std::size_t width,
                         std::size_t pad) {
  std::vector<Real> cols(n * width * d, Real(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < width; ++t) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + t) - static_cast<std::ptrdiff_t>(pad);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      std::copy_n(x.data() + src * d, d, cols.data() + (i * width + t) * d);
    }
  }
  return cols;
}

std::vector<std::uint32_t> topk_indices(const std::vector<double>& v, std::size_t k) {
  std::vector<std::uint32_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return v[a] > v[b]; });
  idx.resize(k);
  return idx;
}

}  // namespace

template <class Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  Tape<Real>& t = tape_of(a, b);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(b.id());
  if (na.shape.cols != nb.shape.rows) {
    throw DimensionError("matmul: inner dimensions disagree, " + na.shape.str() + " x " + nb.shape.str());
  }
  const std::size_t m = na.shape.rows, k = na.shape.cols, n = nb.shape.cols;
  const auto bt = transposed(nb.value, k, n);
  auto out = matmul_nt(na.value.data(), bt.data(), m, n, k);
  return t.emit(record<Real>(OpKind::matmul, a.id(), b.id()), Shape{m, n}, std::move(out));
}

template <class Real>
Var<Real> transpose(Var<Real> a) {
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  auto out = transposed(na.value, na.shape.rows, na.shape.cols);
  return t.emit(record<Real>(OpKind::transpose, a.id()), Shape{na.shape.cols, na.shape.rows}, std::move(out));
}

template <class Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  Tape<Real>& t = tape_of(a, b);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(b.id());
  require_same_shape("add", na.shape, nb.shape);
  std::vector<Real> out(na.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na.value[i] + nb.value[i];
  return t.emit(record<Real>(OpKind::add, a.id(), b.id()), na.shape, std::move(out));
}

template <class Real>
Var<Real> sub(Var<Real> a, Var<Real> b) {
  Tape<Real>& t = tape_of(a, b);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(b.id());
  require_same_shape("sub", na.shape, nb.shape);
  std::vector<Real> out(na.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na.value[i] - nb.value[i];
  return t.emit(record<Real>(OpKind::sub, a.id(), b.id()), na.shape, std::move(out));
}

template <class Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  Tape<Real>& t = tape_of(a, b);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(b.id());
  require_same_shape("mul", na.shape, nb.shape);
  std::vector<Real> out(na.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na.value[i] * nb.value[i];
  return t.emit(record<Real>(OpKind::mul, a.id(), b.id()), na.shape, std::move(out));
}

template <class Real>
Var<Real> add_row(Var<Real> a, Var<Real> bias) {
  Tape<Real>& t = tape_of(a, bias);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(bias.id());
  if (nb.shape.rows != 1 || nb.shape.cols != na.shape.cols) {
    throw DimensionError("add_row: bias " + nb.shape.str() + " does not match " + na.shape.str());
  }
  std::vector<Real> out(na.value.size());
  const std::size_t c = na.shape.cols;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na.value[i] + nb.value[i % c];
  return t.emit(record<Real>(OpKind::add_row, a.id(), bias.id()), na.shape, std::move(out));
}

template <class Real>
Var<Real> scale(Var<Real> a, double factor) {
  auto rec = record<Real>(OpKind::scale, a.id());
  rec.a = factor;
  return unary(std::move(rec), a, [factor](double x) { return x * factor; });
}

template <class Real>
Var<Real> add_scalar(Var<Real> a, double value) {
  return unary(OpKind::add_scalar, a, [value](double x) { return x + value; });
}

template <class Real>
Var<Real> div_by_scalar(Var<Real> a, Var<Real> s) {
  Tape<Real>& t = tape_of(a, s);
  const auto& na = t.node(a.id());
  const auto& ns = t.node(s.id());
  if (ns.shape.size() != 1) throw DimensionError("div_by_scalar: divisor must be 1x1, got " + ns.shape.str());
  const double d = static_cast<double>(ns.value[0]);
  if (d == 0.0) throw DomainError("div_by_scalar: division by zero");
  std::vector<Real> out(na.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(static_cast<double>(na.value[i]) / d);
  return t.emit(record<Real>(OpKind::div_by_scalar, a.id(), s.id()), na.shape, std::move(out));
}

template <class Real>
Var<Real> sigmoid(Var<Real> a) {
  return unary(OpKind::sigmoid, a, sigmoid_value);
}

template <class Real>
Var<Real> gelu(Var<Real> a) {
  return unary(OpKind::gelu, a, gelu_value);
}

template <class Real>
Var<Real> relu(Var<Real> a) {
  return unary(OpKind::relu, a, [](double x) { return x > 0.0 ? x : 0.0; });
}

template <class Real>
Var<Real> log(Var<Real> a) {
  for (Real x : tape_of(a).node(a.id()).value) {
    if (!(x > Real(0))) throw DomainError("log of non-positive value " + std::to_string(static_cast<double>(x)));
  }
  return unary(OpKind::log, a, [](double x) { return std::log(x); });
}

template <class Real>
Var<Real> exp(Var<Real> a) {
  return unary(OpKind::exp, a, [](double x) { return std::exp(x); });
}

template <class Real>
Var<Real> square(Var<Real> a) {
  return unary(OpKind::square, a, [](double x) { return x * x; });
}

template <class Real>
Var<Real> pow_scalar(Var<Real> a, double p) {
  if (p < 0.0) throw ContractError("pow_scalar: negative exponent " + std::to_string(p));
  for (Real x : tape_of(a).node(a.id()).value) {
    if (x < Real(0)) throw DomainError("pow_scalar: negative base " + std::to_string(static_cast<double>(x)));
  }
  auto rec = record<Real>(OpKind::pow_scalar, a.id());
  rec.a = p;
  return unary(std::move(rec), a, [p](double x) { return p == 0.0 ? 1.0 : std::pow(x, p); });
}

template <class Real>
Var<Real> clamp(Var<Real> a, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  auto rec = record<Real>(OpKind::clamp, a.id());
  rec.a = lo;
  rec.b = hi;
  return unary(std::move(rec), a, [lo, hi](double x) { return std::clamp(x, lo, hi); });
}

template <class Real>
Var<Real> softmax(Var<Real> a, int axis) {
  check_axis(axis);
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  check_no_nan(na.value, "softmax");
  std::vector<Real> out(na.value.size());
  for_each_group(na.shape, axis, [&](std::size_t off, std::size_t stride, std::size_t count) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < count; ++i) mx = std::max(mx, static_cast<double>(na.value[off + i * stride]));
    double z = 0.0;
    std::vector<double> e(count);
    for (std::size_t i = 0; i < count; ++i) {
      e[i] = std::exp(static_cast<double>(na.value[off + i * stride]) - mx);
      z += e[i];
    }
    for (std::size_t i = 0; i < count; ++i) out[off + i * stride] = static_cast<Real>(e[i] / z);
  });
  auto rec = record<Real>(OpKind::softmax, a.id());
  rec.k = static_cast<std::size_t>(axis);
  return t.emit(std::move(rec), na.shape, std::move(out));
}

template <class Real>
Var<Real> log_softmax(Var<Real> a, int axis) {
  check_axis(axis);
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  check_no_nan(na.value, "log_softmax");
  std::vector<Real> out(na.value.size());
  for_each_group(na.shape, axis, [&](std::size_t off, std::size_t stride, std::size_t count) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < count; ++i) mx = std::max(mx, static_cast<double>(na.value[off + i * stride]));
    double z = 0.0;
    for (std::size_t i = 0; i < count; ++i) z += std::exp(static_cast<double>(na.value[off + i * stride]) - mx);
    const double lz = mx + std::log(z);
    for (std::size_t i = 0; i < count; ++i) {
      out[off + i * stride] = static_cast<Real>(static_cast<double>(na.value[off + i * stride]) - lz);
    }
  });
  auto rec = record<Real>(OpKind::log_softmax, a.id());
  rec.k = static_cast<std::size_t>(axis);
  return t.emit(std::move(rec), na.shape, std::move(out));
}

template <class Real>
Var<Real> conv1d(Var<Real> x, Var<Real> kernel, std::size_t width, std::size_t pad) {
  Tape<Real>& t = tape_of(x, kernel);
  if (width == 0 || width % 2 == 0) {
    throw ConfigError("conv1d: kernel width must be odd, got " + std::to_string(width));
  }
  if (pad != (width - 1) / 2) {
    throw ConfigError("conv1d: pad must be (width-1)/2 = " + std::to_string((width - 1) / 2) + ", got " +
                      std::to_string(pad));
  }
  const auto& nx = t.node(x.id());
  const auto& nk = t.node(kernel.id());
  const std::size_t n = nx.shape.rows, d_in = nx.shape.cols, d_out = nk.shape.cols;
  if (nk.shape.rows != width * d_in) {
    throw DimensionError("conv1d: kernel " + nk.shape.str() + " incompatible with input " + nx.shape.str() +
                         " at width " + std::to_string(width));
  }
  const auto cols = im2col(nx.value, n, d_in, width, pad);
  const auto kt = transposed(nk.value, width * d_in, d_out);
  auto out = matmul_nt(cols.data(), kt.data(), n, d_out, width * d_in);
  auto rec = record<Real>(OpKind::conv1d, x.id(), kernel.id());
  rec.k = width;
  rec.a = static_cast<double>(pad);
  return t.emit(std::move(rec), Shape{n, d_out}, std::move(out));
}

template <class Real>
Var<Real> topk_mean(Var<Real> x, std::size_t k) {
  Tape<Real>& t = tape_of(x);
  const auto& nx = t.node(x.id());
  const std::size_t n = nx.value.size();
  if (k < 1 || k > n) {
    throw ConfigError("topk_mean: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<double> v(nx.value.begin(), nx.value.end());
  auto idx = topk_indices(v, k);
  double s = 0.0;
  for (auto i : idx) s += v[i];
  auto rec = record<Real>(OpKind::topk_mean, x.id());
  rec.indices = std::move(idx);
  rec.k = k;
  return t.emit(std::move(rec), Shape{1, 1}, {static_cast<Real>(s / static_cast<double>(k))});
}

template <class Real>
Var<Real> topk_mean_cols(Var<Real> x, std::size_t k) {
  Tape<Real>& t = tape_of(x);
  const auto& nx = t.node(x.id());
  const std::size_t n = nx.shape.rows, c = nx.shape.cols;
  if (k < 1 || k > n) {
    throw ConfigError("topk_mean_cols: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  auto rec = record<Real>(OpKind::topk_mean_cols, x.id());
  rec.k = k;
  rec.indices.reserve(k * c);
  std::vector<Real> out(c);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<double>(nx.value[i * c + j]);
    const auto idx = topk_indices(col, k);
    double s = 0.0;
    for (auto i : idx) {
      s += col[i];
      rec.indices.push_back(i);
    }
    out[j] = static_cast<Real>(s / static_cast<double>(k));
  }
  return t.emit(std::move(rec), Shape{1, c}, std::move(out));
}

template <class Real>
Var<Real> sum(Var<Real> a) {
  Tape<Real>& t = tape_of(a);
  double s = 0.0;
  for (Real x : t.node(a.id()).value) s += static_cast<double>(x);
  return t.emit(record<Real>(OpKind::sum, a.id()), Shape{1, 1}, {static_cast<Real>(s)});
}

template <class Real>
Var<Real> mean(Var<Real> a) {
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  double s = 0.0;
  for (Real x : na.value) s += static_cast<double>(x);
  return t.emit(record<Real>(OpKind::mean, a.id()), Shape{1, 1},
                {static_cast<Real>(s / static_cast<double>(na.value.size()))});
}

template <class Real>
Var<Real> row_sum(Var<Real> a) {
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  std::vector<Real> out(na.shape.rows);
  for (std::size_t i = 0; i < na.shape.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < na.shape.cols; ++j) s += static_cast<double>(na.value[i * na.shape.cols + j]);
    out[i] = static_cast<Real>(s);
  }
  return t.emit(record<Real>(OpKind::row_sum, a.id()), Shape{na.shape.rows, 1}, std::move(out));
}

template <class Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b) {
  Tape<Real>& t = tape_of(a, b);
  const auto& na = t.node(a.id());
  const auto& nb = t.node(b.id());
  if (na.shape.rows != nb.shape.rows) {
    throw DimensionError("concat_cols: row counts differ, " + na.shape.str() + " vs " + nb.shape.str());
  }
  const std::size_t ca = na.shape.cols, cb = nb.shape.cols, n = na.shape.rows;
  std::vector<Real> out(n * (ca + cb));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(na.value.data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(nb.value.data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  return t.emit(record<Real>(OpKind::concat_cols, a.id(), b.id()), Shape{n, ca + cb}, std::move(out));
}

template <class Real>
Var<Real> select(Var<Real> a, std::size_t row, std::size_t col) {
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  if (row >= na.shape.rows || col >= na.shape.cols) {
    throw DimensionError("select: (" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                         na.shape.str());
  }
  auto rec = record<Real>(OpKind::select, a.id());
  rec.k = row * na.shape.cols + col;
  std::vector<Real> out{na.value[rec.k]};
  return t.emit(std::move(rec), Shape{1, 1}, std::move(out));
}

template <class Real>
Var<Real> normalize_rows(Var<Real> a, double eps) {
  Tape<Real>& t = tape_of(a);
  const auto& na = t.node(a.id());
  const std::size_t n = na.shape.rows, c = na.shape.cols;
  std::vector<Real> out(na.value.size());
  auto rec = record<Real>(OpKind::normalize_rows, a.id());
  rec.saved.resize(n);  // row norms
  rec.a = eps;
  for (std::size_t i = 0; i < n; ++i) {
    const Real* r = na.value.data() + i * c;
    const double norm = std::sqrt(dot(r, r, c));
    rec.saved[i] = static_cast<Real>(norm);
    const double s = norm + eps;
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = static_cast<Real>(static_cast<double>(r[j]) / s);
  }
  return t.emit(std::move(rec), na.shape, std::move(out));
}

template <class Real>
Var<Real> elementwise(Elementwise kind, Var<Real> a) {
  switch (kind) {
    case Elementwise::sigmoid: return sigmoid(a);
    case Elementwise::gelu: return gelu(a);
    case Elementwise::relu: return relu(a);
    case Elementwise::log: return log(a);
    case Elementwise::square: return square(a);
    default: throw ContractError("elementwise: binary kind called with one argument");
  }
}

template <class Real>
Var<Real> elementwise(Elementwise kind, Var<Real> a, Var<Real> b) {
  switch (kind) {
    case Elementwise::add: return add(a, b);
    case Elementwise::sub: return sub(a, b);
    case Elementwise::mul: return mul(a, b);
    default: throw ContractError("elementwise: unary kind called with two arguments");
  }
}

template <class Real>
void apply_backward(Tape<Real>& tape, const typename Tape<Real>::Record& rec) {
  const auto& out = tape.node(rec.output);
  const std::vector<Real>& gy = out.grad;
  const NodeId ia = rec.inputs[0];
  const NodeId ib = rec.inputs[1];
  const auto& xa = tape.node(ia).value;

  // Elementwise unary rule: dx += dy * f'(x, y).
  auto unary_rule = [&](auto deriv) {
    if (!wants_grad(tape, ia)) return;
    auto& ga = grad_of(tape, ia);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] += static_cast<Real>(static_cast<double>(gy[i]) *
                                 deriv(static_cast<double>(xa[i]), static_cast<double>(out.value[i])));
    }
  };

  switch (rec.kind) {
    case OpKind::matmul: {
      const auto& sa = tape.node(ia).shape;
      const auto& sb = tape.node(ib).shape;
      const std::size_t m = sa.rows, k = sa.cols, n = sb.cols;
      if (wants_grad(tape, ia)) {
        const auto da = matmul_nt(gy.data(), tape.node(ib).value.data(), m, k, n);
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
      }
      if (wants_grad(tape, ib)) {
        const auto at = transposed(xa, m, k);
        const auto gt = transposed(gy, m, n);
        const auto db = matmul_nt(at.data(), gt.data(), k, n, m);
        auto& gb = grad_of(tape, ib);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
      }
      break;
    }
    case OpKind::transpose: {
      if (!wants_grad(tape, ia)) break;
      const auto& s = tape.node(ia).shape;
      auto& ga = grad_of(tape, ia);
      for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.cols; ++j) ga[i * s.cols + j] += gy[j * s.rows + i];
      break;
    }
    case OpKind::add:
    case OpKind::sub: {
      if (wants_grad(tape, ia)) {
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (wants_grad(tape, ib)) {
        auto& gb = grad_of(tape, ib);
        if (rec.kind == OpKind::add) {
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i];
        } else {
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
        }
      }
      break;
    }
    case OpKind::mul: {
      const auto& xb = tape.node(ib).value;
      if (wants_grad(tape, ia)) {
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * xb[i];
      }
      if (wants_grad(tape, ib)) {
        auto& gb = grad_of(tape, ib);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * xa[i];
      }
      break;
    }
    case OpKind::add_row: {
      if (wants_grad(tape, ia)) {
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (wants_grad(tape, ib)) {
        auto& gb = grad_of(tape, ib);
        const std::size_t c = gb.size(), n = gy.size() / c;
        for (std::size_t j = 0; j < c; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(gy[i * c + j]);
          gb[j] += static_cast<Real>(s);
        }
      }
      break;
    }
    case OpKind::scale: {
      const double f = rec.a;
      unary_rule([f](double, double) { return f; });
      break;
    }
    case OpKind::add_scalar:
      unary_rule([](double, double) { return 1.0; });
      break;
    case OpKind::div_by_scalar: {
      const double s = static_cast<double>(tape.node(ib).value[0]);
      if (wants_grad(tape, ia)) {
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += static_cast<Real>(static_cast<double>(gy[i]) / s);
      }
      if (wants_grad(tape, ib)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < gy.size(); ++i) acc += static_cast<double>(gy[i]) * static_cast<double>(xa[i]);
        grad_of(tape, ib)[0] += static_cast<Real>(-acc / (s * s));
      }
      break;
    }
    case OpKind::sigmoid:
      unary_rule([](double, double y) { return y * (1.0 - y); });
      break;
    case OpKind::gelu:
      unary_rule([](double x, double) { return gelu_derivative(x); });
      break;
    case OpKind::relu:
      unary_rule([](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
      break;
    case OpKind::log:
      unary_rule([](double x, double) { return 1.0 / x; });
      break;
    case OpKind::exp:
      unary_rule([](double, double y) { return y; });
      break;
    case OpKind::square:
      unary_rule([](double x, double) { return 2.0 * x; });
      break;
    case OpKind::pow_scalar: {
      const double p = rec.a;
      unary_rule([p](double x, double) { return (p == 0.0 || x == 0.0) ? 0.0 : p * std::pow(x, p - 1.0); });
      break;
    }
    case OpKind::clamp: {
      const double lo = rec.a, hi = rec.b;
      unary_rule([lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
      break;
    }
    case OpKind::softmax: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const auto& y = out.value;
      for_each_group(out.shape, static_cast<int>(rec.k), [&](std::size_t off, std::size_t stride, std::size_t count) {
        double inner = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t p = off + i * stride;
          inner += static_cast<double>(y[p]) * static_cast<double>(gy[p]);
        }
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t p = off + i * stride;
          ga[p] += static_cast<Real>(static_cast<double>(y[p]) * (static_cast<double>(gy[p]) - inner));
        }
      });
      break;
    }
    case OpKind::log_softmax: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const auto& y = out.value;
      for_each_group(out.shape, static_cast<int>(rec.k), [&](std::size_t off, std::size_t stride, std::size_t count) {
        double total = 0.0;
        for (std::size_t i = 0; i < count; ++i) total += static_cast<double>(gy[off + i * stride]);
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t p = off + i * stride;
          ga[p] += static_cast<Real>(static_cast<double>(gy[p]) - std::exp(static_cast<double>(y[p])) * total);
        }
      });
      break;
    }
    case OpKind::conv1d: {
      const auto& sx = tape.node(ia).shape;
      const auto& kv = tape.node(ib).value;
      const std::size_t n = sx.rows, d_in = sx.cols, width = rec.k, d_out = out.shape.cols;
      const std::size_t pad = static_cast<std::size_t>(rec.a);
      const std::size_t wd = width * d_in;
      if (wants_grad(tape, ib)) {
        const auto cols = im2col(xa, n, d_in, width, pad);
        const auto ct = transposed(cols, n, wd);
        const auto gt = transposed(gy, n, d_out);
        const auto dk = matmul_nt(ct.data(), gt.data(), wd, d_out, n);
        auto& gk = grad_of(tape, ib);
        for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += dk[i];
      }
      if (wants_grad(tape, ia)) {
        const auto dcols = matmul_nt(gy.data(), kv.data(), n, wd, d_out);
        auto& gx = grad_of(tape, ia);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t tap = 0; tap < width; ++tap) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + tap) - static_cast<std::ptrdiff_t>(pad);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
            const Real* g = dcols.data() + (i * width + tap) * d_in;
            Real* dst = gx.data() + src * d_in;
            for (std::size_t c = 0; c < d_in; ++c) dst[c] += g[c];
          }
        }
      }
      break;
    }
    case OpKind::topk_mean: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const Real g = static_cast<Real>(static_cast<double>(gy[0]) / static_cast<double>(rec.k));
      for (auto i : rec.indices) ga[i] += g;
      break;
    }
    case OpKind::topk_mean_cols: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const std::size_t c = out.shape.cols;
      for (std::size_t j = 0; j < c; ++j) {
        const Real g = static_cast<Real>(static_cast<double>(gy[j]) / static_cast<double>(rec.k));
        for (std::size_t t = 0; t < rec.k; ++t) ga[rec.indices[j * rec.k + t] * c + j] += g;
      }
      break;
    }
    case OpKind::sum: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      for (auto& g : ga) g += gy[0];
      break;
    }
    case OpKind::mean: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const Real g = static_cast<Real>(static_cast<double>(gy[0]) / static_cast<double>(ga.size()));
      for (auto& v : ga) v += g;
      break;
    }
    case OpKind::row_sum: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const std::size_t c = tape.node(ia).shape.cols;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i / c];
      break;
    }
    case OpKind::concat_cols: {
      const std::size_t ca = tape.node(ia).shape.cols, cb = tape.node(ib).shape.cols, n = out.shape.rows;
      if (wants_grad(tape, ia)) {
        auto& ga = grad_of(tape, ia);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += gy[i * (ca + cb) + j];
      }
      if (wants_grad(tape, ib)) {
        auto& gb = grad_of(tape, ib);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += gy[i * (ca + cb) + ca + j];
      }
      break;
    }
    case OpKind::select: {
      if (!wants_grad(tape, ia)) break;
      grad_of(tape, ia)[rec.k] += gy[0];
      break;
    }
    case OpKind::normalize_rows: {
      if (!wants_grad(tape, ia)) break;
      auto& ga = grad_of(tape, ia);
      const std::size_t c = out.shape.cols, n = out.shape.rows;
      for (std::size_t i = 0; i < n; ++i) {
        const double norm = static_cast<double>(rec.saved[i]);
        const double s = norm + rec.a;
        const Real* x = xa.data() + i * c;
        const Real* g = gy.data() + i * c;
        const double xg = dot(x, g, c);
        const double coef = norm > 0.0 ? xg / (s * s * norm) : 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          ga[i * c + j] += static_cast<Real>(static_cast<double>(g[j]) / s - static_cast<double>(x[j]) * coef);
        }
      }
      break;
    }
  }
}

#define AVLAB_INSTANTIATE_OPS(Real)                                                 \
  template Var<Real> matmul(Var<Real>, Var<Real>);                                  \
  template Var<Real> transpose(Var<Real>);                                          \
  template Var<Real> add(Var<Real>, Var<Real>);                                     \
  template Var<Real> sub(Var<Real>, Var<Real>);                                     \
  template Var<Real> mul(Var<Real>, Var<Real>);                                     \
  template Var<Real> add_row(Var<Real>, Var<Real>);                                 \
  template Var<Real> scale(Var<Real>, double);                                      \
  template Var<Real> add_scalar(Var<Real>, double);                                 \
  template Var<Real> div_by_scalar(Var<Real>, Var<Real>);                           \
  template Var<Real> sigmoid(Var<Real>);                                            \
  template Var<Real> gelu(Var<Real>);                                               \
  template Var<Real> relu(Var<Real>);                                               \
  template Var<Real> log(Var<Real>);                                                \
  template Var<Real> exp(Var<Real>);                                                \
  template Var<Real> square(Var<Real>);                                             \
  template Var<Real> pow_scalar(Var<Real>, double);                                 \
  template Var<Real> clamp(Var<Real>, double, double);                              \
  template Var<Real> softmax(Var<Real>, int);                                       \
  template Var<Real> log_softmax(Var<Real>, int);                                   \
  template Var<Real> conv1d(Var<Real>, Var<Real>, std::size_t, std::size_t);        \
  template Var<Real> topk_mean(Var<Real>, std::size_t);                             \
  template Var<Real> topk_mean_cols(Var<Real>, std::size_t);                        \
  template Var<Real> sum(Var<Real>);                                                \
  template Var<Real> mean(Var<Real>);                                               \
  template Var<Real> row_sum(Var<Real>);                                            \
  template Var<Real> concat_cols(Var<Real>, Var<Real>);                             \
  template Var<Real> select(Var<Real>, std::size_t, std::size_t);                   \
  template Var<Real> normalize_rows(Var<Real>, double);                             \
  template Var<Real> elementwise(Elementwise, Var<Real>);                           \
  template Var<Real> elementwise(Elementwise, Var<Real>, Var<Real>);                \
  template void apply_backward(Tape<Real>&, const typename Tape<Real>::Record&);

AVLAB_INSTANTIATE_OPS(float)
AVLAB_INSTANTIATE_OPS(double)

#undef AVLAB_INSTANTIATE_OPS

}  // namespace avlab::diff
