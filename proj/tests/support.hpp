// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test helpers and naive reference implementations. The references use plain
// loops in long double and share no code with the library.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "avlab/common/rng.hpp"
#include "avlab/diff/matrix.hpp"

namespace avtest {

using avlab::Matrix;
using LD = long double;
using Ref = std::vector<std::vector<LD>>;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("avlab_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

template <class T>
Matrix<T> random_matrix(avlab::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Matrix<T> m(r, c);
  for (auto& v : m.data) v = static_cast<T>(rng.uniform(lo, hi));
  return m;
}

template <class T>
Ref to_ref(const Matrix<T>& m) {
  Ref r(m.rows(), std::vector<LD>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = static_cast<LD>(m(i, j));
  return r;
}

template <class T>
double max_abs_diff(const Matrix<T>& a, const Ref& b) {
  if (a.rows() != b.size()) return INFINITY;
  double w = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (a.cols() != b[i].size()) return INFINITY;
    for (std::size_t j = 0; j < a.cols(); ++j) w = std::max(w, double(std::fabs(LD(a(i, j)) - b[i][j])));
  }
  return w;
}

inline Ref ref_matmul(const Ref& a, const Ref& b) {
  Ref c(a.size(), std::vector<LD>(b[0].size(), 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Ref ref_transpose(const Ref& a) {
  Ref t(a[0].size(), std::vector<LD>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Ref ref_add(Ref a, const Ref& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Ref ref_add_row(Ref a, const Ref& bias) {
  for (auto& row : a)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[0][j];
  return a;
}

template <class F>
Ref ref_map(Ref a, F f) {
  for (auto& row : a)
    for (auto& v : row) v = f(v);
  return a;
}

inline LD ref_sigmoid(LD x) { return 1.0L / (1.0L + std::exp(-x)); }
inline LD ref_gelu(LD x) {
  const LD c = std::sqrt(2.0L / 3.14159265358979323846264338327950288L);
  return 0.5L * x * (1.0L + std::tanh(c * (x + 0.044715L * x * x * x)));
}
inline LD ref_relu(LD x) { return x > 0 ? x : 0; }

// Row-wise softmax.
inline Ref ref_softmax_rows(Ref a) {
  for (auto& row : a) {
    LD mx = *std::max_element(row.begin(), row.end());
    LD z = 0;
    for (auto& v : row) z += (v = std::exp(v - mx));
    for (auto& v : row) v /= z;
  }
  return a;
}

inline Ref ref_concat(const Ref& a, const Ref& b) {
  Ref c = a;
  for (std::size_t i = 0; i < a.size(); ++i) c[i].insert(c[i].end(), b[i].begin(), b[i].end());
  return c;
}

// Sliding-window convolution: out[t][o] = sum_{w, i} x[t + w - pad][i] k[w*d_in + i][o].
inline Ref ref_conv1d(const Ref& x, const Ref& k, std::size_t width, std::size_t pad) {
  const std::size_t n = x.size(), din = x[0].size(), dout = k[0].size();
  Ref out(n, std::vector<LD>(dout, 0.0L));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t w = 0; w < width; ++w) {
      const long src = long(t) + long(w) - long(pad);
      if (src < 0 || src >= long(n)) continue;
      for (std::size_t i = 0; i < din; ++i)
        for (std::size_t o = 0; o < dout; ++o) out[t][o] += x[src][i] * k[w * din + i][o];
    }
  return out;
}

inline Ref ref_normalize_rows(Ref a, LD eps) {
  for (auto& row : a) {
    LD s = 0;
    for (auto v : row) s += v * v;
    const LD n = std::sqrt(s) + eps;
    for (auto& v : row) v /= n;
  }
  return a;
}

}  // namespace avtest
