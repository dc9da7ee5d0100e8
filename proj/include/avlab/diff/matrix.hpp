// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "avlab/common/errors.hpp"

namespace avlab {

// Every array in the library is two-dimensional. Vectors are n x 1 or 1 x n
// and scalars are 1 x 1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }
};

// Dense row-major matrix used for parameters, features and constant inputs.
template <class Real>
struct Matrix {
  Shape shape;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : shape{rows, cols}, data(rows * cols, fill) {}
  Matrix(Shape s, std::vector<Real> values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.size()) {
      throw DimensionError("matrix payload of " + std::to_string(data.size()) +
                           " values does not fit shape " + shape.str());
    }
  }

  std::size_t rows() const { return shape.rows; }
  std::size_t cols() const { return shape.cols; }
  std::size_t size() const { return data.size(); }

  Real& operator()(std::size_t r, std::size_t c) { return data[r * shape.cols + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data[r * shape.cols + c]; }

  std::span<Real> row(std::size_t r) { return {data.data() + r * shape.cols, shape.cols}; }
  std::span<const Real> row(std::size_t r) const { return {data.data() + r * shape.cols, shape.cols}; }

  bool operator==(const Matrix&) const = default;

  template <class Other>
  Matrix<Other> cast() const {
    Matrix<Other> out(shape.rows, shape.cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
    return out;
  }
};

}  // namespace avlab
