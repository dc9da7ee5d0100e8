// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "avlab/diff/matrix.hpp"

namespace avlab::diff {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
  matmul,
  transpose,
  add,
  sub,
  mul,
  add_row,
  scale,
  add_scalar,
  div_by_scalar,
  sigmoid,
  gelu,
  relu,
  log,
  exp,
  square,
  pow_scalar,
  clamp,
  softmax,
  log_softmax,
  conv1d,
  topk_mean,
  topk_mean_cols,
  sum,
  mean,
  row_sum,
  concat_cols,
  select,
  normalize_rows,
};

const char* op_name(OpKind kind);

template <class Real>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <class Real>
class Var {
 public:
  Var() = default;
  Var(Tape<Real>* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape<Real>* tape() const { return tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Shape& shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::span<const Real> values() const;
  Matrix<Real> value() const;
  // Value of a 1 x 1 node.
  Real item() const;
  bool has_grad() const;
  // Empty unless a backward pass reached this node.
  std::span<const Real> grad() const;
  Matrix<Real> grad_matrix() const;

 private:
  Tape<Real>* tape_ = nullptr;
  NodeId id_ = 0;
};

// Reverse-mode tape. Records are appended as operations run, so every
// record's inputs precede it and a reverse sweep is a valid topological
// order. Values are stored as Real; matmul and reductions accumulate in double.
template <class Real>
class Tape {
 public:
  struct Node {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;  // lazily materialized
    bool needs_grad = false;
  };

  struct Record {
    OpKind kind{};
    std::array<NodeId, 2> inputs{};
    std::uint8_t n_inputs = 0;
    NodeId output = 0;
    std::vector<Real> saved;            // forward intermediates
    std::vector<std::uint32_t> indices;  // selections (top-k)
    double a = 0.0;
    double b = 0.0;
    std::size_t k = 0;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> leaf(Matrix<Real> value, bool requires_grad);
  Var<Real> constant(Matrix<Real> value) { return leaf(std::move(value), false); }
  Var<Real> scalar(Real v, bool requires_grad = false) { return leaf(Matrix<Real>(1, 1, v), requires_grad); }

  // Computes d(root)/d(node) for every node the root depends on. The root
  // must be 1 x 1. Gradients from earlier passes are discarded.
  void backward(Var<Real> root);

  std::size_t node_count() const { return nodes_.size(); }
  std::span<const Record> records() const { return records_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  Node& node(NodeId id) { return nodes_[id]; }

  // Used by operations: appends the output node and its record.
  Var<Real> emit(Record record, Shape shape, std::vector<Real> value);
  void check_owned(const Var<Real>& v) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Record> records_;
};

// Applies the backward rule of one record; accumulates into input grads.
template <class Real>
void apply_backward(Tape<Real>& tape, const typename Tape<Real>::Record& record);

}  // namespace avlab::diff
