// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/diff/tape.hpp"

#include <cmath>

namespace avlab::diff {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::matmul: return "matmul";
    case OpKind::transpose: return "transpose";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::add_row: return "add_row";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::div_by_scalar: return "div_by_scalar";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::gelu: return "gelu";
    case OpKind::relu: return "relu";
    case OpKind::log: return "log";
    case OpKind::exp: return "exp";
    case OpKind::square: return "square";
    case OpKind::pow_scalar: return "pow_scalar";
    case OpKind::clamp: return "clamp";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::conv1d: return "conv1d";
    case OpKind::topk_mean: return "topk_mean";
    case OpKind::topk_mean_cols: return "topk_mean_cols";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::row_sum: return "row_sum";
    case OpKind::concat_cols: return "concat_cols";
    case OpKind::select: return "select";
    case OpKind::normalize_rows: return "normalize_rows";
  }
  return "unknown";
}

template <class Real>
const Shape& Var<Real>::shape() const {
  return tape_->node(id_).shape;
}

template <class Real>
std::span<const Real> Var<Real>::values() const {
  return tape_->node(id_).value;
}

template <class Real>
Matrix<Real> Var<Real>::value() const {
  const auto& n = tape_->node(id_);
  return Matrix<Real>(n.shape, n.value);
}

template <class Real>
Real Var<Real>::item() const {
  const auto& n = tape_->node(id_);
  if (n.shape.size() != 1) throw ContractError("item() on non-scalar node of shape " + n.shape.str());
  return n.value[0];
}

template <class Real>
bool Var<Real>::has_grad() const {
  return !tape_->node(id_).grad.empty();
}

template <class Real>
std::span<const Real> Var<Real>::grad() const {
  return tape_->node(id_).grad;
}

template <class Real>
Matrix<Real> Var<Real>::grad_matrix() const {
  const auto& n = tape_->node(id_);
  if (n.grad.empty()) return Matrix<Real>(n.shape.rows, n.shape.cols);
  return Matrix<Real>(n.shape, n.grad);
}

template <class Real>
Var<Real> Tape<Real>::leaf(Matrix<Real> value, bool requires_grad) {
  if (value.shape.rows == 0 || value.shape.cols == 0) {
    throw DimensionError("leaf with empty shape " + value.shape.str());
  }
  Node n;
  n.shape = value.shape;
  n.value = std::move(value.data);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var<Real>(this, static_cast<NodeId>(nodes_.size() - 1));
}

template <class Real>
void Tape<Real>::check_owned(const Var<Real>& v) const {
  if (v.tape() != this) throw ContractError("node belongs to a different tape");
}

template <class Real>
Var<Real> Tape<Real>::emit(Record record, Shape shape, std::vector<Real> value) {
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  for (std::uint8_t i = 0; i < record.n_inputs; ++i) {
    n.needs_grad = n.needs_grad || nodes_[record.inputs[i]].needs_grad;
  }
  nodes_.push_back(std::move(n));
  record.output = static_cast<NodeId>(nodes_.size() - 1);
  records_.push_back(std::move(record));
  return Var<Real>(this, records_.back().output);
}

template <class Real>
void Tape<Real>::backward(Var<Real> root) {
  check_owned(root);
  Node& r = nodes_[root.id()];
  if (r.shape.size() != 1) {
    throw ContractError("backward requires a scalar root, got shape " + r.shape.str());
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!r.needs_grad) return;
  r.grad.assign(1, Real(1));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output > root.id()) continue;
    const Node& out = nodes_[it->output];
    if (out.grad.empty() || !out.needs_grad) continue;
    apply_backward(*this, *it);
  }
}

template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace avlab::diff
