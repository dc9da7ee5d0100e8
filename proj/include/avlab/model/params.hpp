// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "avlab/common/rng.hpp"
#include "avlab/diff/tape.hpp"

namespace avlab::model {

// teacher: audio-visual model (temporal encoders, adaptive fusion, heads).
// student: single-modality model (temporal encoder, enhancement net,
// uncertainty net, heads).
enum class Architecture { teacher, student };

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& s);

struct ModelDims {
  std::size_t d = 64;
  std::size_t num_classes = 4;
  std::size_t fusion_hidden = 64;      // d
  std::size_t classifier_hidden = 16;  // d / 4
  std::size_t prompt_hidden = 256;     // 4 d
  std::size_t uncert_hidden = 16;      // d / 4
  std::size_t temporal_window = 9;

  static ModelDims defaults(std::size_t d, std::size_t num_classes);
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

struct Param {
  std::string name;
  Matrix<float> value;
  bool trainable = true;
};

template <class Real>
class BoundParams;

// Named trainable state. Entries keep a fixed order, which is also the
// checkpoint order.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(Architecture arch, ModelDims dims) : arch_(arch), dims_(dims) {}

  // Fresh initialization. class_base (C x d) is used verbatim when given,
  // otherwise random orthonormal rows are drawn.
  static ModelParams init(Architecture arch, const ModelDims& dims, Rng& rng,
                          const Matrix<float>* class_base = nullptr);

  Architecture architecture() const { return arch_; }
  const ModelDims& dims() const { return dims_; }

  void add(std::string name, Matrix<float> value, bool trainable);
  bool has(const std::string& name) const;
  Matrix<float>& at(const std::string& name);
  const Matrix<float>& at(const std::string& name) const;
  std::vector<Param>& entries() { return entries_; }
  const std::vector<Param>& entries() const { return entries_; }

  std::size_t trainable_count() const;
  // Throws NumericError naming the first parameter with a non-finite entry.
  void check_finite() const;

  template <class Real>
  BoundParams<Real> bind(diff::Tape<Real>& tape) const;

  bool operator==(const ModelParams& o) const;

 private:
  Architecture arch_ = Architecture::teacher;
  ModelDims dims_;
  std::vector<Param> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parameters placed on a tape. Trainable entries are gradient leaves, frozen
// ones constants.
template <class Real>
class BoundParams {
 public:
  BoundParams(const ModelDims& dims) : dims_(dims) {}

  void set(const std::string& name, diff::Var<Real> v) { vars_[name] = v; }
  diff::Var<Real> operator[](const std::string& name) const;
  bool has(const std::string& name) const { return vars_.count(name) != 0; }
  const ModelDims& dims() const { return dims_; }

 private:
  ModelDims dims_;
  std::unordered_map<std::string, diff::Var<Real>> vars_;
};

}  // namespace avlab::model
