// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/model/params.hpp"

#include <cmath>

namespace avlab::model {

namespace {

Matrix<float> uniform(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Matrix<float> m(rows, cols);
  for (auto& v : m.data) v = static_cast<float>(rng.uniform(-bound, bound));
  return m;
}

// Linear layer fan_in -> fan_out with PyTorch-style uniform init.
void add_linear(ModelParams& p, Rng& rng, const std::string& name, std::size_t fan_in, std::size_t fan_out) {
  p.add(name + ".weight", uniform(rng, fan_in, fan_out, 1.0 / std::sqrt(double(fan_in))), true);
  p.add(name + ".bias", Matrix<float>(1, fan_out), true);
}

void add_conv(ModelParams& p, Rng& rng, const std::string& name, std::size_t width, std::size_t c_in,
              std::size_t c_out, double gain) {
  const double bound = gain / std::sqrt(double(width * c_in));
  p.add(name + ".kernel", uniform(rng, width * c_in, c_out, bound), true);
  p.add(name + ".bias", Matrix<float>(1, c_out), true);
}

Matrix<float> orthonormal_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows > cols) throw ConfigError("cannot draw " + std::to_string(rows) + " orthonormal rows in dimension " +
                                     std::to_string(cols));
  std::vector<std::vector<double>> basis;
  Matrix<float> out(rows, cols);
  while (basis.size() < rows) {
    std::vector<double> v(cols);
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double proj = 0.0;
      for (std::size_t j = 0; j < cols; ++j) proj += v[j] * b[j];
      for (std::size_t j = 0; j < cols; ++j) v[j] -= proj * b[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    for (std::size_t j = 0; j < cols; ++j) out(basis.size(), j) = static_cast<float>(v[j]);
    basis.push_back(std::move(v));
  }
  return out;
}

void add_temporal_visual(ModelParams& p, Rng& rng, std::size_t d) {
  const double b = 1.0 / std::sqrt(double(d));
  p.add("temporal_visual.wq", uniform(rng, d, d, b), true);
  p.add("temporal_visual.wk", uniform(rng, d, d, b), true);
  p.add("temporal_visual.wv", uniform(rng, d, d, b), true);
  p.add("temporal_visual.wo", uniform(rng, d, d, 0.1 * b), true);
  p.add("temporal_visual.bo", Matrix<float>(1, d), true);
}

void add_heads(ModelParams& p, Rng& rng, const ModelDims& dims, const Matrix<float>* class_base) {
  const std::size_t d = dims.d, C = dims.num_classes;
  add_linear(p, rng, "classifier.fc1", d, dims.classifier_hidden);
  add_linear(p, rng, "classifier.fc2", dims.classifier_hidden, 1);
  if (class_base) {
    if (class_base->rows() != C || class_base->cols() != d) {
      throw ConfigError("class embeddings " + class_base->shape.str() + " do not match C x d = " +
                        Shape{C, d}.str());
    }
    p.add("class_base", *class_base, false);
  } else {
    p.add("class_base", orthonormal_rows(rng, C, d), false);
  }
  p.add("text_prompt", Matrix<float>(C, d), true);
  add_linear(p, rng, "prompt_ffn.fc1", d, dims.prompt_hidden);
  add_linear(p, rng, "prompt_ffn.fc2", dims.prompt_hidden, d);
}

}  // namespace

const char* architecture_name(Architecture a) { return a == Architecture::teacher ? "teacher" : "student"; }

Architecture parse_architecture(const std::string& s) {
  if (s == "teacher") return Architecture::teacher;
  if (s == "student") return Architecture::student;
  throw FormatError("unknown architecture '" + s + "'");
}

ModelDims ModelDims::defaults(std::size_t d, std::size_t num_classes) {
  ModelDims m;
  m.d = d;
  m.num_classes = num_classes;
  m.fusion_hidden = d;
  m.classifier_hidden = std::max<std::size_t>(1, d / 4);
  m.prompt_hidden = 4 * d;
  m.uncert_hidden = std::max<std::size_t>(1, d / 4);
  return m;
}

void ModelDims::validate() const {
  if (d == 0) throw ConfigError("model.d must be positive");
  if (num_classes < 2) throw ConfigError("model needs at least 2 classes");
  if (num_classes > d) throw ConfigError("model: num_classes must not exceed d");
  if (fusion_hidden == 0 || classifier_hidden == 0 || prompt_hidden == 0 || uncert_hidden == 0) {
    throw ConfigError("model hidden widths must be positive");
  }
  if (temporal_window == 0 || temporal_window % 2 == 0) throw ConfigError("model.temporal_window must be odd");
}

ModelParams ModelParams::init(Architecture arch, const ModelDims& dims, Rng& rng, const Matrix<float>* class_base) {
  dims.validate();
  ModelParams p(arch, dims);
  const std::size_t d = dims.d;
  if (arch == Architecture::teacher) {
    add_temporal_visual(p, rng, d);
    p.add("temporal_audio.kernel", uniform(rng, 3 * d, d, 0.1 / std::sqrt(3.0 * double(d))), true);
    add_linear(p, rng, "fusion_gate", 2 * d, d);
    add_linear(p, rng, "fusion_res.fc1", 2 * d, dims.fusion_hidden);
    add_linear(p, rng, "fusion_res.fc2", dims.fusion_hidden, d);
    // Residual starts closed: an untrained teacher is the visual pathway.
    p.at("fusion_res.fc2.weight") = Matrix<float>(dims.fusion_hidden, d);
    add_heads(p, rng, dims, class_base);
  } else {
    add_temporal_visual(p, rng, d);
    add_conv(p, rng, "enhance", 3, d, d, 1.0);
    add_conv(p, rng, "uncert.conv1", 3, d, dims.uncert_hidden, 1.0);
    add_conv(p, rng, "uncert.conv2", 3, dims.uncert_hidden, dims.uncert_hidden, 1.0);
    p.add("uncert.conv3.kernel", Matrix<float>(3 * dims.uncert_hidden, 1), true);
    p.add("uncert.conv3.bias", Matrix<float>(1, 1), true);
    add_heads(p, rng, dims, class_base);
  }
  return p;
}

void ModelParams::add(std::string name, Matrix<float> value, bool trainable) {
  if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back(Param{std::move(name), std::move(value), trainable});
}

bool ModelParams::has(const std::string& name) const { return index_.count(name) != 0; }

Matrix<float>& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named '" + name + "'");
  return entries_[it->second].value;
}

const Matrix<float>& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named '" + name + "'");
  return entries_[it->second].value;
}

std::size_t ModelParams::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.value.size();
  }
  return n;
}

void ModelParams::check_finite() const {
  for (const auto& e : entries_) {
    for (float v : e.value.data) {
      if (!std::isfinite(v)) throw NumericError("parameter '" + e.name + "' has a non-finite entry");
    }
  }
}

bool ModelParams::operator==(const ModelParams& o) const {
  if (arch_ != o.arch_ || !(dims_ == o.dims_) || entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = o.entries_[i];
    if (a.name != b.name || a.trainable != b.trainable || !(a.value == b.value)) return false;
  }
  return true;
}

template <class Real>
BoundParams<Real> ModelParams::bind(diff::Tape<Real>& tape) const {
  BoundParams<Real> bound(dims_);
  for (const auto& e : entries_) bound.set(e.name, tape.leaf(e.value.template cast<Real>(), e.trainable));
  return bound;
}

template <class Real>
diff::Var<Real> BoundParams<Real>::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ContractError("parameter '" + name + "' is not bound");
  return it->second;
}

template BoundParams<float> ModelParams::bind(diff::Tape<float>&) const;
template BoundParams<double> ModelParams::bind(diff::Tape<double>&) const;
template class BoundParams<float>;
template class BoundParams<double>;

}  // namespace avlab::model
