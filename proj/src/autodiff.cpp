/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "actmap/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "actmap/error.hpp"

namespace actmap {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "softplus") return Activation::softplus;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t parameter_count(std::span<const LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.rows * s.cols + s.rows;
  return n;
}

NetworkParams::NetworkParams(std::vector<LayerShape> shapes)
    : shapes_(std::move(shapes)), values_(parameter_count(shapes_), 0.0) {
  index_layers();
}

NetworkParams::NetworkParams(std::vector<LayerShape> shapes, std::vector<double> values)
    : shapes_(std::move(shapes)), values_(std::move(values)) {
  if (values_.size() != parameter_count(shapes_)) {
    throw ConfigError("parameter vector length " + std::to_string(values_.size()) +
                      " does not match layer shapes (" +
                      std::to_string(parameter_count(shapes_)) + ")");
  }
  index_layers();
}

void NetworkParams::index_layers() {
  offsets_.clear();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const auto& s = shapes_[i];
    if (s.rows == 0 || s.cols == 0) throw ConfigError("layer " + std::to_string(i) + " is empty");
    offsets_.push_back(offset);
    offset += s.rows * s.cols + s.rows;
  }
}

NetworkParams NetworkParams::glorot(std::vector<LayerShape> shapes, Rng& rng) {
  NetworkParams p(std::move(shapes));
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const auto& s = p.layer(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t off = p.weight_offset(l);
    for (std::size_t k = 0; k < s.rows * s.cols; ++k) p.values_[off + k] = dist(rng);
  }
  return p;
}

std::size_t NetworkParams::bias_offset(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return offsets_[layer] + s.rows * s.cols;
}

NetworkParams::WeightMap NetworkParams::weight(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return WeightMap(values_.data() + offsets_[layer], static_cast<Eigen::Index>(s.rows),
                   static_cast<Eigen::Index>(s.cols));
}

NetworkParams::BiasMap NetworkParams::bias(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return BiasMap(values_.data() + bias_offset(layer), static_cast<Eigen::Index>(s.rows));
}

bool NetworkParams::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
        << b.cols();
    throw ConfigError(msg.str());
  }
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Reduces a gradient to the shape of a (possibly broadcast) operand.
Matrix reduce_to(const Matrix& g, const Matrix& like) {
  if (is_scalar(like) && !is_scalar(g)) return Matrix::Constant(1, 1, g.sum());
  return g;
}

}  // namespace

Matrix activate(const Matrix& x, Activation activation) {
  switch (activation) {
    case Activation::identity: return x;
    case Activation::tanh: return x.array().tanh().matrix();
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::softplus: return x.unaryExpr([](double v) { return softplus_scalar(v); });
  }
  return x;
}

Matrix forward_batch(const NetworkParams& params, const Matrix& inputs, std::size_t first,
                     std::size_t count) {
  const std::size_t last = count == static_cast<std::size_t>(-1)
                               ? params.num_layers()
                               : std::min(params.num_layers(), first + count);
  Matrix x = inputs;
  for (std::size_t l = first; l < last; ++l) {
    const auto& s = params.layer(l);
    if (static_cast<std::size_t>(x.cols()) != s.cols) {
      throw ConfigError("layer " + std::to_string(l) + " expects " + std::to_string(s.cols) +
                        " inputs, got " + std::to_string(x.cols()));
    }
    Matrix y = x * params.weight(l).transpose();
    y.rowwise() += params.bias(l).transpose();
    x = activate(y, s.activation);
  }
  return x;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw ConfigError("pairwise_sqdist: dimension mismatch");
  Matrix out = Matrix::Zero(x.rows(), y.rows());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      out.col(j).array() += (x.col(k).array() - y(j, k)).square();
    }
  }
  return out;
}

Vector row_logsumexp(const Matrix& x) {
  Vector m = x.rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (std::isinf(m[i])) m[i] = 0.0;
  }
  Matrix shifted = x.colwise() - m;
  shifted = shifted.array().exp();
  Vector out = m.array() + shifted.rowwise().sum().array().log();
  // Vectorized exp(-inf) can yield a subnormal rather than 0.
  const double ninf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (x.row(i).maxCoeff() == ninf) out[i] = ninf;
  }
  return out;
}

Vector forward(const NetworkParams& params, std::span<const double> input) {
  Matrix row(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = input[i];
  return forward_batch(params, row).row(0).transpose();
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (!is_scalar(v)) throw UsageError("Var::scalar on a non-scalar node");
  return v(0, 0);
}

Tape::Binding Tape::bind(const NetworkParams& params) {
  bound_.push_back(&params);
  return bound_.size() - 1;
}

Var Tape::push(Matrix value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Matrix& dst = nodes_[id].grad;
  if (dst.size() == 0) {
    dst = g;
  } else {
    dst += g;
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::scalar(double value) { return push(Matrix::Constant(1, 1, value)); }

Var Tape::weight(Binding binding, std::size_t layer) {
  const NetworkParams& p = *bound_.at(binding);
  Var v = push(Matrix(p.weight(layer)));
  nodes_.back().binding = static_cast<int>(binding);
  nodes_.back().offset = p.weight_offset(layer);
  return v;
}

Var Tape::bias(Binding binding, std::size_t layer) {
  const NetworkParams& p = *bound_.at(binding);
  Var v = push(Matrix(p.bias(layer).transpose()));
  nodes_.back().binding = static_cast<int>(binding);
  nodes_.back().offset = p.bias_offset(layer);
  return v;
}

Var Tape::dense(Binding binding, std::size_t layer, Var x) {
  const LayerShape& s = bound_.at(binding)->layer(layer);
  if (static_cast<std::size_t>(x.cols()) != s.cols) {
    throw ConfigError("layer " + std::to_string(layer) + " expects " + std::to_string(s.cols) +
                      " inputs, got " + std::to_string(x.cols()));
  }
  Var w = weight(binding, layer);
  Var b = bias(binding, layer);
  Matrix y = x.value() * w.value().transpose();
  y.rowwise() += b.value().row(0);
  const std::size_t xi = x.id(), wi = w.id(), bi = b.id();
  Var affine = push(std::move(y), [xi, wi, bi](Tape& t, const Matrix& g) {
    t.accumulate(xi, g * t.value(wi));
    t.accumulate(wi, g.transpose() * t.value(xi));
    t.accumulate(bi, g.colwise().sum());
  });
  return activation(affine, s.activation);
}

Var Tape::mlp(Binding binding, std::size_t first, std::size_t count, Var x) {
  for (std::size_t l = first; l < first + count; ++l) x = dense(binding, l, x);
  return x;
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out;
  if (is_scalar(av) && !is_scalar(bv)) {
    out = bv.array() + av(0, 0);
  } else if (is_scalar(bv) && !is_scalar(av)) {
    out = av.array() + bv(0, 0);
  } else {
    require_same_shape(av, bv, "add");
    out = av + bv;
  }
  const std::size_t ai = a.id(), bi = b.id();
  return push(std::move(out), [ai, bi](Tape& t, const Matrix& g) {
    t.accumulate(ai, reduce_to(g, t.value(ai)));
    t.accumulate(bi, reduce_to(g, t.value(bi)));
  });
}

Var Tape::sub(Var a, Var b) { return add(a, neg(b)); }

Var Tape::mul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out;
  if (is_scalar(av) && !is_scalar(bv)) {
    out = bv * av(0, 0);
  } else if (is_scalar(bv) && !is_scalar(av)) {
    out = av * bv(0, 0);
  } else {
    require_same_shape(av, bv, "mul");
    out = av.cwiseProduct(bv);
  }
  const std::size_t ai = a.id(), bi = b.id();
  return push(std::move(out), [ai, bi](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    const Matrix& y = t.value(bi);
    if (is_scalar(x) && !is_scalar(y)) {
      t.accumulate(ai, Matrix::Constant(1, 1, g.cwiseProduct(y).sum()));
      t.accumulate(bi, g * x(0, 0));
    } else if (is_scalar(y) && !is_scalar(x)) {
      t.accumulate(ai, g * y(0, 0));
      t.accumulate(bi, Matrix::Constant(1, 1, g.cwiseProduct(x).sum()));
    } else {
      t.accumulate(ai, g.cwiseProduct(y));
      t.accumulate(bi, g.cwiseProduct(x));
    }
  });
}

Var Tape::div(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "div");
  Matrix out = a.value().cwiseQuotient(b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return push(std::move(out), [ai, bi](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    const Matrix& y = t.value(bi);
    t.accumulate(ai, g.cwiseQuotient(y));
    t.accumulate(bi, -(g.cwiseProduct(x).cwiseQuotient(y.cwiseProduct(y))));
  });
}

Var Tape::scale(Var a, double c) {
  const std::size_t ai = a.id();
  return push(a.value() * c, [ai, c](Tape& t, const Matrix& g) { t.accumulate(ai, g * c); });
}

Var Tape::shift(Var a, double c) {
  const std::size_t ai = a.id();
  return push(a.value().array() + c, [ai](Tape& t, const Matrix& g) { t.accumulate(ai, g); });
}

Var Tape::exp(Var a) {
  Var out = push(a.value().array().exp().matrix());
  const std::size_t ai = a.id(), oi = out.id();
  nodes_[oi].backward = [ai, oi](Tape& t, const Matrix& g) {
    t.accumulate(ai, g.cwiseProduct(t.value(oi)));
  };
  return out;
}

Var Tape::log(Var a) {
  const std::size_t ai = a.id();
  return push(a.value().array().log().matrix(), [ai](Tape& t, const Matrix& g) {
    t.accumulate(ai, g.cwiseQuotient(t.value(ai)));
  });
}

Var Tape::tanh(Var a) {
  Var out = push(a.value().array().tanh().matrix());
  const std::size_t ai = a.id(), oi = out.id();
  nodes_[oi].backward = [ai, oi](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(oi);
    t.accumulate(ai, g.array() * (1.0 - y.array().square()));
  };
  return out;
}

Var Tape::relu(Var a) {
  const std::size_t ai = a.id();
  return push(a.value().cwiseMax(0.0), [ai](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    t.accumulate(ai, (x.array() > 0.0).select(g, 0.0));
  });
}

Var Tape::softplus(Var a) {
  const std::size_t ai = a.id();
  return push(activate(a.value(), Activation::softplus), [ai](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    t.accumulate(ai, g.cwiseProduct(x.unaryExpr([](double v) { return sigmoid(v); })));
  });
}

Var Tape::square(Var a) {
  const std::size_t ai = a.id();
  return push(a.value().array().square().matrix(), [ai](Tape& t, const Matrix& g) {
    t.accumulate(ai, 2.0 * g.cwiseProduct(t.value(ai)));
  });
}

Var Tape::activation(Var a, Activation act) {
  switch (act) {
    case Activation::identity: return a;
    case Activation::tanh: return tanh(a);
    case Activation::relu: return relu(a);
    case Activation::softplus: return softplus(a);
  }
  return a;
}

Var Tape::clamp(Var a, double lo, double hi) {
  const std::size_t ai = a.id();
  return push(a.value().cwiseMax(lo).cwiseMin(hi), [ai, lo, hi](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    t.accumulate(ai, ((x.array() >= lo) && (x.array() <= hi)).select(g, 0.0));
  });
}

Var Tape::minimum(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "minimum");
  const std::size_t ai = a.id(), bi = b.id();
  return push(a.value().cwiseMin(b.value()), [ai, bi](Tape& t, const Matrix& g) {
    const auto take_a = t.value(ai).array() <= t.value(bi).array();
    t.accumulate(ai, take_a.select(g, 0.0));
    t.accumulate(bi, take_a.select(0.0, g));
  });
}

Var Tape::sum(Var a) {
  const std::size_t ai = a.id();
  return push(Matrix::Constant(1, 1, a.value().sum()), [ai](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    t.accumulate(ai, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var Tape::mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var Tape::row_sum(Var a) {
  const std::size_t ai = a.id();
  return push(a.value().rowwise().sum(), [ai](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    t.accumulate(ai, g.replicate(1, x.cols()));
  });
}

Var Tape::dot(Var a, const Matrix& w) {
  require_same_shape(a.value(), w, "dot");
  const std::size_t ai = a.id();
  return push(Matrix::Constant(1, 1, a.value().cwiseProduct(w).sum()),
              [ai, w](Tape& t, const Matrix& g) { t.accumulate(ai, w * g(0, 0)); });
}

Var Tape::mul_col(Var a, Var c) {
  if (c.cols() != 1 || c.rows() != a.rows()) throw ConfigError("mul_col: expected a B x 1 column");
  Matrix out = a.value().array().colwise() * c.value().col(0).array();
  const std::size_t ai = a.id(), ci = c.id();
  return push(std::move(out), [ai, ci](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    const Matrix& s = t.value(ci);
    t.accumulate(ai, g.array().colwise() * s.col(0).array());
    t.accumulate(ci, g.cwiseProduct(x).rowwise().sum());
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ConfigError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return push(std::move(out), [ids, widths](Tape& t, const Matrix& g) {
    Eigen::Index start = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.accumulate(ids[k], g.middleCols(start, widths[k]));
      start += widths[k];
    }
  });
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw UsageError("slice_cols out of range");
  const std::size_t ai = a.id();
  return push(a.value().middleCols(start, count), [ai, start, count](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(ai);
    Matrix full = Matrix::Zero(x.rows(), x.cols());
    full.middleCols(start, count) = g;
    t.accumulate(ai, full);
  });
}

Var Tape::broadcast_rows(Var a, Eigen::Index rows) {
  if (a.rows() != 1) throw UsageError("broadcast_rows expects a single row");
  const std::size_t ai = a.id();
  return push(a.value().replicate(rows, 1),
              [ai](Tape& t, const Matrix& g) { t.accumulate(ai, g.colwise().sum()); });
}

Var Tape::segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments) {
  if (static_cast<std::size_t>(a.rows()) != segment.size()) {
    throw ConfigError("segment_sum: segment ids do not match rows");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(segments), a.cols());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    if (segment[i] >= segments) throw UsageError("segment_sum: segment id out of range");
    out.row(static_cast<Eigen::Index>(segment[i])) += a.value().row(static_cast<Eigen::Index>(i));
  }
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  const std::size_t ai = a.id();
  return push(std::move(out), [ai, seg = std::move(seg)](Tape& t, const Matrix& g) {
    Matrix ga(static_cast<Eigen::Index>(seg.size()), g.cols());
    for (std::size_t i = 0; i < seg.size(); ++i) {
      ga.row(static_cast<Eigen::Index>(i)) = g.row(static_cast<Eigen::Index>(seg[i]));
    }
    t.accumulate(ai, ga);
  });
}

Var Tape::pairwise_sqdist(Var x, Var y) {
  if (x.cols() != y.cols()) throw ConfigError("pairwise_sqdist: dimension mismatch");
  Matrix out = actmap::pairwise_sqdist(x.value(), y.value());
  const std::size_t xi = x.id(), yi = y.id();
  return push(std::move(out), [xi, yi](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(xi);
    const Matrix& yv = t.value(yi);
    Matrix gx = 2.0 * (xv.array().colwise() * g.rowwise().sum().col(0).array()).matrix() -
                2.0 * g * yv;
    Matrix gy = 2.0 * (yv.array().colwise() * g.colwise().sum().transpose().col(0).array())
                          .matrix() -
                2.0 * g.transpose() * xv;
    t.accumulate(xi, gx);
    t.accumulate(yi, gy);
  });
}

Var Tape::row_logsumexp(Var a) {
  const Matrix& x = a.value();
  Vector m = x.rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (std::isinf(m[i])) m[i] = 0.0;
  }
  Matrix soft = x.colwise() - m;
  soft = soft.array().exp();
  const Vector total = soft.rowwise().sum();
  Matrix out = (m.array() + total.array().log()).matrix();
  soft.array().colwise() /= total.array();
  const double ninf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (x.row(i).maxCoeff() == ninf) {
      out(i, 0) = ninf;
      soft.row(i).setZero();
    }
  }
  const std::size_t ai = a.id();
  return push(std::move(out), [ai, soft = std::move(soft)](Tape& t, const Matrix& g) {
    t.accumulate(ai, soft.array().colwise() * g.col(0).array());
  });
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("loss belongs to a different tape");
  const Matrix& lv = loss.value();
  if (!is_scalar(lv)) {
    throw UsageError("gradient requires a scalar loss, got " + std::to_string(lv.rows()) + "x" +
                     std::to_string(lv.cols()));
  }
  if (!std::isfinite(lv(0, 0))) throw NumericError("loss is not finite", loss.id());
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  root_ = loss.id();
}

std::vector<double> Tape::param_gradient(Binding binding) const {
  const NetworkParams& p = *bound_.at(binding);
  std::vector<double> out(p.size(), 0.0);
  for (const Node& n : nodes_) {
    if (n.binding != static_cast<int>(binding) || n.grad.size() == 0) continue;
    const Eigen::Index cols = n.grad.cols();
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        out[n.offset + static_cast<std::size_t>(r * cols + c)] += n.grad(r, c);
      }
    }
  }
  return out;
}

std::vector<double> Tape::gradient(Var loss, Binding binding) {
  if (root_ != loss.id()) backward(loss);
  return param_gradient(binding);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

// ---------------------------------------------------------------------------
// Optimizer

void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& state,
               double learning_rate, const AdamConfig& config) {
  const std::size_t n = params.size();
  if (grads.size() != n) throw ConfigError("adam_step: gradient length mismatch");
  if (state.m.size() != n || state.v.size() != n) {
    throw ConfigError("adam_step: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at parameter " + std::to_string(i), i);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto values = params.values();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    values[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

double clip_gradient_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

}  // namespace actmap
