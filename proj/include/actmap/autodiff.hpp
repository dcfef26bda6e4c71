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

#ifndef ACTMAP_AUTODIFF_HPP_
#define ACTMAP_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace actmap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

inline std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

enum class Activation : std::uint8_t { identity = 0, tanh = 1, relu = 2, softplus = 3 };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

struct LayerShape {
  std::size_t rows = 0;  // outputs
  std::size_t cols = 0;  // inputs
  Activation activation = Activation::identity;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Flat parameter vector for a stack of dense layers.
///
/// Each layer stores a row-major `rows x cols` weight block followed by a
/// `rows` bias block. Sub-networks (set encoders, trunks) are addressed by
/// layer index ranges over the same flat vector.
class NetworkParams {
 public:
  using WeightMap = Eigen::Map<const RowMatrix>;
  using BiasMap = Eigen::Map<const Vector>;

  NetworkParams() = default;
  explicit NetworkParams(std::vector<LayerShape> shapes);
  NetworkParams(std::vector<LayerShape> shapes, std::vector<double> values);

  /// Glorot-uniform weights, zero biases.
  static NetworkParams glorot(std::vector<LayerShape> shapes, Rng& rng);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t num_layers() const noexcept { return shapes_.size(); }
  const LayerShape& layer(std::size_t i) const { return shapes_.at(i); }
  const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const;

  WeightMap weight(std::size_t layer) const;
  BiasMap bias(std::size_t layer) const;

  bool all_finite() const noexcept;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;

 private:
  void index_layers();

  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

std::size_t parameter_count(std::span<const LayerShape> shapes);

Matrix activate(const Matrix& x, Activation activation);

/// Applies layers [first, first + count) to a batch (one sample per row).
Matrix forward_batch(const NetworkParams& params, const Matrix& inputs,
                     std::size_t first = 0,
                     std::size_t count = static_cast<std::size_t>(-1));

/// Single-sample forward pass through every layer in order.
Vector forward(const NetworkParams& params, std::span<const double> input);

/// out(i, j) = |x_i - y_j|^2 over rows, accumulated coordinate by coordinate.
Matrix pairwise_sqdist(const Matrix& x, const Matrix& y);
/// Row-wise log(sum(exp(.))) with the max-shift; rows of -inf stay -inf.
Vector row_logsumexp(const Matrix& x);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape over dense matrix values.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and the backward sweep is a reverse scan. Parameter
/// leaves remember their flat offset in the bound NetworkParams; several
/// leaves may alias the same parameters (a network evaluated twice) and
/// their gradients accumulate.
class Tape {
 public:
  using Binding = std::size_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Binding bind(const NetworkParams& params);
  const NetworkParams& bound(Binding binding) const { return *bound_.at(binding); }

  Var constant(Matrix value);
  Var scalar(double value);
  Var weight(Binding binding, std::size_t layer);
  Var bias(Binding binding, std::size_t layer);

  /// x * W^T + b followed by the layer activation.
  Var dense(Binding binding, std::size_t layer, Var x);
  Var mlp(Binding binding, std::size_t first, std::size_t count, Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var square(Var a);
  Var activation(Var a, Activation act);
  Var clamp(Var a, double lo, double hi);
  Var minimum(Var a, Var b);

  Var sum(Var a);
  Var mean(Var a);
  Var row_sum(Var a);
  /// Sum of w ∘ a for a constant weight matrix w of the same shape.
  Var dot(Var a, const Matrix& w);
  /// Broadcast multiply: a (B x n) scaled row-wise by c (B x 1).
  Var mul_col(Var a, Var c);

  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  Var broadcast_rows(Var a, Eigen::Index rows);
  /// Sums rows of a into `segments` output rows according to `segment`.
  Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments);

  /// Squared Euclidean distances between rows: out(i, j) = |x_i - y_j|^2.
  Var pairwise_sqdist(Var x, Var y);
  /// Row-wise log(sum(exp(.))) computed with the max-shift.
  Var row_logsumexp(Var a);

  /// Runs the backward sweep from a 1x1 node and returns d loss / d params
  /// for `binding`, flattened like NetworkParams::values().
  std::vector<double> gradient(Var loss, Binding binding);
  /// Backward sweep only; gradients are then read with grad() or
  /// param_gradient().
  void backward(Var loss);
  std::vector<double> param_gradient(Binding binding) const;
  /// Gradient of the last backward() root with respect to any node.
  Matrix grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }

 private:
  using Backward = std::function<void(Tape&, const Matrix&)>;

  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    int binding = -1;
    std::size_t offset = 0;
  };

  Var push(Matrix value, Backward backward = {});
  void accumulate(std::size_t id, const Matrix& g);

  std::vector<Node> nodes_;
  std::vector<const NetworkParams*> bound_;
  std::size_t root_ = static_cast<std::size_t>(-1);
};

inline Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
inline Var operator*(double c, Var a) { return a.tape()->scale(a, c); }
inline Var operator*(Var a, double c) { return a.tape()->scale(a, c); }
inline Var operator+(Var a, double c) { return a.tape()->shift(a, c); }
inline Var operator-(Var a, double c) { return a.tape()->shift(a, -c); }
inline Var operator-(Var a) { return a.tape()->neg(a); }

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update. Throws NumericError naming the first
/// non-finite gradient entry; params and state are untouched in that case.
void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& state,
               double learning_rate, const AdamConfig& config = {});

/// Plain gradient clipping by global norm; returns the pre-clip norm.
double clip_gradient_norm(std::span<double> grads, double max_norm);

// Checkpoint layout (little-endian):
//   magic "ACTMAPNP", u32 version, u32 layer count,
//   per layer: u64 rows, u64 cols, u32 activation,
//   u64 value count, then raw IEEE-754 doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const NetworkParams& params);
NetworkParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace actmap

#endif  // ACTMAP_AUTODIFF_HPP_
