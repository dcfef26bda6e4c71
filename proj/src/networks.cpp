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

#include "actmap/networks.hpp"

#include <string>

#include "actmap/error.hpp"

namespace actmap {

ObsBatch ObsBatch::gather(std::span<const Observation* const> observations) {
  if (observations.empty()) throw UsageError("empty observation batch");
  ObsBatch b;
  const auto n = static_cast<Eigen::Index>(observations.size());
  const Eigen::Index ego_dim = observations.front()->ego.size();
  const std::size_t sets = observations.front()->sets.size();
  b.ego.resize(n, ego_dim);
  b.set_rows.resize(sets);
  b.set_owner.resize(sets);
  for (std::size_t k = 0; k < sets; ++k) {
    Eigen::Index rows = 0, cols = 0;
    for (const Observation* o : observations) {
      if (o->sets.size() != sets) throw ConfigError("observations disagree on set count");
      rows += o->sets[k].rows();
      cols = std::max(cols, o->sets[k].cols());
    }
    b.set_rows[k].resize(rows, cols);
    b.set_owner[k].reserve(static_cast<std::size_t>(rows));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Observation& o = *observations[static_cast<std::size_t>(i)];
    if (o.ego.size() != ego_dim) throw ConfigError("observations disagree on ego size");
    b.ego.row(i) = o.ego.transpose();
    for (std::size_t k = 0; k < sets; ++k) {
      const Matrix& m = o.sets[k];
      if (m.rows() == 0) continue;
      const auto at = static_cast<Eigen::Index>(b.set_owner[k].size());
      b.set_rows[k].middleRows(at, m.rows()) = m;
      b.set_owner[k].insert(b.set_owner[k].end(), static_cast<std::size_t>(m.rows()),
                            static_cast<std::size_t>(i));
    }
  }
  return b;
}

ObsBatch ObsBatch::single(const Observation& observation) {
  const Observation* p = &observation;
  return gather(std::span<const Observation* const>(&p, 1));
}

SetNet::SetNet(NetworkSpec spec) : spec_(std::move(spec)) {
  if (spec_.output_dim == 0) throw ConfigError("network output size must be positive");
  if (spec_.trunk_hidden.empty()) throw ConfigError("network trunk needs a hidden layer");
  for (std::size_t w : spec_.set_hidden) {
    if (w == 0) throw ConfigError("set encoder widths must be positive");
  }
  for (std::size_t w : spec_.trunk_hidden) {
    if (w == 0) throw ConfigError("trunk widths must be positive");
  }
  if (!spec_.obs.set_dims.empty() && spec_.set_hidden.empty()) {
    throw ConfigError("set encoder needs at least one layer");
  }
  if (spec_.extra_skip != 0.0 && spec_.output_dim != spec_.extra_dim) {
    throw ConfigError("a latent skip needs equal extra and output sizes");
  }
  trunk_first_ = spec_.obs.set_dims.size() * spec_.set_hidden.size();
}

std::vector<LayerShape> SetNet::shapes() const {
  std::vector<LayerShape> out;
  std::size_t trunk_in = spec_.obs.ego_dim + spec_.extra_dim;
  for (std::size_t dim : spec_.obs.set_dims) {
    std::size_t in = dim;
    for (std::size_t w : spec_.set_hidden) {
      out.push_back({w, in, spec_.hidden});
      in = w;
    }
    trunk_in += in;
  }
  std::size_t in = trunk_in;
  for (std::size_t w : spec_.trunk_hidden) {
    out.push_back({w, in, spec_.hidden});
    in = w;
  }
  // With a skip the output activation is applied after the sum.
  out.push_back({spec_.output_dim, in, spec_.extra_skip != 0.0 ? Activation::identity : spec_.output});
  return out;
}

NetworkParams SetNet::init(Rng& rng) const {
  NetworkParams p = NetworkParams::glorot(shapes(), rng);
  if (spec_.output_init_scale != 1.0) {
    const std::size_t last = p.num_layers() - 1;
    const LayerShape& s = p.layer(last);
    auto v = p.values();
    const std::size_t off = p.weight_offset(last);
    for (std::size_t k = 0; k < s.rows * s.cols; ++k) v[off + k] *= spec_.output_init_scale;
  }
  return p;
}

void SetNet::check(const NetworkParams& params, const ObsBatch& obs) const {
  if (params.shapes() != shapes()) throw ConfigError("parameters do not match the network layout");
  if (static_cast<std::size_t>(obs.ego.cols()) != spec_.obs.ego_dim) {
    throw ConfigError("observation ego size " + std::to_string(obs.ego.cols()) + ", network expects " +
                      std::to_string(spec_.obs.ego_dim));
  }
  if (obs.set_rows.size() != spec_.obs.set_dims.size()) {
    throw ConfigError("observation set count does not match the network");
  }
}

Matrix SetNet::embed(const NetworkParams& params, const ObsBatch& obs) const {
  check(params, obs);
  const std::size_t depth = spec_.set_hidden.size();
  Eigen::Index cols = obs.ego.cols();
  std::vector<Matrix> pooled;
  for (std::size_t k = 0; k < obs.set_rows.size(); ++k) {
    Matrix p = Matrix::Zero(obs.ego.rows(), static_cast<Eigen::Index>(spec_.set_hidden.back()));
    if (obs.set_rows[k].rows() > 0) {
      const Matrix enc = forward_batch(params, obs.set_rows[k], k * depth, depth);
      for (std::size_t r = 0; r < obs.set_owner[k].size(); ++r) {
        p.row(static_cast<Eigen::Index>(obs.set_owner[k][r])) += enc.row(static_cast<Eigen::Index>(r));
      }
    }
    cols += p.cols();
    pooled.push_back(std::move(p));
  }
  Matrix out(obs.ego.rows(), cols);
  out.leftCols(obs.ego.cols()) = obs.ego;
  Eigen::Index at = obs.ego.cols();
  for (const Matrix& p : pooled) {
    out.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return out;
}

Matrix SetNet::forward(const NetworkParams& params, const ObsBatch& obs, const Matrix& extra) const {
  if (static_cast<std::size_t>(extra.cols()) != spec_.extra_dim) {
    throw ConfigError("extra input has " + std::to_string(extra.cols()) + " columns, network expects " +
                      std::to_string(spec_.extra_dim));
  }
  Matrix e = embed(params, obs);
  if (e.rows() == 1 && extra.rows() != 1) {
    e = e.replicate(extra.rows(), 1).eval();
  } else if (e.rows() != extra.rows()) {
    throw ConfigError("extra input rows do not match the observation batch");
  }
  Matrix in(e.rows(), e.cols() + extra.cols());
  in << e, extra;
  if (spec_.extra_skip == 0.0) return forward_batch(params, in, trunk_first_);
  return activate(forward_batch(params, in, trunk_first_) + spec_.extra_skip * extra, spec_.output);
}

Matrix SetNet::forward(const NetworkParams& params, const ObsBatch& obs) const {
  if (spec_.extra_dim != 0) throw ConfigError("network expects an extra input");
  return forward_batch(params, embed(params, obs), trunk_first_);
}

Var SetNet::embed(Tape& tape, Tape::Binding binding, const ObsBatch& obs) const {
  check(tape.bound(binding), obs);
  const std::size_t depth = spec_.set_hidden.size();
  std::vector<Var> parts{tape.constant(obs.ego)};
  for (std::size_t k = 0; k < obs.set_rows.size(); ++k) {
    if (obs.set_rows[k].rows() == 0) {
      parts.push_back(tape.constant(
          Matrix::Zero(obs.ego.rows(), static_cast<Eigen::Index>(spec_.set_hidden.back()))));
      continue;
    }
    const Var enc = tape.mlp(binding, k * depth, depth, tape.constant(obs.set_rows[k]));
    parts.push_back(tape.segment_sum(enc, obs.set_owner[k], obs.size()));
  }
  return parts.size() == 1 ? parts.front() : tape.concat_cols(parts);
}

Var SetNet::forward(Tape& tape, Tape::Binding binding, const ObsBatch& obs, Var extra) const {
  if (static_cast<std::size_t>(extra.cols()) != spec_.extra_dim) {
    throw ConfigError("extra input has " + std::to_string(extra.cols()) + " columns, network expects " +
                      std::to_string(spec_.extra_dim));
  }
  Var e = embed(tape, binding, obs);
  if (e.rows() == 1 && extra.rows() != 1) {
    e = tape.broadcast_rows(e, extra.rows());
  } else if (e.rows() != extra.rows()) {
    throw ConfigError("extra input rows do not match the observation batch");
  }
  const Var parts[] = {e, extra};
  const std::size_t layers = tape.bound(binding).num_layers() - trunk_first_;
  const Var y = tape.mlp(binding, trunk_first_, layers, tape.concat_cols(parts));
  if (spec_.extra_skip == 0.0) return y;
  return tape.activation(y + spec_.extra_skip * extra, spec_.output);
}

Var SetNet::forward(Tape& tape, Tape::Binding binding, const ObsBatch& obs) const {
  if (spec_.extra_dim != 0) throw ConfigError("network expects an extra input");
  const std::size_t layers = tape.bound(binding).num_layers() - trunk_first_;
  return tape.mlp(binding, trunk_first_, layers, embed(tape, binding, obs));
}

}  // namespace actmap
