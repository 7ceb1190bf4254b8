// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace izt {

Mlp init_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("init_mlp: need at least in/out widths");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpLayer layer;
    const double stddev = std::sqrt(2.0 / static_cast<double>(widths[l]));
    layer.w = rng.normal_tensor({widths[l + 1], widths[l]}, stddev);
    layer.b = Tensor({widths[l + 1]});
    layer.relu = l + 2 < widths.size();
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Tensor mlp_forward(const Mlp& mlp, const Tensor& x, MlpCache* cache) {
  if (x.rank() != 2 || x.rows() != mlp.in_width())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Tensor h = x;
  for (const MlpLayer& layer : mlp.layers) {
    if (cache != nullptr) cache->inputs.push_back(h);
    Tensor z = matmul(layer.w, h);
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t c = 0; c < z.cols(); ++c) z.at(r, c) += layer.b[r];
    if (cache != nullptr) cache->pre.push_back(z);
    if (layer.relu)
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::max(z[i], 0.0);
    h = std::move(z);
  }
  return h;
}

void MlpGrads::accumulate(const MlpGrads& other) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    dw[l] += other.dw[l];
    db[l] += other.db[l];
  }
}

MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Tensor& dout) {
  if (cache.inputs.size() != mlp.layers.size())
    throw std::runtime_error("mlp_backward: stale cache");
  MlpGrads grads;
  grads.dw.resize(mlp.layers.size());
  grads.db.resize(mlp.layers.size());
  Tensor dh = dout;
  for (std::size_t li = mlp.layers.size(); li-- > 0;) {
    const MlpLayer& layer = mlp.layers[li];
    Tensor dz = std::move(dh);
    if (layer.relu) {
      const Tensor& z = cache.pre[li];
      for (std::size_t i = 0; i < dz.size(); ++i)
        if (z[i] <= 0.0) dz[i] = 0.0;
    }
    grads.dw[li] = matmul(dz, transpose(cache.inputs[li]));
    grads.db[li] = Tensor({layer.b.size()});
    for (std::size_t r = 0; r < dz.rows(); ++r)
      for (std::size_t c = 0; c < dz.cols(); ++c) grads.db[li][r] += dz.at(r, c);
    dh = matmul(transpose(layer.w), dz);
  }
  grads.dx = std::move(dh);
  return grads;
}

MlpGrads zero_mlp_grads(const Mlp& mlp, std::size_t in_rows, std::size_t in_cols) {
  MlpGrads grads;
  grads.dx = Tensor({in_rows, in_cols});
  for (const MlpLayer& layer : mlp.layers) {
    grads.dw.emplace_back(layer.w.shape());
    grads.db.emplace_back(layer.b.shape());
  }
  return grads;
}

std::vector<Tensor> MlpOp::forward(const std::vector<Tensor>& inputs) {
  if (inputs.size() != 1 + 2 * relu_flags_.size())
    throw std::invalid_argument("MlpOp: expects {x, w0, b0, ...}");
  mlp_.layers.clear();
  for (std::size_t l = 0; l < relu_flags_.size(); ++l)
    mlp_.layers.push_back({inputs[1 + 2 * l], inputs[2 + 2 * l], relu_flags_[l]});
  return {mlp_forward(mlp_, inputs[0], &cache_)};
}

std::vector<Tensor> MlpOp::backward(const std::vector<Tensor>& upstream) {
  MlpGrads g = mlp_backward(mlp_, cache_, upstream.at(0));
  std::vector<Tensor> out;
  out.push_back(std::move(g.dx));
  for (std::size_t l = 0; l < g.dw.size(); ++l) {
    out.push_back(std::move(g.dw[l]));
    out.push_back(std::move(g.db[l]));
  }
  return out;
}

}  // namespace izt
