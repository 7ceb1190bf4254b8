// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace izt {

void PoolConfig::validate() const {
  if (dim == 0 || heads == 0 || dim % heads != 0)
    throw std::invalid_argument("PoolConfig: dim must be a positive multiple of heads");
}

PoolParams init_pool_params(const PoolConfig& cfg, Rng& rng) {
  cfg.validate();
  const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  PoolParams p;
  p.cfg = cfg;
  p.wq = rng.normal_tensor({cfg.dim, cfg.dim}, stddev);
  p.wk = rng.normal_tensor({cfg.dim, cfg.dim}, stddev);
  p.wv = rng.normal_tensor({cfg.dim, cfg.dim}, stddev);
  return p;
}

Tensor pool(const Tensor& s, const AperiodicityMask& mask, const PoolParams& params,
            PoolCache* cache) {
  const PoolConfig& cfg = params.cfg;
  cfg.validate();
  if (s.rank() != 2 || s.rows() != cfg.dim)
    throw std::invalid_argument("pool: s must be d x T with d = config dim");
  const std::size_t d = cfg.dim, T = s.cols(), h = cfg.heads, dh = cfg.head_dim();
  if (mask.bits.size() != T) throw std::invalid_argument("pool: mask length != T");
  if (mask.voiced_count() == 0) throw std::invalid_argument("no voiced frames in reference");

  const Tensor q = matmul(params.wq, s);
  const Tensor k = matmul(params.wk, s);
  const Tensor v = matmul(params.wv, s);

  const double scale =
      1.0 / std::sqrt(static_cast<double>(cfg.scale_by_full_dim ? d : dh));

  Tensor pooled_seq({d, T});
  std::vector<Tensor> attn;
  attn.reserve(h);
  for (std::size_t head = 0; head < h; ++head) {
    const std::size_t row0 = head * dh;
    Tensor a({T, T});
    for (std::size_t t = 0; t < T; ++t) {
      // Row softmax over unmasked keys only; masked keys get exactly 0.
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < T; ++u) {
        if (!mask.bits[u]) continue;
        double score = 0.0;
        for (std::size_t j = 0; j < dh; ++j)
          score += q.at(row0 + j, t) * k.at(row0 + j, u);
        score *= scale;
        a.at(t, u) = score;
        mx = std::max(mx, score);
      }
      double sum = 0.0;
      for (std::size_t u = 0; u < T; ++u) {
        if (!mask.bits[u]) {
          a.at(t, u) = 0.0;
          continue;
        }
        a.at(t, u) = std::exp(a.at(t, u) - mx);
        sum += a.at(t, u);
      }
      for (std::size_t u = 0; u < T; ++u)
        if (mask.bits[u]) a.at(t, u) /= sum;
    }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < dh; ++j) {
        double acc = 0.0;
        for (std::size_t u = 0; u < T; ++u) acc += a.at(t, u) * v.at(row0 + j, u);
        pooled_seq.at(row0 + j, t) = acc;
      }
    attn.push_back(std::move(a));
  }

  const std::size_t voiced = mask.voiced_count();
  const double denom =
      static_cast<double>(cfg.average_voiced_rows_only ? voiced : T);
  Tensor out({d});
  for (std::size_t t = 0; t < T; ++t) {
    if (cfg.average_voiced_rows_only && !mask.bits[t]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += pooled_seq.at(j, t) / denom;
  }

  if (cache != nullptr) {
    cache->valid = true;
    cache->s = s;
    cache->mask = mask.bits;
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->attn = std::move(attn);
    cache->pooled_seq = std::move(pooled_seq);
  }
  return out;
}

PoolGrads pool_backward(const Tensor& upstream, const PoolCache& cache,
                        const PoolParams& params) {
  if (!cache.valid) throw std::runtime_error("pool_backward: stale cache");
  const PoolConfig& cfg = params.cfg;
  const std::size_t d = cfg.dim, T = cache.s.cols(), h = cfg.heads, dh = cfg.head_dim();
  if (upstream.size() != d) throw std::invalid_argument("pool_backward: upstream dim mismatch");

  std::size_t voiced = 0;
  for (auto b : cache.mask) voiced += b;
  const double denom = static_cast<double>(cfg.average_voiced_rows_only ? voiced : T);
  const double scale =
      1.0 / std::sqrt(static_cast<double>(cfg.scale_by_full_dim ? d : dh));

  // d(pooled_seq)
  Tensor dseq({d, T});
  for (std::size_t t = 0; t < T; ++t) {
    if (cfg.average_voiced_rows_only && !cache.mask[t]) continue;
    for (std::size_t j = 0; j < d; ++j) dseq.at(j, t) = upstream[j] / denom;
  }

  Tensor dq({d, T}), dk({d, T}), dv({d, T});
  for (std::size_t head = 0; head < h; ++head) {
    const std::size_t row0 = head * dh;
    const Tensor& a = cache.attn[head];

    // dA[t,u] = sum_j dseq[row0+j,t] * V[row0+j,u]; dV = dseq A (head rows)
    Tensor da({T, T});
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t u = 0; u < T; ++u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dh; ++j)
          acc += dseq.at(row0 + j, t) * cache.v.at(row0 + j, u);
        da.at(t, u) = acc;
      }
    for (std::size_t j = 0; j < dh; ++j)
      for (std::size_t u = 0; u < T; ++u) {
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) acc += dseq.at(row0 + j, t) * a.at(t, u);
        dv.at(row0 + j, u) = acc;
      }

    // Softmax backward per row; masked columns stay zero.
    Tensor ds_scores({T, T});
    for (std::size_t t = 0; t < T; ++t) {
      double inner = 0.0;
      for (std::size_t u = 0; u < T; ++u) inner += a.at(t, u) * da.at(t, u);
      for (std::size_t u = 0; u < T; ++u)
        ds_scores.at(t, u) = a.at(t, u) * (da.at(t, u) - inner);
    }

    // dQ = K dS^T * scale ; dK = Q dS * scale (head rows)
    for (std::size_t j = 0; j < dh; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t u = 0; u < T; ++u)
          acc += cache.k.at(row0 + j, u) * ds_scores.at(t, u);
        dq.at(row0 + j, t) = acc * scale;
      }
      for (std::size_t u = 0; u < T; ++u) {
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t)
          acc += cache.q.at(row0 + j, t) * ds_scores.at(t, u);
        dk.at(row0 + j, u) = acc * scale;
      }
    }
  }

  const Tensor st = transpose(cache.s);
  PoolGrads grads;
  grads.dwq = matmul(dq, st);
  grads.dwk = matmul(dk, st);
  grads.dwv = matmul(dv, st);
  grads.ds = matmul(transpose(params.wq), dq);
  grads.ds += matmul(transpose(params.wk), dk);
  grads.ds += matmul(transpose(params.wv), dv);
  return grads;
}

std::vector<Tensor> PoolOp::forward(const std::vector<Tensor>& inputs) {
  if (inputs.size() != 4) throw std::invalid_argument("PoolOp: expects {s, wq, wk, wv}");
  last_params_.cfg = cfg_;
  last_params_.wq = inputs[1];
  last_params_.wk = inputs[2];
  last_params_.wv = inputs[3];
  return {pool(inputs[0], mask_, last_params_, &cache_)};
}

std::vector<Tensor> PoolOp::backward(const std::vector<Tensor>& upstream) {
  if (upstream.size() != 1) throw std::invalid_argument("PoolOp: one upstream tensor");
  PoolGrads g = pool_backward(upstream[0], cache_, last_params_);
  return {std::move(g.ds), std::move(g.dwq), std::move(g.dwk), std::move(g.dwv)};
}

}  // namespace izt
