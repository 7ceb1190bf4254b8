// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_ATTENTION_HPP_
#define IZT_ATTENTION_HPP_

#include <vector>

#include "izt/autodiff.hpp"
#include "izt/dsp.hpp"
#include "izt/tensor.hpp"

namespace izt {

struct PoolConfig {
  std::size_t dim = 64;    // d; must be divisible by heads
  std::size_t heads = 4;   // h
  // Score scaling: sqrt(d/h) per head by default; true selects sqrt(d).
  bool scale_by_full_dim = false;
  // Averaging: over all T query rows by default; true averages only rows
  // whose query frame is voiced.
  bool average_voiced_rows_only = false;

  std::size_t head_dim() const { return dim / heads; }
  void validate() const;
};

// Query/key/value projections, d x d each, split row-wise into heads.
struct PoolParams {
  PoolConfig cfg;
  Tensor wq, wk, wv;
};

PoolParams init_pool_params(const PoolConfig& cfg, Rng& rng);

// Forward state needed by pool_backward; also exposes the attention weights
// and the pre-average sequence for inspection.
struct PoolCache {
  bool valid = false;
  Tensor s;                        // d x T input
  std::vector<std::uint8_t> mask;  // key mask, length T
  Tensor q, k, v;                  // d x T projections
  std::vector<Tensor> attn;        // per head, T x T row-stochastic
  Tensor pooled_seq;               // d x T, heads concatenated (s-hat)
};

// Masked multi-head self-attention over the frame sequence followed by a
// temporal average. Keys at mask=0 frames carry exactly zero attention
// weight. Throws if every frame is masked.
Tensor pool(const Tensor& s, const AperiodicityMask& mask, const PoolParams& params,
            PoolCache* cache = nullptr);

struct PoolGrads {
  Tensor ds, dwq, dwk, dwv;
};

PoolGrads pool_backward(const Tensor& upstream, const PoolCache& cache,
                        const PoolParams& params);

// Grad-check adapter: inputs {s, wq, wk, wv} -> output {v}.
class PoolOp : public DifferentiableOp {
 public:
  PoolOp(PoolConfig cfg, AperiodicityMask mask) : cfg_(cfg), mask_(std::move(mask)) {}
  std::string name() const override { return "attention.pool"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;

 private:
  PoolConfig cfg_;
  AperiodicityMask mask_;
  PoolParams last_params_;
  PoolCache cache_;
};

}  // namespace izt

#endif  // IZT_ATTENTION_HPP_
