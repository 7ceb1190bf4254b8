// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_MLP_HPP_
#define IZT_MLP_HPP_

#include <vector>

#include "izt/autodiff.hpp"
#include "izt/tensor.hpp"

namespace izt {

// Frame-wise affine stack: input is width x T, every column (frame) is
// transformed independently. ReLU on layers flagged as hidden.
struct MlpLayer {
  Tensor w;  // out x in
  Tensor b;  // out
  bool relu = false;
};

struct Mlp {
  std::vector<MlpLayer> layers;

  std::size_t in_width() const { return layers.front().w.cols(); }
  std::size_t out_width() const { return layers.back().w.rows(); }
};

// widths = {in, hidden..., out}; ReLU on all but the last layer.
Mlp init_mlp(const std::vector<std::size_t>& widths, Rng& rng);

struct MlpCache {
  std::vector<Tensor> inputs;  // input to each layer
  std::vector<Tensor> pre;     // pre-activation of each layer
};

Tensor mlp_forward(const Mlp& mlp, const Tensor& x, MlpCache* cache = nullptr);

struct MlpGrads {
  Tensor dx;
  std::vector<Tensor> dw;
  std::vector<Tensor> db;

  void accumulate(const MlpGrads& other);
};

MlpGrads mlp_backward(const Mlp& mlp, const MlpCache& cache, const Tensor& dout);

MlpGrads zero_mlp_grads(const Mlp& mlp, std::size_t in_rows, std::size_t in_cols);

// Grad-check adapter: inputs {x, w0, b0, w1, b1, ...} -> {y}.
class MlpOp : public DifferentiableOp {
 public:
  explicit MlpOp(std::vector<bool> relu_flags) : relu_flags_(std::move(relu_flags)) {}
  std::string name() const override { return "mlp.forward"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;

 private:
  std::vector<bool> relu_flags_;
  Mlp mlp_;
  MlpCache cache_;
};

}  // namespace izt

#endif  // IZT_MLP_HPP_
