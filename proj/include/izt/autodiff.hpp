// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_AUTODIFF_HPP_
#define IZT_AUTODIFF_HPP_

#include <string>
#include <vector>

#include "izt/tensor.hpp"

namespace izt {

// One differentiable building block. forward() must be a pure function of
// its inputs; backward() consumes the upstream gradients of the most recent
// forward() outputs and returns one gradient tensor per input, in order.
class DifferentiableOp {
 public:
  virtual ~DifferentiableOp() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Tensor> forward(const std::vector<Tensor>& inputs) = 0;
  virtual std::vector<Tensor> backward(const std::vector<Tensor>& upstream) = 0;
};

struct GradCheckReport {
  bool passed = false;
  double max_rel_err = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
};

// Central finite differences against the analytic backward. A fixed random
// upstream vector u is drawn (seeded); the analytic gradient of <u, f(x)> is
// compared elementwise to (f(x+eps) - f(x-eps)) / (2 eps) contracted with u.
GradCheckReport grad_check(DifferentiableOp& op, const std::vector<Tensor>& inputs,
                           double epsilon, double tol, std::uint64_t seed = 1234);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction, one moment pair per parameter tensor.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::size_t step_count() const { return step_; }

  // Applies one update in place. params and grads must pair up by index and
  // keep stable shapes across calls.
  void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads);

 private:
  AdamConfig cfg_;
  std::size_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace izt

#endif  // IZT_AUTODIFF_HPP_
