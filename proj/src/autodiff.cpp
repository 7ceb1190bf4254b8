// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace izt {

GradCheckReport grad_check(DifferentiableOp& op, const std::vector<Tensor>& inputs,
                           double epsilon, double tol, std::uint64_t seed) {
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be > 0");

  std::vector<Tensor> outputs = op.forward(inputs);
  for (const Tensor& y : outputs)
    if (!y.all_finite()) throw std::runtime_error("grad_check: non-finite forward output");

  Rng rng(seed);
  std::vector<Tensor> upstream;
  upstream.reserve(outputs.size());
  for (const Tensor& y : outputs) upstream.push_back(rng.normal_tensor(y.shape()));

  const std::vector<Tensor> analytic = op.backward(upstream);
  if (analytic.size() != inputs.size())
    throw std::runtime_error("grad_check: backward arity mismatch");

  auto scalar_objective = [&](const std::vector<Tensor>& x) {
    std::vector<Tensor> ys = op.forward(x);
    double s = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) s += dot(upstream[k], ys[k]);
    return s;
  };

  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < inputs[i].size(); ++e) {
      const double saved = probe[i][e];
      probe[i][e] = saved + epsilon;
      const double fp = scalar_objective(probe);
      probe[i][e] = saved - epsilon;
      const double fm = scalar_objective(probe);
      probe[i][e] = saved;

      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double a = analytic[i][e];
      // Relative error with a floor: entries below ~1e-6 sit at the noise
      // level of central differences (|f| * machine_eps / epsilon) and
      // cannot be resolved to 1e-4 relative accuracy.
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double err = std::abs(a - numeric) / scale;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_input = i;
        report.worst_element = e;
      }
    }
  }
  // Restore the op's cache to the unperturbed point.
  op.forward(inputs);
  op.backward(upstream);
  report.passed = report.max_rel_err <= tol;
  return report;
}

void AdamState::step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("AdamState::step: params/grads arity mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("AdamState::step: parameter count changed");

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i]))
      throw std::invalid_argument("AdamState::step: shape mismatch");
    if (!g.all_finite()) throw std::runtime_error("AdamState::step: non-finite gradient");
    for (std::size_t e = 0; e < p.size(); ++e) {
      m_[i][e] = cfg_.beta1 * m_[i][e] + (1.0 - cfg_.beta1) * g[e];
      v_[i][e] = cfg_.beta2 * v_[i][e] + (1.0 - cfg_.beta2) * g[e] * g[e];
      const double mhat = m_[i][e] / bc1;
      const double vhat = v_[i][e] / bc2;
      p[e] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace izt
