// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>

#include <doctest.h>

#include "izt/autodiff.hpp"
#include "izt/tensor.hpp"

using namespace izt;

namespace {

// y = W x; gradient of <u, Wx> is u x^T w.r.t. W and W^T u w.r.t. x.
class LinearOp : public DifferentiableOp {
 public:
  std::string name() const override { return "test.linear"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override {
    w_ = inputs.at(0);
    x_ = inputs.at(1);
    return {matmul(w_, x_)};
  }
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override {
    const Tensor& u = upstream.at(0);
    return {matmul(u, transpose(x_)), matmul(transpose(w_), u)};
  }

 private:
  Tensor w_, x_;
};

class ConstantOp : public DifferentiableOp {
 public:
  std::string name() const override { return "test.constant"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override {
    shape_ = inputs.at(0).shape();
    return {Tensor::full({3}, 2.5)};
  }
  std::vector<Tensor> backward(const std::vector<Tensor>&) override {
    return {Tensor(shape_)};
  }

 private:
  std::vector<std::size_t> shape_;
};

}  // namespace

TEST_CASE("matmul associativity on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = rng.normal_tensor({4, 5});
    const Tensor b = rng.normal_tensor({5, 3});
    const Tensor c = rng.normal_tensor({3, 6});
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i)
      CHECK(std::abs(left[i] - right[i]) < 1e-10);
  }
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(12);
  const Tensor s = softmax_rows(rng.normal_tensor({7, 9}, 3.0));
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < s.cols(); ++c) {
      sum += s.at(r, c);
      CHECK(s.at(r, c) >= 0.0);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
  Tensor a({2, 2});
  Tensor b({4});
  CHECK_THROWS_AS(a += b, std::invalid_argument);
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), std::invalid_argument);
}

TEST_CASE("rng determinism and fork independence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng base(7);
  CHECK(base.fork(1).next_u64() != base.fork(2).next_u64());
}

TEST_CASE("grad_check accepts an analytic linear map") {
  Rng rng(5);
  LinearOp op;
  const std::vector<Tensor> inputs = {rng.normal_tensor({4, 6}), rng.normal_tensor({6, 3})};
  const GradCheckReport report = grad_check(op, inputs, 1e-5, 1e-6);
  CHECK(report.passed);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("grad_check on a constant op sees exactly zero gradients") {
  ConstantOp op;
  const GradCheckReport report = grad_check(op, {Tensor({4})}, 1e-5, 0.0);
  CHECK(report.passed);
  CHECK(report.max_rel_err == 0.0);
}

TEST_CASE("grad_check rejects epsilon <= 0") {
  LinearOp op;
  Rng rng(1);
  CHECK_THROWS_AS(grad_check(op, {rng.normal_tensor({2, 2}), rng.normal_tensor({2, 1})}, 0.0, 1e-6),
                  std::invalid_argument);
}

TEST_CASE("adam: zero gradient leaves params unchanged and advances the step") {
  AdamState adam;
  Tensor p = Tensor::full({3}, 1.5);
  const Tensor g({3});
  const Tensor before = p;
  adam.step({&p}, {&g});
  CHECK(adam.step_count() == 1);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == before[i]);
}

TEST_CASE("adam: first step from zeroed moments is -lr * g / (|g| + eps)") {
  AdamConfig cfg;
  AdamState adam(cfg);
  Tensor p({3});
  const Tensor g({3}, {0.25, -3.0, 1e-3});
  adam.step({&p}, {&g});
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = -cfg.lr * g[i] / (std::abs(g[i]) + cfg.epsilon);
    CHECK(std::abs(p[i] - expected) < 1e-15);
  }
}

TEST_CASE("adam: constant gradient drives updates toward -lr * sign(g)") {
  AdamConfig cfg;
  AdamState adam(cfg);
  Tensor p({2});
  const Tensor g({2}, {0.7, -2.3});
  Tensor prev = p;
  for (int i = 0; i < 1000; ++i) {
    prev = p;
    adam.step({&p}, {&g});
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double update = p[i] - prev[i];
    const double target = -cfg.lr * (g[i] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(update - target) < 1e-3 * cfg.lr);
  }
}

TEST_CASE("adam: shape mismatch and non-finite gradients are rejected") {
  AdamState adam;
  Tensor p({2});
  const Tensor bad_shape({3});
  CHECK_THROWS_AS(adam.step({&p}, {&bad_shape}), std::invalid_argument);
  AdamState adam2;
  const Tensor nan_grad({2}, {1.0, std::nan("")});
  CHECK_THROWS_AS(adam2.step({&p}, {&nan_grad}), std::runtime_error);
}
