// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>

#include <doctest.h>

#include "izt/attention.hpp"

using namespace izt;

namespace {

AperiodicityMask mask_of(std::vector<std::uint8_t> bits) {
  AperiodicityMask m;
  m.bits = std::move(bits);
  return m;
}

// Independent scalar-loop reference for the masked pooling equations,
// written against the formulas directly (no shared code with pool()).
Tensor naive_pool(const Tensor& s, const AperiodicityMask& mask, const PoolParams& params) {
  const std::size_t d = params.cfg.dim, T = s.cols(), h = params.cfg.heads;
  const std::size_t dh = d / h;
  const double scale =
      1.0 / std::sqrt(static_cast<double>(params.cfg.scale_by_full_dim ? d : dh));

  // Projections.
  auto project = [&](const Tensor& w) {
    Tensor out({d, T});
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += w.at(i, j) * s.at(j, t);
        out.at(i, t) = acc;
      }
    return out;
  };
  const Tensor q = project(params.wq), k = project(params.wk), v = project(params.wv);

  Tensor shat({d, T});
  for (std::size_t head = 0; head < h; ++head) {
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> weights(T, 0.0);
      double mx = -1e300;
      for (std::size_t u = 0; u < T; ++u) {
        if (mask.bits[u] == 0) continue;
        double score = 0.0;
        for (std::size_t j = 0; j < dh; ++j)
          score += q.at(head * dh + j, t) * k.at(head * dh + j, u);
        weights[u] = score * scale;
        if (weights[u] > mx) mx = weights[u];
      }
      double z = 0.0;
      for (std::size_t u = 0; u < T; ++u) {
        if (mask.bits[u] == 0) continue;
        weights[u] = std::exp(weights[u] - mx);
        z += weights[u];
      }
      for (std::size_t u = 0; u < T; ++u)
        if (mask.bits[u]) weights[u] /= z;
        else weights[u] = 0.0;
      for (std::size_t j = 0; j < dh; ++j) {
        double acc = 0.0;
        for (std::size_t u = 0; u < T; ++u) acc += weights[u] * v.at(head * dh + j, u);
        shat.at(head * dh + j, t) = acc;
      }
    }
  }

  std::size_t voiced = 0;
  for (auto b : mask.bits) voiced += b;
  const double denom =
      static_cast<double>(params.cfg.average_voiced_rows_only ? voiced : T);
  Tensor out({d});
  for (std::size_t t = 0; t < T; ++t) {
    if (params.cfg.average_voiced_rows_only && mask.bits[t] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += shat.at(j, t) / denom;
  }
  return out;
}

}  // namespace

TEST_CASE("single unmasked key forces one-hot attention") {
  PoolConfig cfg;
  cfg.dim = 6;
  cfg.heads = 2;
  Rng rng(1);
  const PoolParams params = init_pool_params(cfg, rng);
  const Tensor s = rng.normal_tensor({6, 3});
  PoolCache cache;
  const Tensor out = pool(s, mask_of({0, 1, 0}), params, &cache);

  for (const Tensor& a : cache.attn)
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(a.at(t, 0) == 0.0);
      CHECK(a.at(t, 1) == 1.0);
      CHECK(a.at(t, 2) == 0.0);
    }
  // Every s-hat row equals V column 1, so the average does too.
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(out[j] - cache.v.at(j, 1)) < 1e-12);
}

TEST_CASE("constant frames with an all-ones mask give uniform attention") {
  PoolConfig cfg;
  cfg.dim = 8;
  cfg.heads = 4;
  Rng rng(2);
  const PoolParams params = init_pool_params(cfg, rng);
  Tensor s({8, 5});
  for (std::size_t j = 0; j < 8; ++j)
    for (std::size_t t = 0; t < 5; ++t) s.at(j, t) = 0.3 * (j + 1);
  PoolCache cache;
  const Tensor out = pool(s, mask_of({1, 1, 1, 1, 1}), params, &cache);
  for (const Tensor& a : cache.attn)
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - 0.2) < 1e-12);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out[j] - cache.v.at(j, 0)) < 1e-12);
}

TEST_CASE("vectorized pool matches the scalar-loop oracle") {
  for (bool voiced_only : {false, true}) {
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(1000 + trial + (voiced_only ? 500 : 0));
      PoolConfig cfg;
      cfg.dim = 8;
      cfg.heads = 2;
      cfg.average_voiced_rows_only = voiced_only;
      const PoolParams params = init_pool_params(cfg, rng);
      const std::size_t T = 3 + rng.next_u64() % 6;
      const Tensor s = rng.normal_tensor({8, T});
      AperiodicityMask mask;
      for (std::size_t t = 0; t < T; ++t)
        mask.bits.push_back(rng.uniform() < 0.6 ? 1 : 0);
      if (mask.voiced_count() == 0) mask.bits[0] = 1;

      const Tensor fast = pool(s, mask, params);
      const Tensor slow = naive_pool(s, mask, params);
      for (std::size_t j = 0; j < fast.size(); ++j)
        CHECK(std::abs(fast[j] - slow[j]) < 1e-12);
    }
  }
}

TEST_CASE("example instance d=8 h=2 T=5 mask 11010 matches the oracle") {
  Rng rng(77);
  PoolConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  const PoolParams params = init_pool_params(cfg, rng);
  const Tensor s = rng.normal_tensor({8, 5});
  const AperiodicityMask mask = mask_of({1, 1, 0, 1, 0});
  const Tensor fast = pool(s, mask, params);
  const Tensor slow = naive_pool(s, mask, params);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(fast[j] - slow[j]) < 1e-12);
}

TEST_CASE("all-masked input is a hard error") {
  PoolConfig cfg;
  cfg.dim = 4;
  cfg.heads = 2;
  Rng rng(3);
  const PoolParams params = init_pool_params(cfg, rng);
  const Tensor s = rng.normal_tensor({4, 3});
  CHECK_THROWS_WITH_AS(pool(s, mask_of({0, 0, 0}), params),
                       "no voiced frames in reference", std::invalid_argument);
}

TEST_CASE("mask nullity and convexity of attention rows") {
  Rng rng(4);
  PoolConfig cfg;
  cfg.dim = 12;
  cfg.heads = 3;
  const PoolParams params = init_pool_params(cfg, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 4 + rng.next_u64() % 5;
    const Tensor s = rng.normal_tensor({12, T}, 2.0);
    AperiodicityMask mask;
    for (std::size_t t = 0; t < T; ++t) mask.bits.push_back(rng.uniform() < 0.5 ? 1 : 0);
    if (mask.voiced_count() == 0) mask.bits[T - 1] = 1;
    PoolCache cache;
    pool(s, mask, params, &cache);
    for (const Tensor& a : cache.attn)
      for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t u = 0; u < T; ++u) {
          if (mask.bits[u] == 0) CHECK(a.at(t, u) == 0.0);
          CHECK(a.at(t, u) >= 0.0);
          sum += a.at(t, u);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
      }
  }
}

TEST_CASE("perturbing masked frames: voiced-rows variant is exactly invariant") {
  Rng rng(5);
  PoolConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.average_voiced_rows_only = true;
  const PoolParams params = init_pool_params(cfg, rng);
  const std::size_t T = 6;
  const Tensor s = rng.normal_tensor({8, T});
  const AperiodicityMask mask = mask_of({1, 0, 1, 0, 1, 1});

  const Tensor base = pool(s, mask, params);
  Tensor s2 = s;
  for (std::size_t t = 0; t < T; ++t)
    if (mask.bits[t] == 0)
      for (std::size_t j = 0; j < 8; ++j) s2.at(j, t) += rng.normal();
  const Tensor perturbed = pool(s2, mask, params);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(base[j] - perturbed[j]) < 1e-12);
}

TEST_CASE("perturbing masked frames: literal variant changes only masked query rows") {
  Rng rng(6);
  PoolConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  const PoolParams params = init_pool_params(cfg, rng);
  const std::size_t T = 6;
  const Tensor s = rng.normal_tensor({8, T});
  const AperiodicityMask mask = mask_of({1, 0, 1, 0, 1, 1});

  PoolCache base_cache, pert_cache;
  pool(s, mask, params, &base_cache);
  Tensor s2 = s;
  for (std::size_t t = 0; t < T; ++t)
    if (mask.bits[t] == 0)
      for (std::size_t j = 0; j < 8; ++j) s2.at(j, t) += rng.normal();
  pool(s2, mask, params, &pert_cache);

  for (std::size_t t = 0; t < T; ++t) {
    if (mask.bits[t] == 0) continue;  // only masked query rows may move
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(std::abs(base_cache.pooled_seq.at(j, t) - pert_cache.pooled_seq.at(j, t)) <
            1e-12);
  }
}

TEST_CASE("full permutation invariance of the mean under an all-ones mask") {
  Rng rng(7);
  PoolConfig cfg;
  cfg.dim = 6;
  cfg.heads = 2;
  const PoolParams params = init_pool_params(cfg, rng);
  const std::size_t T = 5;
  const Tensor s = rng.normal_tensor({6, T});
  const Tensor base = pool(s, mask_of({1, 1, 1, 1, 1}), params);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Tensor sp({6, T});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < 6; ++j) sp.at(j, t) = s.at(j, perm[t]);
  const Tensor permuted = pool(sp, mask_of({1, 1, 1, 1, 1}), params);
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(base[j] - permuted[j]) < 1e-10);
}

TEST_CASE("pool_backward passes the gradient checker") {
  for (bool voiced_only : {false, true}) {
    Rng rng(8 + (voiced_only ? 1 : 0));
    PoolConfig cfg;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.average_voiced_rows_only = voiced_only;
    const PoolParams params = init_pool_params(cfg, rng);
    PoolOp op(cfg, mask_of({1, 0, 1, 1, 0, 1}));
    const std::vector<Tensor> inputs = {rng.normal_tensor({8, 6}), params.wq, params.wk,
                                        params.wv};
    const GradCheckReport report = grad_check(op, inputs, 1e-4, 1e-4);
    CHECK(report.passed);
  }
}

TEST_CASE("pool_backward: zero upstream gives zero gradients") {
  Rng rng(9);
  PoolConfig cfg;
  cfg.dim = 4;
  cfg.heads = 2;
  const PoolParams params = init_pool_params(cfg, rng);
  const Tensor s = rng.normal_tensor({4, 4});
  PoolCache cache;
  pool(s, mask_of({1, 1, 0, 1}), params, &cache);
  const PoolGrads grads = pool_backward(Tensor({4}), cache, params);
  for (std::size_t i = 0; i < grads.ds.size(); ++i) CHECK(grads.ds[i] == 0.0);
  for (std::size_t i = 0; i < grads.dwq.size(); ++i) {
    CHECK(grads.dwq[i] == 0.0);
    CHECK(grads.dwk[i] == 0.0);
    CHECK(grads.dwv[i] == 0.0);
  }
}

TEST_CASE("stale cache is rejected") {
  Rng rng(10);
  PoolConfig cfg;
  cfg.dim = 4;
  cfg.heads = 1;
  const PoolParams params = init_pool_params(cfg, rng);
  PoolCache cache;  // never filled
  CHECK_THROWS_AS(pool_backward(Tensor({4}), cache, params), std::runtime_error);
}

TEST_CASE("config validation: dim must divide by heads") {
  PoolConfig cfg;
  cfg.dim = 10;
  cfg.heads = 4;
  Rng rng(11);
  CHECK_THROWS_AS(init_pool_params(cfg, rng), std::invalid_argument);
}
