// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>

#include <doctest.h>

#include "izt/encoder.hpp"

using namespace izt;

namespace {

AperiodicityMask mask_of(std::vector<std::uint8_t> bits) {
  AperiodicityMask m;
  m.bits = std::move(bits);
  return m;
}

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.mel_bins = 10;
  cfg.hidden = {16};
  cfg.dim = 8;
  cfg.pool.heads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("encoding is deterministic") {
  Rng rng(21);
  const EncoderConfig cfg = small_cfg();
  const SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
  const Tensor mel = rng.normal_tensor({12, 10});
  const AperiodicityMask mask = mask_of({1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0});
  const Tensor a = encode(enc, mel, mask);
  const Tensor b = encode(enc, mel, mask);
  CHECK(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("constant frames give the embedding of that single frame") {
  // Every frame identical -> trunk outputs are identical -> the attention
  // average reduces to the per-frame value regardless of mask pattern.
  Rng rng(22);
  const EncoderConfig cfg = small_cfg();
  const SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
  Tensor mel({6, 10});
  Tensor one({1, 10});
  for (std::size_t m = 0; m < 10; ++m) {
    const double val = -3.0 + 0.4 * m;
    one.at(0, m) = val;
    for (std::size_t t = 0; t < 6; ++t) mel.at(t, m) = val;
  }
  const Tensor full = encode(enc, mel, mask_of({1, 0, 1, 1, 0, 1}));
  const Tensor single = encode(enc, one, mask_of({1}));
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(std::abs(full[i] - single[i]) < 1e-10);
}

TEST_CASE("closed form for T=1 with a linear trunk") {
  // With one frame, one layer, no ReLU: v = WV (W x + b), so
  // dmel = W^T WV^T u / mel_scale for upstream u.
  Rng rng(23);
  EncoderConfig cfg;
  cfg.mel_bins = 7;
  cfg.hidden = {};
  cfg.dim = 4;
  cfg.pool.heads = 1;
  SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
  const Tensor mel = rng.normal_tensor({1, 7});
  EncodeCache cache;
  const Tensor v = encode(enc, mel, mask_of({1}), &cache);

  // Forward closed form.
  Tensor x({7});
  for (std::size_t m = 0; m < 7; ++m) x[m] = (mel.at(0, m) + cfg.mel_shift) / cfg.mel_scale;
  Tensor s({4});
  for (std::size_t i = 0; i < 4; ++i) {
    s[i] = enc.trunk.layers[0].b[i];
    for (std::size_t m = 0; m < 7; ++m) s[i] += enc.trunk.layers[0].w.at(i, m) * x[m];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    double expect = 0.0;
    for (std::size_t j = 0; j < 4; ++j) expect += enc.pool.wv.at(i, j) * s[j];
    CHECK(std::abs(v[i] - expect) < 1e-12);
  }

  // Backward closed form.
  const Tensor u = rng.normal_tensor({4});
  const EncoderGrads grads = encode_backward(enc, cache, u);
  for (std::size_t m = 0; m < 7; ++m) {
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        expect += enc.trunk.layers[0].w.at(j, m) * enc.pool.wv.at(i, j) * u[i];
    expect /= cfg.mel_scale;
    CHECK(std::abs(grads.dmel.at(0, m) - expect) < 1e-12);
  }
}

TEST_CASE("voiced-rows variant is insensitive to masked-frame perturbations") {
  Rng rng(24);
  EncoderConfig cfg = small_cfg();
  cfg.pool.average_voiced_rows_only = true;
  const SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
  const Tensor mel = rng.normal_tensor({8, 10});
  const AperiodicityMask mask = mask_of({1, 0, 1, 1, 0, 1, 0, 1});
  const Tensor base = encode(enc, mel, mask);
  Tensor mel2 = mel;
  for (std::size_t t = 0; t < 8; ++t)
    if (mask.bits[t] == 0)
      for (std::size_t m = 0; m < 10; ++m) mel2.at(t, m) += rng.normal();
  const Tensor perturbed = encode(enc, mel2, mask);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base[i] - perturbed[i]) < 1e-12);
}

TEST_CASE("all-masked reference and length mismatches are rejected") {
  Rng rng(25);
  const SpeakerEncoder enc = init_speaker_encoder(small_cfg(), rng);
  const Tensor mel = rng.normal_tensor({4, 10});
  CHECK_THROWS_WITH_AS(encode(enc, mel, mask_of({0, 0, 0, 0})),
                       "no voiced frames in reference", std::invalid_argument);
  CHECK_THROWS_AS(encode(enc, mel, mask_of({1, 1})), std::invalid_argument);
  CHECK_THROWS_AS(encode(enc, rng.normal_tensor({4, 9}), mask_of({1, 1, 1, 1})),
                  std::invalid_argument);
}

TEST_CASE("full encoder passes the gradient checker") {
  Rng rng(26);
  EncoderConfig cfg;
  cfg.mel_bins = 100;
  cfg.hidden = {16};
  cfg.dim = 16;
  cfg.pool.heads = 2;
  EncodeOp op(cfg, mask_of({1, 1, 0, 1, 0, 1, 1, 0, 1, 1, 0, 1}));
  const SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
  std::vector<Tensor> inputs;
  inputs.push_back(rng.normal_tensor({12, 100}, 3.0));
  inputs.push_back(enc.trunk.layers[0].w);
  inputs.push_back(enc.trunk.layers[0].b);
  inputs.push_back(enc.trunk.layers[1].w);
  inputs.push_back(enc.trunk.layers[1].b);
  inputs.push_back(enc.pool.wq);
  inputs.push_back(enc.pool.wk);
  inputs.push_back(enc.pool.wv);
  const GradCheckReport report = grad_check(op, inputs, 1e-4, 1e-4);
  CHECK(report.passed);
}

TEST_CASE("frame-wise trunk passes the gradient checker") {
  Rng rng(27);
  const Mlp mlp = init_mlp({6, 10, 4}, rng);
  MlpOp op({true, false});
  std::vector<Tensor> inputs;
  inputs.push_back(rng.normal_tensor({6, 5}));
  for (const MlpLayer& layer : mlp.layers) {
    inputs.push_back(layer.w);
    inputs.push_back(layer.b);
  }
  const GradCheckReport report = grad_check(op, inputs, 1e-4, 1e-4);
  CHECK(report.passed);
}

TEST_CASE("parameter naming and flat views stay aligned") {
  Rng rng(28);
  SpeakerEncoder enc = init_speaker_encoder(small_cfg(), rng);
  const std::vector<Tensor*> params = encoder_params(enc);
  const std::vector<std::string> names = encoder_param_names(enc);
  REQUIRE(params.size() == names.size());
  CHECK(names.front() == "enc.l0.w");
  CHECK(names.back() == "pool.WV");
  const EncoderGrads grads = zero_encoder_grads(enc, 5);
  const std::vector<const Tensor*> gptrs = encoder_grad_ptrs(grads);
  REQUIRE(gptrs.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(params[i]->shape() == gptrs[i]->shape());
}
