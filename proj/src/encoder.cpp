// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/encoder.hpp"

#include <stdexcept>

namespace izt {

void EncoderConfig::validate() const {
  if (mel_bins == 0 || dim == 0) throw std::invalid_argument("EncoderConfig: zero widths");
  if (mel_scale <= 0.0) throw std::invalid_argument("EncoderConfig: mel_scale must be > 0");
  PoolConfig p = pool;
  p.dim = dim;
  p.validate();
}

SpeakerEncoder init_speaker_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  SpeakerEncoder enc;
  enc.cfg = cfg;
  enc.cfg.pool.dim = cfg.dim;
  std::vector<std::size_t> widths;
  widths.push_back(cfg.mel_bins);
  for (std::size_t w : cfg.hidden) widths.push_back(w);
  widths.push_back(cfg.dim);
  enc.trunk = init_mlp(widths, rng);
  enc.pool = init_pool_params(enc.cfg.pool, rng);
  return enc;
}

Tensor encode(const SpeakerEncoder& enc, const Tensor& mel, const AperiodicityMask& mask,
              EncodeCache* cache) {
  if (mel.rank() != 2 || mel.cols() != enc.cfg.mel_bins)
    throw std::invalid_argument("encode: mel must be T x mel_bins");
  const std::size_t T = mel.rows(), M = mel.cols();
  if (mask.bits.size() != T) throw std::invalid_argument("encode: mel/mask length mismatch");

  // Normalize and lay frames out as columns.
  Tensor x({M, T});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m)
      x.at(m, t) = (mel.at(t, m) + enc.cfg.mel_shift) / enc.cfg.mel_scale;

  MlpCache trunk_cache;
  PoolCache pool_cache;
  const Tensor s = mlp_forward(enc.trunk, x, &trunk_cache);
  const Tensor v = pool(s, mask, enc.pool, &pool_cache);
  if (cache != nullptr) {
    cache->valid = true;
    cache->trunk = std::move(trunk_cache);
    cache->pool = std::move(pool_cache);
    cache->frame_count = T;
  }
  return v;
}

Tensor encode(const SpeakerEncoder& enc, const MelSpectrogram& mel,
              const AperiodicityMask& mask, EncodeCache* cache) {
  return encode(enc, mel.frames, mask, cache);
}

void EncoderGrads::accumulate(const EncoderGrads& other) {
  trunk.accumulate(other.trunk);
  pool.dwq += other.pool.dwq;
  pool.dwk += other.pool.dwk;
  pool.dwv += other.pool.dwv;
}

EncoderGrads encode_backward(const SpeakerEncoder& enc, const EncodeCache& cache,
                             const Tensor& upstream) {
  if (!cache.valid) throw std::runtime_error("encode_backward: stale cache");
  EncoderGrads grads;
  grads.pool = pool_backward(upstream, cache.pool, enc.pool);
  grads.trunk = mlp_backward(enc.trunk, cache.trunk, grads.pool.ds);

  const std::size_t T = cache.frame_count, M = enc.cfg.mel_bins;
  grads.dmel = Tensor({T, M});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m)
      grads.dmel.at(t, m) = grads.trunk.dx.at(m, t) / enc.cfg.mel_scale;
  return grads;
}

EncoderGrads zero_encoder_grads(const SpeakerEncoder& enc, std::size_t frame_count) {
  EncoderGrads grads;
  grads.trunk = zero_mlp_grads(enc.trunk, enc.cfg.mel_bins, frame_count);
  grads.pool.ds = Tensor({enc.cfg.dim, frame_count});
  grads.pool.dwq = Tensor({enc.cfg.dim, enc.cfg.dim});
  grads.pool.dwk = Tensor({enc.cfg.dim, enc.cfg.dim});
  grads.pool.dwv = Tensor({enc.cfg.dim, enc.cfg.dim});
  grads.dmel = Tensor({frame_count, enc.cfg.mel_bins});
  return grads;
}

std::vector<Tensor*> encoder_params(SpeakerEncoder& enc) {
  std::vector<Tensor*> out;
  for (MlpLayer& layer : enc.trunk.layers) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  out.push_back(&enc.pool.wq);
  out.push_back(&enc.pool.wk);
  out.push_back(&enc.pool.wv);
  return out;
}

std::vector<const Tensor*> encoder_grad_ptrs(const EncoderGrads& grads) {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < grads.trunk.dw.size(); ++l) {
    out.push_back(&grads.trunk.dw[l]);
    out.push_back(&grads.trunk.db[l]);
  }
  out.push_back(&grads.pool.dwq);
  out.push_back(&grads.pool.dwk);
  out.push_back(&grads.pool.dwv);
  return out;
}

std::vector<std::string> encoder_param_names(const SpeakerEncoder& enc) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < enc.trunk.layers.size(); ++l) {
    names.push_back("enc.l" + std::to_string(l) + ".w");
    names.push_back("enc.l" + std::to_string(l) + ".b");
  }
  names.push_back("pool.WQ");
  names.push_back("pool.WK");
  names.push_back("pool.WV");
  return names;
}

std::vector<Tensor> EncodeOp::forward(const std::vector<Tensor>& inputs) {
  enc_.cfg = cfg_;
  enc_.cfg.pool.dim = cfg_.dim;
  enc_.trunk.layers.clear();
  std::size_t idx = 1;
  std::vector<std::size_t> widths;
  widths.push_back(cfg_.mel_bins);
  for (std::size_t w : cfg_.hidden) widths.push_back(w);
  widths.push_back(cfg_.dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpLayer layer;
    layer.w = inputs.at(idx++);
    layer.b = inputs.at(idx++);
    layer.relu = l + 2 < widths.size();
    enc_.trunk.layers.push_back(std::move(layer));
  }
  enc_.pool.cfg = enc_.cfg.pool;
  enc_.pool.wq = inputs.at(idx++);
  enc_.pool.wk = inputs.at(idx++);
  enc_.pool.wv = inputs.at(idx++);
  return {encode(enc_, inputs[0], mask_, &cache_)};
}

std::vector<Tensor> EncodeOp::backward(const std::vector<Tensor>& upstream) {
  EncoderGrads g = encode_backward(enc_, cache_, upstream.at(0));
  std::vector<Tensor> out;
  out.push_back(std::move(g.dmel));
  for (std::size_t l = 0; l < g.trunk.dw.size(); ++l) {
    out.push_back(std::move(g.trunk.dw[l]));
    out.push_back(std::move(g.trunk.db[l]));
  }
  out.push_back(std::move(g.pool.dwq));
  out.push_back(std::move(g.pool.dwk));
  out.push_back(std::move(g.pool.dwv));
  return out;
}

}  // namespace izt
