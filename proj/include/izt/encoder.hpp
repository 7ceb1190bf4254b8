// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_ENCODER_HPP_
#define IZT_ENCODER_HPP_

#include <vector>

#include "izt/attention.hpp"
#include "izt/dsp.hpp"
#include "izt/mlp.hpp"

namespace izt {

struct EncoderConfig {
  std::size_t mel_bins = 100;
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t dim = 64;  // embedding size d
  // Fixed affine normalization applied to log-mel before the trunk.
  double mel_shift = 12.0;
  double mel_scale = 8.0;
  PoolConfig pool;  // pool.dim is forced to this->dim

  void validate() const;
};

// Frame-wise trunk (mel_bins -> hidden... -> dim) followed by masked
// attention pooling. No cross-frame mixing before the pooling stage.
struct SpeakerEncoder {
  EncoderConfig cfg;
  Mlp trunk;
  PoolParams pool;
};

SpeakerEncoder init_speaker_encoder(const EncoderConfig& cfg, Rng& rng);

struct EncodeCache {
  bool valid = false;
  MlpCache trunk;
  PoolCache pool;
  std::size_t frame_count = 0;
};

// mel is T x M (rows are frames). Throws if mel/mask lengths disagree or
// every frame is masked.
Tensor encode(const SpeakerEncoder& enc, const Tensor& mel, const AperiodicityMask& mask,
              EncodeCache* cache = nullptr);
Tensor encode(const SpeakerEncoder& enc, const MelSpectrogram& mel,
              const AperiodicityMask& mask, EncodeCache* cache = nullptr);

struct EncoderGrads {
  MlpGrads trunk;
  PoolGrads pool;
  Tensor dmel;  // T x M

  void accumulate(const EncoderGrads& other);
};

EncoderGrads encode_backward(const SpeakerEncoder& enc, const EncodeCache& cache,
                             const Tensor& upstream);
EncoderGrads zero_encoder_grads(const SpeakerEncoder& enc, std::size_t frame_count);

// Flat parameter/gradient views, fixed order: trunk layers then WQ, WK, WV.
std::vector<Tensor*> encoder_params(SpeakerEncoder& enc);
std::vector<const Tensor*> encoder_grad_ptrs(const EncoderGrads& grads);
std::vector<std::string> encoder_param_names(const SpeakerEncoder& enc);

// Grad-check adapter: inputs {mel, trunk w/b..., wq, wk, wv} -> {v}.
class EncodeOp : public DifferentiableOp {
 public:
  EncodeOp(EncoderConfig cfg, AperiodicityMask mask) : cfg_(cfg), mask_(std::move(mask)) {}
  std::string name() const override { return "encoder.encode"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;

 private:
  EncoderConfig cfg_;
  AperiodicityMask mask_;
  SpeakerEncoder enc_;
  EncodeCache cache_;
};

}  // namespace izt

#endif  // IZT_ENCODER_HPP_
