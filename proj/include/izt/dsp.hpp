// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_DSP_HPP_
#define IZT_DSP_HPP_

#include <cstdint>
#include <vector>

#include "izt/tensor.hpp"

namespace izt {

struct AudioBuffer {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  std::uint32_t sample_rate = 24000;

  void validate() const;  // throws on empty / non-finite / bad rate
};

struct DspConfig {
  std::uint32_t sample_rate = 24000;
  std::uint32_t window_size = 1024;
  std::uint32_t fft_size = 1024;
  std::uint32_t hop_size = 256;
  std::uint32_t mel_bins = 100;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 -> sample_rate / 2
  double f0_min = 70.0;
  double f0_max = 400.0;
  double periodicity_threshold = 0.85;
  // Reflect-pad window/2 on both sides so frame t centers on sample t*hop.
  bool center = true;
  double log_floor = 1e-10;     // mel energy clamp before ln
  double silence_floor = 1e-4;  // frame RMS below this counts as unvoiced

  void validate() const;
  double effective_fmax() const { return fmax > 0.0 ? fmax : sample_rate / 2.0; }
};

struct MelSpectrogram {
  Tensor frames;  // T x M, log-mel
  std::uint32_t hop_size = 0;
  std::uint32_t sample_rate = 0;

  std::size_t frame_count() const { return frames.rows(); }
  std::size_t mel_bins() const { return frames.cols(); }
};

struct PeriodicityTrack {
  std::vector<double> values;  // periodicity_t in [0, 1]
  std::vector<double> f0;      // Hz, 0 for unvoiced
};

struct AperiodicityMask {
  std::vector<std::uint8_t> bits;  // {0, 1}, 1 = voiced

  std::size_t voiced_count() const;
};

// Number of analysis frames the framing policy yields for `samples` samples.
std::size_t frame_count_for(std::size_t samples, const DspConfig& cfg);

MelSpectrogram compute_mel(const AudioBuffer& audio, const DspConfig& cfg);
PeriodicityTrack estimate_periodicity(const AudioBuffer& audio, const DspConfig& cfg);
AperiodicityMask make_mask(const PeriodicityTrack& track, double threshold);

// Center frequencies (Hz) of the triangular mel filters; test support.
std::vector<double> mel_filter_centers(const DspConfig& cfg);

// In-place iterative radix-2 FFT; re/im length must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

}  // namespace izt

#endif  // IZT_DSP_HPP_
