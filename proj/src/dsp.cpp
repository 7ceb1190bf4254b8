// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace izt {

namespace {

bool is_pow2(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Sample with reflect padding at both ends.
double sample_at(const std::vector<double>& x, long i) {
  const long n = static_cast<long>(x.size());
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    if (n == 1) return x[0];
  }
  return x[static_cast<std::size_t>(i)];
}

// Extracts frame t (window_size samples) honoring the center/padding policy.
void extract_frame(const std::vector<double>& x, const DspConfig& cfg, std::size_t t,
                   std::vector<double>& out) {
  const long w = static_cast<long>(cfg.window_size);
  const long start = static_cast<long>(t * cfg.hop_size) - (cfg.center ? w / 2 : 0);
  out.resize(cfg.window_size);
  for (long k = 0; k < w; ++k) out[static_cast<std::size_t>(k)] = sample_at(x, start + k);
}

std::vector<std::vector<double>> make_mel_filterbank(const DspConfig& cfg) {
  const std::size_t n_bins = cfg.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.effective_fmax());
  std::vector<double> pts(cfg.mel_bins + 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(cfg.mel_bins + 1));

  const double hz_per_bin = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
  std::vector<std::vector<double>> fb(cfg.mel_bins, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
    const double lo = pts[m], mid = pts[m + 1], hi = pts[m + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = b * hz_per_bin;
      if (f <= lo || f >= hi) continue;
      fb[m][b] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

void AudioBuffer::validate() const {
  if (samples.empty()) throw std::invalid_argument("AudioBuffer: empty audio");
  if (sample_rate == 0) throw std::invalid_argument("AudioBuffer: sample_rate must be > 0");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("AudioBuffer: non-finite sample");
}

void DspConfig::validate() const {
  if (window_size > fft_size) throw std::invalid_argument("DspConfig: window_size > fft_size");
  if (hop_size == 0 || hop_size > window_size)
    throw std::invalid_argument("DspConfig: hop_size must be in (0, window_size]");
  if (!is_pow2(fft_size)) throw std::invalid_argument("DspConfig: fft_size must be a power of two");
  if (mel_bins == 0) throw std::invalid_argument("DspConfig: mel_bins must be > 0");
  if (!(f0_min > 0.0 && f0_min < f0_max && f0_max < sample_rate / 2.0))
    throw std::invalid_argument("DspConfig: need 0 < f0_min < f0_max < sample_rate/2");
  if (!(periodicity_threshold > 0.0 && periodicity_threshold <= 1.0))
    throw std::invalid_argument("DspConfig: periodicity_threshold must be in (0, 1]");
}

std::size_t AperiodicityMask::voiced_count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

std::size_t frame_count_for(std::size_t samples, const DspConfig& cfg) {
  if (cfg.center) return 1 + samples / cfg.hop_size;
  if (samples < cfg.window_size)
    throw std::invalid_argument("frame_count_for: audio shorter than window (center=false)");
  return 1 + (samples - cfg.window_size) / cfg.hop_size;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (n != im.size() || !is_pow2(static_cast<std::uint32_t>(n)))
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

MelSpectrogram compute_mel(const AudioBuffer& audio, const DspConfig& cfg) {
  audio.validate();
  cfg.validate();
  if (audio.sample_rate != cfg.sample_rate)
    throw std::invalid_argument("compute_mel: audio/config sample rate mismatch");

  const std::size_t T = frame_count_for(audio.samples.size(), cfg);
  const std::size_t n_bins = cfg.fft_size / 2 + 1;
  const auto fb = make_mel_filterbank(cfg);

  std::vector<double> hann(cfg.window_size);
  for (std::size_t k = 0; k < cfg.window_size; ++k)
    hann[k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * k / (cfg.window_size - 1));

  MelSpectrogram mel;
  mel.frames = Tensor({T, cfg.mel_bins});
  mel.hop_size = cfg.hop_size;
  mel.sample_rate = cfg.sample_rate;

  std::vector<double> frame, re(cfg.fft_size), im(cfg.fft_size);
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < T; ++t) {
    extract_frame(audio.samples, cfg, t, frame);
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (std::size_t k = 0; k < cfg.window_size; ++k) re[k] = frame[k] * hann[k];
    fft_radix2(re, im);
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = re[b] * re[b] + im[b] * im[b];
    for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
      double e = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) e += fb[m][b] * power[b];
      mel.frames.at(t, m) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return mel;
}

PeriodicityTrack estimate_periodicity(const AudioBuffer& audio, const DspConfig& cfg) {
  audio.validate();
  cfg.validate();
  if (audio.sample_rate != cfg.sample_rate)
    throw std::invalid_argument("estimate_periodicity: audio/config sample rate mismatch");

  const std::size_t T = frame_count_for(audio.samples.size(), cfg);
  const std::size_t lag_min =
      static_cast<std::size_t>(std::floor(cfg.sample_rate / cfg.f0_max));
  std::size_t lag_max = static_cast<std::size_t>(std::ceil(cfg.sample_rate / cfg.f0_min));
  lag_max = std::min<std::size_t>(lag_max, cfg.window_size - 1);

  PeriodicityTrack track;
  track.values.assign(T, 0.0);
  track.f0.assign(T, 0.0);

  std::vector<double> frame;
  for (std::size_t t = 0; t < T; ++t) {
    extract_frame(audio.samples, cfg, t, frame);
    double energy = 0.0;
    for (double s : frame) energy += s * s;
    const double rms = std::sqrt(energy / frame.size());
    if (rms < cfg.silence_floor) continue;  // unvoiced: f0 = 0, periodicity = 0

    double best_r = 0.0;
    std::size_t best_lag = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      const std::size_t n = frame.size() - lag;
      for (std::size_t k = 0; k < n; ++k) {
        num += frame[k] * frame[k + lag];
        e0 += frame[k] * frame[k];
        e1 += frame[k + lag] * frame[k + lag];
      }
      const double denom = std::sqrt(e0 * e1);
      if (denom <= 0.0) continue;
      const double r = num / denom;
      if (r > best_r) {
        best_r = r;
        best_lag = lag;
      }
    }
    if (best_lag == 0 || best_r <= 0.0) continue;  // no valid peak
    track.values[t] = std::min(best_r, 1.0);
    track.f0[t] = static_cast<double>(cfg.sample_rate) / static_cast<double>(best_lag);
  }
  return track;
}

AperiodicityMask make_mask(const PeriodicityTrack& track, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("make_mask: threshold must be in (0, 1]");
  AperiodicityMask mask;
  mask.bits.reserve(track.values.size());
  for (double p : track.values) mask.bits.push_back(p >= threshold ? 1 : 0);
  return mask;
}

std::vector<double> mel_filter_centers(const DspConfig& cfg) {
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.effective_fmax());
  std::vector<double> centers(cfg.mel_bins);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m)
    centers[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m + 1) /
                                        static_cast<double>(cfg.mel_bins + 1));
  return centers;
}

}  // namespace izt
