// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_CORPUS_HPP_
#define IZT_CORPUS_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "izt/dsp.hpp"
#include "izt/text.hpp"

namespace izt {

// Fixed 12-symbol vocabulary; ids 0..5 are voiced, 6..11 unvoiced.
std::size_t corpus_vocab_size();
bool symbol_is_voiced(std::uint32_t symbol);

// Oracle mask for a symbol sequence: frame t carries the voicing of the
// symbol it falls in.
AperiodicityMask oracle_mask_for_text(const TextSeq& text);

struct SyntheticSpeaker {
  double f0_base = 0.0;             // Hz, integer sample period by construction
  std::vector<double> harmonic_gains;  // formant profile, 3 harmonics
  double noise_color = 0.0;         // one-pole lowpass coefficient
};

struct Utterance {
  std::string speaker;
  std::string sentence;
  std::filesystem::path wav_path;
  TextSeq text;
  AperiodicityMask oracle_mask;
  MelSpectrogram mel;
  AperiodicityMask est_mask;  // dsp-frontend estimate at the config threshold
  std::vector<std::uint8_t> boundary;  // 1 where the analysis window spans a segment edge
};

struct Corpus {
  std::vector<std::string> speakers;
  std::vector<Utterance> utterances;
  std::map<std::string, std::vector<std::size_t>> by_speaker;  // indices into utterances
};

// Writes <out>/<speaker>/<sentence>.{wav,txt,msk} plus manifest.json.
// Deterministic per (n_speakers, n_sentences, seed).
void make_corpus(std::size_t n_speakers, std::size_t n_sentences, std::uint64_t seed,
                 const std::filesystem::path& out_dir, const DspConfig& cfg);

// Reads a corpus directory; recomputes mel and the estimated mask from the
// WAV files with the given config.
Corpus load_corpus(const std::filesystem::path& dir, const DspConfig& cfg);

// Synthesizes the waveform for one sentence; test support.
AudioBuffer synthesize_utterance(const SyntheticSpeaker& speaker, const TextSeq& text,
                                 const DspConfig& cfg, Rng& rng);

SyntheticSpeaker make_speaker_profile(std::size_t index, Rng& rng);

}  // namespace izt

#endif  // IZT_CORPUS_HPP_
