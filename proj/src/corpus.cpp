// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "izt/io.hpp"

namespace izt {

namespace {

constexpr std::size_t kVocabSize = 12;
constexpr std::size_t kVoicedSymbols = 6;
constexpr std::size_t kHarmonics = 3;

// Integer sample periods at 24 kHz; keeps the pitch lag exact for the
// autocorrelation estimator.
constexpr double kPeriodPool[] = {200, 160, 120, 96, 150, 100, 80, 240};

// Per-symbol spectral tilt: voiced symbols re-weight the speaker's
// harmonics, unvoiced symbols shift the noise color.
double symbol_harmonic_weight(std::uint32_t symbol, std::size_t harmonic) {
  return 0.4 + 0.6 * std::abs(std::sin(1.7 * (symbol + 1) * (harmonic + 1)));
}

double symbol_noise_color(std::uint32_t symbol) {
  return 0.1 + 0.08 * static_cast<double>(symbol - kVoicedSymbols);
}

std::string speaker_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03zu", i);
  return buf;
}

std::string sentence_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sent%03zu", i);
  return buf;
}

TextSeq make_sentence(Rng& rng) {
  TextSeq text;
  const std::size_t len = 6 + rng.next_u64() % 7;  // 6..12 symbols
  for (std::size_t i = 0; i < len; ++i) {
    text.symbols.push_back(static_cast<std::uint32_t>(rng.next_u64() % kVocabSize));
    text.durations.push_back(static_cast<std::uint32_t>(4 + rng.next_u64() % 7));  // 4..10
  }
  bool any_voiced = false;
  for (auto s : text.symbols) any_voiced = any_voiced || symbol_is_voiced(s);
  if (!any_voiced) text.symbols[0] = 0;  // keep every sentence poolable
  return text;
}

std::vector<std::uint8_t> compute_boundary_flags(const TextSeq& text, const DspConfig& cfg) {
  const std::size_t T = text.total_frames();
  std::vector<std::size_t> edges;  // segment edges in samples
  std::size_t frame = 0;
  for (std::size_t i = 0; i + 1 < text.symbols.size(); ++i) {
    frame += text.durations[i];
    edges.push_back(frame * cfg.hop_size);
  }
  std::vector<std::uint8_t> flags(T, 0);
  const long half = static_cast<long>(cfg.window_size) / 2;
  for (std::size_t t = 0; t < T; ++t) {
    const long center = static_cast<long>(t * cfg.hop_size);
    for (std::size_t e : edges)
      if (std::llabs(center - static_cast<long>(e)) < half) {
        flags[t] = 1;
        break;
      }
  }
  return flags;
}

void write_text_file(const std::filesystem::path& path, const TextSeq& text) {
  std::ostringstream out;
  for (std::size_t i = 0; i < text.symbols.size(); ++i)
    out << (i ? " " : "") << text.symbols[i];
  out << "\n";
  for (std::size_t i = 0; i < text.durations.size(); ++i)
    out << (i ? " " : "") << text.durations[i];
  out << "\n";
  atomic_write_file(path, out.str());
}

TextSeq read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open text file: " + path.string());
  std::string line1, line2;
  std::getline(in, line1);
  std::getline(in, line2);
  TextSeq text;
  std::istringstream s1(line1), s2(line2);
  std::uint32_t v;
  while (s1 >> v) text.symbols.push_back(v);
  while (s2 >> v) text.durations.push_back(v);
  text.validate(kVocabSize);
  return text;
}

}  // namespace

std::size_t TextSeq::total_frames() const {
  std::size_t n = 0;
  for (auto d : durations) n += d;
  return n;
}

void TextSeq::validate(std::size_t vocab_size) const {
  if (symbols.empty()) throw std::invalid_argument("TextSeq: empty");
  if (symbols.size() != durations.size())
    throw std::invalid_argument("TextSeq: symbols/durations length mismatch");
  for (auto s : symbols)
    if (s >= vocab_size) throw std::invalid_argument("TextSeq: symbol id out of vocabulary");
  for (auto d : durations)
    if (d == 0) throw std::invalid_argument("TextSeq: durations must be >= 1");
}

std::size_t corpus_vocab_size() { return kVocabSize; }

bool symbol_is_voiced(std::uint32_t symbol) { return symbol < kVoicedSymbols; }

AperiodicityMask oracle_mask_for_text(const TextSeq& text) {
  AperiodicityMask mask;
  mask.bits.reserve(text.total_frames());
  for (std::size_t i = 0; i < text.symbols.size(); ++i) {
    const std::uint8_t bit = symbol_is_voiced(text.symbols[i]) ? 1 : 0;
    for (std::uint32_t d = 0; d < text.durations[i]; ++d) mask.bits.push_back(bit);
  }
  return mask;
}

SyntheticSpeaker make_speaker_profile(std::size_t index, Rng& rng) {
  SyntheticSpeaker spk;
  const double period = kPeriodPool[index % std::size(kPeriodPool)];
  spk.f0_base = 24000.0 / period;
  for (std::size_t h = 0; h < kHarmonics; ++h)
    spk.harmonic_gains.push_back(rng.uniform(0.3, 1.0));
  spk.noise_color = rng.uniform(0.0, 0.5);
  return spk;
}

AudioBuffer synthesize_utterance(const SyntheticSpeaker& speaker, const TextSeq& text,
                                 const DspConfig& cfg, Rng& rng) {
  text.validate(kVocabSize);
  const std::size_t n_frames = text.total_frames();
  const std::size_t full = n_frames * cfg.hop_size;

  AudioBuffer audio;
  audio.sample_rate = cfg.sample_rate;
  audio.samples.assign(full, 0.0);

  std::size_t frame = 0;
  for (std::size_t i = 0; i < text.symbols.size(); ++i) {
    const std::uint32_t sym = text.symbols[i];
    const std::size_t start = frame * cfg.hop_size;
    const std::size_t end = (frame + text.durations[i]) * cfg.hop_size;
    if (symbol_is_voiced(sym)) {
      double norm = 0.0;
      for (std::size_t h = 0; h < kHarmonics; ++h)
        norm += speaker.harmonic_gains[h] * symbol_harmonic_weight(sym, h);
      const double amp = 0.35 / norm;
      for (std::size_t n = start; n < end; ++n) {
        double x = 0.0;
        for (std::size_t h = 0; h < kHarmonics; ++h) {
          const double f = speaker.f0_base * static_cast<double>(h + 1);
          x += speaker.harmonic_gains[h] * symbol_harmonic_weight(sym, h) *
               std::sin(2.0 * M_PI * f * static_cast<double>(n) / cfg.sample_rate);
        }
        audio.samples[n] = amp * x;
      }
    } else {
      const double a = std::min(0.9, speaker.noise_color + symbol_noise_color(sym));
      double y = 0.0, energy = 0.0;
      std::vector<double> seg(end - start);
      for (std::size_t k = 0; k < seg.size(); ++k) {
        const double w = rng.uniform(-1.0, 1.0);
        y = a * y + (1.0 - a) * w;
        seg[k] = y;
        energy += y * y;
      }
      const double rms = std::sqrt(energy / seg.size());
      const double gain = rms > 0.0 ? 0.08 / rms : 0.0;
      for (std::size_t k = 0; k < seg.size(); ++k) audio.samples[start + k] = gain * seg[k];
    }
    frame += text.durations[i];
  }
  // Trim half a hop so the center-padded framing yields exactly
  // sum(durations) frames.
  audio.samples.resize(full - cfg.hop_size / 2);
  return audio;
}

void make_corpus(std::size_t n_speakers, std::size_t n_sentences, std::uint64_t seed,
                 const std::filesystem::path& out_dir, const DspConfig& cfg) {
  if (n_speakers < 2) throw std::invalid_argument("make_corpus: need >= 2 speakers");
  if (n_sentences < 2) throw std::invalid_argument("make_corpus: need >= 2 sentences per speaker");
  cfg.validate();

  std::filesystem::create_directories(out_dir);
  Rng root(seed);

  nlohmann::json manifest;
  manifest["speakers"] = nlohmann::json::array();
  manifest["entries"] = nlohmann::json::array();

  for (std::size_t si = 0; si < n_speakers; ++si) {
    const std::string spk = speaker_name(si);
    manifest["speakers"].push_back(spk);
    std::filesystem::create_directories(out_dir / spk);
    Rng spk_rng = root.fork(1000 + si);
    const SyntheticSpeaker profile = make_speaker_profile(si, spk_rng);

    for (std::size_t ui = 0; ui < n_sentences; ++ui) {
      Rng utt_rng = root.fork(si * 100003 + ui * 7919 + 17);
      const std::string sent = sentence_name(ui);
      const TextSeq text = make_sentence(utt_rng);
      const AudioBuffer audio = synthesize_utterance(profile, text, cfg, utt_rng);
      const AperiodicityMask oracle = oracle_mask_for_text(text);

      write_wav(out_dir / spk / (sent + ".wav"), audio);
      write_text_file(out_dir / spk / (sent + ".txt"), text);
      write_mask(out_dir / spk / (sent + ".msk"), oracle);

      nlohmann::json entry;
      entry["speaker"] = spk;
      entry["sentence"] = sent;
      entry["wav"] = spk + "/" + sent + ".wav";
      entry["txt"] = spk + "/" + sent + ".txt";
      entry["msk"] = spk + "/" + sent + ".msk";
      manifest["entries"].push_back(entry);
    }
  }
  atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

Corpus load_corpus(const std::filesystem::path& dir, const DspConfig& cfg) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot open corpus manifest: " + (dir / "manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(in);

  Corpus corpus;
  for (const auto& s : manifest.at("speakers")) corpus.speakers.push_back(s.get<std::string>());

  for (const auto& entry : manifest.at("entries")) {
    Utterance utt;
    utt.speaker = entry.at("speaker").get<std::string>();
    utt.sentence = entry.at("sentence").get<std::string>();
    utt.wav_path = dir / entry.at("wav").get<std::string>();
    utt.text = read_text_file(dir / entry.at("txt").get<std::string>());
    utt.oracle_mask = read_mask(dir / entry.at("msk").get<std::string>());

    const AudioBuffer audio = read_wav(utt.wav_path);
    utt.mel = compute_mel(audio, cfg);
    utt.est_mask = make_mask(estimate_periodicity(audio, cfg), cfg.periodicity_threshold);
    utt.boundary = compute_boundary_flags(utt.text, cfg);

    if (utt.oracle_mask.bits.size() != utt.mel.frame_count())
      throw std::runtime_error("corpus: oracle mask / mel length mismatch for " +
                               utt.speaker + "/" + utt.sentence);
    corpus.by_speaker[utt.speaker].push_back(corpus.utterances.size());
    corpus.utterances.push_back(std::move(utt));
  }
  if (corpus.speakers.size() < 2) throw std::runtime_error("corpus: need >= 2 speakers");
  return corpus;
}

}  // namespace izt
