// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace izt {

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v;
    std::memcpy(&v, bytes_.data() + pos_, 2);
    pos_ += 2;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic(const std::string& magic) {
    if (raw(magic.size()) != magic)
      throw std::runtime_error(context_ + ": bad magic, expected " + magic);
  }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error(context_ + ": truncated file");
  }
  const std::string& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

void append_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void append_u16(std::string& out, std::uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), 2);
}
void append_f32(std::string& out, float v) { out.append(reinterpret_cast<const char*>(&v), 4); }

}  // namespace

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader r(bytes, "wav " + path.string());
  r.expect_magic("RIFF");
  r.u32();  // riff size
  r.expect_magic("WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  AudioBuffer audio;
  bool have_data = false;

  while (r.remaining() >= 8) {
    const std::string id = r.raw(4);
    const std::uint32_t chunk_size = r.u32();
    const std::size_t next = r.pos() + chunk_size + (chunk_size & 1);
    if (id == "fmt ") {
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error("wav: data chunk before fmt");
      if (format != 1) throw std::runtime_error("wav: only PCM (format 1) supported");
      if (channels != 1) throw std::runtime_error("wav: only mono supported");
      if (bits != 16) throw std::runtime_error("wav: only 16-bit samples supported");
      const std::size_t n = chunk_size / 2;
      audio.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = r.u16();
        const std::int16_t s = static_cast<std::int16_t>(raw);
        audio.samples[i] = static_cast<double>(s) / 32767.0;
      }
      audio.sample_rate = rate;
      have_data = true;
    }
    if (next > bytes.size()) break;
    r.seek(next);
  }
  if (!have_data) throw std::runtime_error("wav: no data chunk: " + path.string());
  audio.validate();
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  audio.validate();
  std::string data;
  data.reserve(audio.samples.size() * 2);
  for (double s : audio.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    append_u16(data, static_cast<std::uint16_t>(q));
  }
  std::string out;
  out += "RIFF";
  append_u32(out, static_cast<std::uint32_t>(36 + data.size()));
  out += "WAVE";
  out += "fmt ";
  append_u32(out, 16);
  append_u16(out, 1);  // PCM
  append_u16(out, 1);  // mono
  append_u32(out, audio.sample_rate);
  append_u32(out, audio.sample_rate * 2);
  append_u16(out, 2);
  append_u16(out, 16);
  out += "data";
  append_u32(out, static_cast<std::uint32_t>(data.size()));
  out += data;
  atomic_write_file(path, out);
}

void write_mel(const std::filesystem::path& path, const MelSpectrogram& mel) {
  std::string out = "IZMEL1";
  append_u32(out, static_cast<std::uint32_t>(mel.frame_count()));
  append_u32(out, static_cast<std::uint32_t>(mel.mel_bins()));
  append_u32(out, mel.hop_size);
  append_u32(out, mel.sample_rate);
  for (std::size_t i = 0; i < mel.frames.size(); ++i)
    append_f32(out, static_cast<float>(mel.frames[i]));
  atomic_write_file(path, out);
}

MelSpectrogram read_mel(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader r(bytes, "mel " + path.string());
  r.expect_magic("IZMEL1");
  const std::uint32_t t = r.u32(), m = r.u32();
  MelSpectrogram mel;
  mel.hop_size = r.u32();
  mel.sample_rate = r.u32();
  mel.frames = Tensor({t, m});
  for (std::size_t i = 0; i < mel.frames.size(); ++i) mel.frames[i] = r.f32();
  return mel;
}

void write_mask(const std::filesystem::path& path, const AperiodicityMask& mask) {
  std::string out = "IZMSK1";
  append_u32(out, static_cast<std::uint32_t>(mask.bits.size()));
  for (std::uint8_t b : mask.bits) out.push_back(static_cast<char>(b));
  atomic_write_file(path, out);
}

AperiodicityMask read_mask(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader r(bytes, "mask " + path.string());
  r.expect_magic("IZMSK1");
  const std::uint32_t t = r.u32();
  AperiodicityMask mask;
  const std::string raw = r.raw(t);
  mask.bits.assign(raw.begin(), raw.end());
  for (std::uint8_t b : mask.bits)
    if (b > 1) throw std::runtime_error("mask: bits must be 0 or 1: " + path.string());
  return mask;
}

void write_embedding(const std::filesystem::path& path, const Tensor& v) {
  std::string out = "IZEMB1";
  append_u32(out, static_cast<std::uint32_t>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) append_f32(out, static_cast<float>(v[i]));
  atomic_write_file(path, out);
}

Tensor read_embedding(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader r(bytes, "embedding " + path.string());
  r.expect_magic("IZEMB1");
  const std::uint32_t d = r.u32();
  Tensor v({d});
  for (std::size_t i = 0; i < d; ++i) v[i] = r.f32();
  return v;
}

}  // namespace izt
