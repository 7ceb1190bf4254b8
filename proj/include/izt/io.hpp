// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_IO_HPP_
#define IZT_IO_HPP_

#include <filesystem>
#include <string>

#include "izt/dsp.hpp"

namespace izt {

// WAV: PCM16 little-endian mono only; anything else is rejected with a
// diagnostic naming the offending field.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

// Mel file: magic "IZMEL1", u32 T, u32 M, u32 hop, u32 sample_rate,
// then T*M float32 little-endian row-major.
void write_mel(const std::filesystem::path& path, const MelSpectrogram& mel);
MelSpectrogram read_mel(const std::filesystem::path& path);

// Mask file: magic "IZMSK1", u32 T, then T bytes of {0,1}.
void write_mask(const std::filesystem::path& path, const AperiodicityMask& mask);
AperiodicityMask read_mask(const std::filesystem::path& path);

// Embedding file: magic "IZEMB1", u32 d, then d float32 values.
void write_embedding(const std::filesystem::path& path, const Tensor& v);
Tensor read_embedding(const std::filesystem::path& path);

// Writes to <path>.tmp then renames, so failures never leave partial output.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace izt

#endif  // IZT_IO_HPP_
