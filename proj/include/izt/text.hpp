// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_TEXT_HPP_
#define IZT_TEXT_HPP_

#include <cstdint>
#include <vector>

namespace izt {

// Symbol ids with oracle per-symbol durations in frames.
struct TextSeq {
  std::vector<std::uint32_t> symbols;
  std::vector<std::uint32_t> durations;

  std::size_t total_frames() const;
  void validate(std::size_t vocab_size) const;
};

}  // namespace izt

#endif  // IZT_TEXT_HPP_
