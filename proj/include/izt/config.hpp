// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_CONFIG_HPP_
#define IZT_CONFIG_HPP_

#include <filesystem>
#include <string>

#include "izt/dsp.hpp"
#include "izt/encoder.hpp"
#include "izt/generator.hpp"
#include "izt/objectives.hpp"
#include "izt/trainer.hpp"

namespace izt {

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  bool scale_by_full_dim = false;
  bool average_voiced_rows_only = false;
  std::vector<std::size_t> encoder_hidden = {128, 128};
  std::vector<std::size_t> decoder_hidden = {128};
  std::vector<std::size_t> disc_hidden = {128, 128};
  std::size_t embed_dim = 64;
  double mel_shift = 12.0;
  double mel_scale = 8.0;
};

struct CorpusConfig {
  std::size_t speakers = 4;
  std::size_t sentences = 8;
  std::uint64_t seed = 7;
};

// One JSON document with sections dsp, model, train, corpus. Unknown keys
// are rejected; values are validated before any work starts.
struct AppConfig {
  DspConfig dsp;
  ModelConfig model;
  TrainConfig train;
  PretrainConfig pretrain;
  CorpusConfig corpus;

  EncoderConfig encoder_config() const;
  GeneratorConfig generator_config() const;
  DiscriminatorConfig discriminator_config() const;

  void validate() const;
};

AppConfig parse_config_json(const std::string& json_text);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace izt

#endif  // IZT_CONFIG_HPP_
