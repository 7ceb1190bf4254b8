// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace izt {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (known.count(it.key()) == 0)
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in section " +
                                  section);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_dsp(const json& obj, DspConfig& cfg) {
  reject_unknown_keys(obj,
                      {"sample_rate", "window_size", "fft_size", "hop_size", "mel_bins",
                       "fmin", "fmax", "f0_min", "f0_max", "periodicity_threshold", "center",
                       "log_floor", "silence_floor"},
                      "dsp");
  read(obj, "sample_rate", cfg.sample_rate);
  read(obj, "window_size", cfg.window_size);
  read(obj, "fft_size", cfg.fft_size);
  read(obj, "hop_size", cfg.hop_size);
  read(obj, "mel_bins", cfg.mel_bins);
  read(obj, "fmin", cfg.fmin);
  read(obj, "fmax", cfg.fmax);
  read(obj, "f0_min", cfg.f0_min);
  read(obj, "f0_max", cfg.f0_max);
  read(obj, "periodicity_threshold", cfg.periodicity_threshold);
  read(obj, "center", cfg.center);
  read(obj, "log_floor", cfg.log_floor);
  read(obj, "silence_floor", cfg.silence_floor);
}

void parse_model(const json& obj, ModelConfig& cfg) {
  reject_unknown_keys(obj,
                      {"dim", "heads", "scale_by_full_dim", "average_voiced_rows_only",
                       "encoder_hidden", "decoder_hidden", "disc_hidden", "embed_dim",
                       "mel_shift", "mel_scale"},
                      "model");
  read(obj, "dim", cfg.dim);
  read(obj, "heads", cfg.heads);
  read(obj, "scale_by_full_dim", cfg.scale_by_full_dim);
  read(obj, "average_voiced_rows_only", cfg.average_voiced_rows_only);
  read(obj, "encoder_hidden", cfg.encoder_hidden);
  read(obj, "decoder_hidden", cfg.decoder_hidden);
  read(obj, "disc_hidden", cfg.disc_hidden);
  read(obj, "embed_dim", cfg.embed_dim);
  read(obj, "mel_shift", cfg.mel_shift);
  read(obj, "mel_scale", cfg.mel_scale);
}

void parse_train(const json& obj, TrainConfig& cfg, PretrainConfig& pre) {
  reject_unknown_keys(obj,
                      {"steps", "batch_size", "seed", "lr", "disc_lr", "beta1", "beta2",
                       "epsilon", "lambda_kd", "lambda_cyc", "lambda_adv",
                       "support_per_query", "adv_on_query", "use_mask", "snapshot_every",
                       "pretrain_steps", "pretrain_batch_size", "pretrain_lr",
                       "pretrain_seed"},
                      "train");
  read(obj, "steps", cfg.steps);
  read(obj, "batch_size", cfg.batch_size);
  read(obj, "seed", cfg.seed);
  read(obj, "lr", cfg.adam.lr);
  read(obj, "disc_lr", cfg.disc_adam.lr);
  read(obj, "beta1", cfg.adam.beta1);
  read(obj, "beta2", cfg.adam.beta2);
  read(obj, "epsilon", cfg.adam.epsilon);
  cfg.disc_adam.beta1 = cfg.adam.beta1;
  cfg.disc_adam.beta2 = cfg.adam.beta2;
  cfg.disc_adam.epsilon = cfg.adam.epsilon;
  read(obj, "lambda_kd", cfg.weights.kd);
  read(obj, "lambda_cyc", cfg.weights.cyc);
  read(obj, "lambda_adv", cfg.weights.adv);
  read(obj, "support_per_query", cfg.support_per_query);
  read(obj, "adv_on_query", cfg.adv_on_query);
  read(obj, "use_mask", cfg.use_mask);
  read(obj, "snapshot_every", cfg.snapshot_every);
  read(obj, "pretrain_steps", pre.steps);
  read(obj, "pretrain_batch_size", pre.batch_size);
  read(obj, "pretrain_lr", pre.adam.lr);
  read(obj, "pretrain_seed", pre.seed);
}

void parse_corpus(const json& obj, CorpusConfig& cfg) {
  reject_unknown_keys(obj, {"speakers", "sentences", "seed"}, "corpus");
  read(obj, "speakers", cfg.speakers);
  read(obj, "sentences", cfg.sentences);
  read(obj, "seed", cfg.seed);
}

}  // namespace

EncoderConfig AppConfig::encoder_config() const {
  EncoderConfig cfg;
  cfg.mel_bins = dsp.mel_bins;
  cfg.hidden = model.encoder_hidden;
  cfg.dim = model.dim;
  cfg.mel_shift = model.mel_shift;
  cfg.mel_scale = model.mel_scale;
  cfg.pool.dim = model.dim;
  cfg.pool.heads = model.heads;
  cfg.pool.scale_by_full_dim = model.scale_by_full_dim;
  cfg.pool.average_voiced_rows_only = model.average_voiced_rows_only;
  return cfg;
}

GeneratorConfig AppConfig::generator_config() const {
  GeneratorConfig cfg;
  cfg.vocab_size = corpus_vocab_size();
  cfg.embed_dim = model.embed_dim;
  cfg.cond_dim = model.dim;
  cfg.decoder_hidden = model.decoder_hidden;
  cfg.mel_bins = dsp.mel_bins;
  return cfg;
}

DiscriminatorConfig AppConfig::discriminator_config() const {
  DiscriminatorConfig cfg;
  cfg.mel_bins = dsp.mel_bins;
  cfg.hidden = model.disc_hidden;
  cfg.cond_dim = model.dim;
  cfg.mel_shift = model.mel_shift;
  cfg.mel_scale = model.mel_scale;
  return cfg;
}

void AppConfig::validate() const {
  dsp.validate();
  encoder_config().validate();
  generator_config().validate();
  train.validate();
  if (corpus.speakers < 2 || corpus.sentences < 2)
    throw std::invalid_argument("config: corpus needs >= 2 speakers and >= 2 sentences");
}

AppConfig parse_config_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown_keys(doc, {"dsp", "model", "train", "corpus"}, "(top level)");

  AppConfig cfg;
  try {
    if (doc.contains("dsp")) parse_dsp(doc.at("dsp"), cfg.dsp);
    if (doc.contains("model")) parse_model(doc.at("model"), cfg.model);
    if (doc.contains("train")) parse_train(doc.at("train"), cfg.train, cfg.pretrain);
    if (doc.contains("corpus")) parse_corpus(doc.at("corpus"), cfg.corpus);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

}  // namespace izt
