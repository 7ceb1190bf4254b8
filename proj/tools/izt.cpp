// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "izt/config.hpp"
#include "izt/corpus.hpp"
#include "izt/io.hpp"
#include "izt/trainer.hpp"

namespace {

using namespace izt;

// Exit codes: 0 ok, 1 CLI usage, 2 invalid config/arguments, 3 I/O or
// internal failure, 4 domain precondition (e.g. no voiced frames),
// 5 training divergence.
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitDomain = 4;
constexpr int kExitDiverged = 5;

AppConfig load_app_config(const std::string& config_path) {
  if (config_path.empty()) {
    AppConfig cfg;
    cfg.validate();
    return cfg;
  }
  return load_config(config_path);
}

Models make_models(const AppConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Models models;
  models.enc = init_speaker_encoder(cfg.encoder_config(), rng);
  models.gen = init_generator(cfg.generator_config(), rng);
  models.disc = init_discriminator(cfg.discriminator_config(), rng);
  return models;
}

int cmd_make_corpus(const std::string& config_path, std::size_t speakers,
                    std::size_t sentences, std::uint64_t seed, const std::string& out) {
  AppConfig cfg = load_app_config(config_path);
  make_corpus(speakers, sentences, seed, out, cfg.dsp);
  std::cout << "corpus written to " << out << "\n";
  return 0;
}

int cmd_extract_mel(const std::string& config_path, const std::string& in,
                    const std::string& out) {
  AppConfig cfg = load_app_config(config_path);
  const AudioBuffer audio = read_wav(in);
  write_mel(out, compute_mel(audio, cfg.dsp));
  return 0;
}

int cmd_extract_mask(const std::string& config_path, const std::string& in,
                     const std::string& out, double threshold) {
  AppConfig cfg = load_app_config(config_path);
  if (threshold > 0.0) cfg.dsp.periodicity_threshold = threshold;
  const AudioBuffer audio = read_wav(in);
  const PeriodicityTrack track = estimate_periodicity(audio, cfg.dsp);
  write_mask(out, make_mask(track, cfg.dsp.periodicity_threshold));
  return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& corpus_dir,
                 const std::string& out) {
  AppConfig cfg = load_app_config(config_path);
  const Corpus corpus = load_corpus(corpus_dir, cfg.dsp);
  PretrainResult result = pretrain_multispeaker(corpus, cfg.generator_config(), cfg.pretrain);
  Checkpoint ckpt;
  {
    const auto names = generator_param_names(result.generator);
    const auto params = generator_params(result.generator);
    for (std::size_t i = 0; i < names.size(); ++i) ckpt.put(names[i], *params[i]);
  }
  result.prototypes.store(ckpt);
  ckpt.save(out);
  std::printf("pretrain: initial loss %.6g, final loss %.6g, checkpoint %s\n",
              result.loss_curve.front(), result.loss_curve.back(), out.c_str());
  return 0;
}

int cmd_train_zeroshot(const std::string& config_path, const std::string& corpus_dir,
                       const std::string& prototypes, const std::string& out) {
  AppConfig cfg = load_app_config(config_path);
  const Corpus corpus = load_corpus(corpus_dir, cfg.dsp);
  Models models = make_models(cfg, cfg.train.seed);
  const Checkpoint pre = Checkpoint::load(prototypes);
  load_models_from_checkpoint(models, pre);
  if (!models.proto.frozen())
    throw std::runtime_error("train-zeroshot: prototype checkpoint has no proto.table");
  std::filesystem::create_directories(out);
  const TrainResult result = train_zeroshot(corpus, models, cfg.train, std::filesystem::path(out));
  std::printf("train-zeroshot: %zu steps, metrics at %s/metrics.csv\n",
              result.metrics.size(), out.c_str());
  return 0;
}

int cmd_embed(const std::string& config_path, const std::string& in, const std::string& ckpt,
              const std::string& out, bool no_mask) {
  AppConfig cfg = load_app_config(config_path);
  Models models = make_models(cfg, 0);
  load_models_from_checkpoint(models, Checkpoint::load(ckpt));

  const AudioBuffer audio = read_wav(in);
  const MelSpectrogram mel = compute_mel(audio, cfg.dsp);
  AperiodicityMask mask;
  if (no_mask) {
    mask = all_ones_mask(mel.frame_count());
  } else {
    mask = make_mask(estimate_periodicity(audio, cfg.dsp), cfg.dsp.periodicity_threshold);
  }
  const Tensor v = encode(models.enc, mel, mask);
  write_embedding(out, v);
  return 0;
}

int cmd_eval_embeddings(const std::string& config_path, const std::string& corpus_dir,
                        const std::string& ckpt, const std::string& out, bool no_mask) {
  AppConfig cfg = load_app_config(config_path);
  const Corpus corpus = load_corpus(corpus_dir, cfg.dsp);
  Models models = make_models(cfg, 0);
  load_models_from_checkpoint(models, Checkpoint::load(ckpt));

  const EmbeddingEval eval = eval_embeddings(models, corpus, !no_mask);

  // Prototype distances: mean ||p_i - v|| over each speaker's utterances.
  double proto_dist = 0.0;
  std::size_t proto_n = 0;
  const bool have_proto = models.proto.size() > 0;
  // Cycle distances: re-encode generated mel for every (n, m != n) pair.
  double cyc_dist = 0.0;
  std::size_t cyc_n = 0;
  for (const Utterance& utt : corpus.utterances) {
    AperiodicityMask mask =
        no_mask ? all_ones_mask(utt.mel.frame_count()) : utt.est_mask;
    if (mask.voiced_count() == 0) mask = all_ones_mask(utt.mel.frame_count());
    const Tensor v = encode(models.enc, utt.mel, mask);
    if (have_proto) {
      proto_dist += kd_loss(models.proto.embedding(utt.speaker), v);
      ++proto_n;
    }
    for (std::size_t qi : corpus.by_speaker.at(utt.speaker)) {
      const Utterance& query = corpus.utterances[qi];
      if (query.sentence == utt.sentence) continue;
      const Tensor mel_gen = generate(models.gen, query.text, v);
      AperiodicityMask mask_im = no_mask ? all_ones_mask(mel_gen.rows())
                                         : oracle_mask_for_text(query.text);
      if (mask_im.voiced_count() == 0) mask_im = all_ones_mask(mel_gen.rows());
      cyc_dist += cycle_loss(v, encode(models.enc, mel_gen, mask_im));
      ++cyc_n;
    }
  }

  char buf[512];
  std::string csv = "metric,value\n";
  std::snprintf(buf, sizeof(buf), "intra_speaker_dist,%.10g\n", eval.intra);
  csv += buf;
  std::snprintf(buf, sizeof(buf), "inter_speaker_dist,%.10g\n", eval.inter);
  csv += buf;
  std::snprintf(buf, sizeof(buf), "margin,%.10g\n", eval.margin());
  csv += buf;
  if (proto_n > 0) {
    std::snprintf(buf, sizeof(buf), "mean_prototype_dist,%.10g\n",
                  proto_dist / static_cast<double>(proto_n));
    csv += buf;
  }
  if (cyc_n > 0) {
    std::snprintf(buf, sizeof(buf), "mean_cycle_dist,%.10g\n",
                  cyc_dist / static_cast<double>(cyc_n));
    csv += buf;
  }
  atomic_write_file(out, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot speaker embedding pipeline"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, corpus_dir, ckpt_path, proto_path;
  std::size_t speakers = 4, sentences = 8;
  std::uint64_t seed = 7;
  double threshold = 0.0;
  bool no_mask = false;

  auto* mc = app.add_subcommand("make-corpus", "generate a synthetic multi-speaker corpus");
  mc->add_option("--speakers", speakers, "number of speakers")->required();
  mc->add_option("--sentences", sentences, "sentences per speaker")->required();
  mc->add_option("--seed", seed, "corpus seed");
  mc->add_option("--out", out_path, "output directory")->required();
  mc->add_option("--config", config_path, "JSON config file");

  auto* xm = app.add_subcommand("extract-mel", "compute a mel spectrogram from a WAV file");
  xm->add_option("--in", in_path, "input WAV")->required();
  xm->add_option("--out", out_path, "output mel file")->required();
  xm->add_option("--config", config_path, "JSON config file");

  auto* xk = app.add_subcommand("extract-mask", "compute an aperiodicity mask from a WAV file");
  xk->add_option("--in", in_path, "input WAV")->required();
  xk->add_option("--out", out_path, "output mask file")->required();
  xk->add_option("--threshold", threshold, "periodicity threshold in (0, 1]");
  xk->add_option("--config", config_path, "JSON config file");

  auto* pt = app.add_subcommand("pretrain", "multi-speaker pretraining; emits prototypes");
  pt->add_option("--corpus", corpus_dir, "corpus directory")->required();
  pt->add_option("--out", out_path, "output checkpoint")->required();
  pt->add_option("--config", config_path, "JSON config file");

  auto* tz = app.add_subcommand("train-zeroshot", "zero-shot phase with frozen prototypes");
  tz->add_option("--corpus", corpus_dir, "corpus directory")->required();
  tz->add_option("--prototypes", proto_path, "pretraining checkpoint")->required();
  tz->add_option("--out", out_path, "output directory")->required();
  tz->add_option("--config", config_path, "JSON config file");

  auto* em = app.add_subcommand("embed", "extract a speaker embedding from a WAV file");
  em->add_option("--in", in_path, "input WAV")->required();
  em->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
  em->add_option("--out", out_path, "output embedding file")->required();
  em->add_flag("--no-mask", no_mask, "pool over all frames (no-mask ablation)");
  em->add_option("--config", config_path, "JSON config file");

  auto* ev = app.add_subcommand("eval-embeddings", "corpus-level embedding distances");
  ev->add_option("--corpus", corpus_dir, "corpus directory")->required();
  ev->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
  ev->add_option("--out", out_path, "output CSV")->required();
  ev->add_flag("--no-mask", no_mask, "pool over all frames");
  ev->add_option("--config", config_path, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mc->parsed()) return cmd_make_corpus(config_path, speakers, sentences, seed, out_path);
    if (xm->parsed()) return cmd_extract_mel(config_path, in_path, out_path);
    if (xk->parsed()) return cmd_extract_mask(config_path, in_path, out_path, threshold);
    if (pt->parsed()) return cmd_pretrain(config_path, corpus_dir, out_path);
    if (tz->parsed()) return cmd_train_zeroshot(config_path, corpus_dir, proto_path, out_path);
    if (em->parsed()) return cmd_embed(config_path, in_path, ckpt_path, out_path, no_mask);
    if (ev->parsed())
      return cmd_eval_embeddings(config_path, corpus_dir, ckpt_path, out_path, no_mask);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("no voiced frames") != std::string::npos) return kExitDomain;
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("no voiced frames") != std::string::npos) return kExitDomain;
    if (msg.find("diverged") != std::string::npos) return kExitDiverged;
    return kExitRuntime;
  }
  return 1;
}
