// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_TRAINER_HPP_
#define IZT_TRAINER_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "izt/checkpoint.hpp"
#include "izt/corpus.hpp"
#include "izt/encoder.hpp"
#include "izt/generator.hpp"
#include "izt/objectives.hpp"

namespace izt {

// One training step's bundle: support pair (X_n, Y_in) plus query text X_m,
// n != m enforced at construction.
struct Episode {
  std::size_t speaker_index = 0;
  const Utterance* support = nullptr;
  const Utterance* query = nullptr;  // only its text is used

  Episode(std::size_t speaker_index, const Utterance& support, const Utterance& query);
};

struct TrainConfig {
  std::size_t steps = 600;
  std::size_t batch_size = 4;
  std::uint64_t seed = 7;
  AdamConfig adam{.lr = 2e-3};
  AdamConfig disc_adam{.lr = 1e-3};
  LossWeights weights;
  std::size_t support_per_query = 1;  // support:query interleave ratio
  bool adv_on_query = false;
  bool use_mask = true;  // false reproduces the no-mask ablation
  std::size_t snapshot_every = 50;

  void validate() const;
};

struct Models {
  SpeakerEncoder enc;
  Generator gen;
  Discriminator disc;
  PrototypeTable proto;  // frozen during zero-shot training
};

Checkpoint models_to_checkpoint(Models& models);
void load_models_from_checkpoint(Models& models, const Checkpoint& ckpt);

struct StepMetrics {
  std::size_t step = 0;
  bool is_query = false;
  LossParts parts;
  double l_disc = 0.0;
  double l_gen = 0.0;
};

// Internal optimizer handles shared by the step functions.
struct TrainerState {
  AdamState gen_adam;
  AdamState disc_adam;
  Rng rng{0};
  std::size_t warnings = 0;

  explicit TrainerState(const TrainConfig& cfg)
      : gen_adam(cfg.adam), disc_adam(cfg.disc_adam), rng(cfg.seed) {}
};

// Support-set step: L_rec + L_KD + L_adv on the encoder and generator, then
// one discriminator update. Prototypes must be frozen.
StepMetrics support_step(Models& models, const std::vector<Episode>& batch,
                         const TrainConfig& cfg, TrainerState& state);

// Query-set step: L_cyc through both encoder passes and the generator. The
// generated mel's mask comes from the query text's symbol voicing; if that
// leaves no voiced frame, an all-ones mask is used and a warning counted.
StepMetrics query_step(Models& models, const std::vector<Episode>& batch,
                       const TrainConfig& cfg, TrainerState& state);

struct TrainResult {
  std::vector<StepMetrics> metrics;
  std::string metrics_csv;
  std::size_t mask_fallback_warnings = 0;
};

// Zero-shot phase: alternates support/query steps per the interleave ratio.
// On divergence, writes last_good.ckpt into out_dir (if given) and throws.
TrainResult train_zeroshot(const Corpus& corpus, Models& models, const TrainConfig& cfg,
                           const std::optional<std::filesystem::path>& out_dir);

AperiodicityMask all_ones_mask(std::size_t frames);

// Mean intra-speaker vs inter-speaker embedding distances over the corpus.
struct EmbeddingEval {
  double intra = 0.0;
  double inter = 0.0;
  double margin() const { return inter - intra; }
};

EmbeddingEval eval_embeddings(const Models& models, const Corpus& corpus, bool use_mask);

std::string format_metrics_csv(const std::vector<StepMetrics>& metrics);

}  // namespace izt

#endif  // IZT_TRAINER_HPP_
