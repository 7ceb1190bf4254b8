// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <stdexcept>

#include "izt/io.hpp"

namespace izt {

namespace {

std::vector<Tensor*> trainable_params(Models& models) {
  std::vector<Tensor*> params = encoder_params(models.enc);
  for (Tensor* p : generator_params(models.gen)) params.push_back(p);
  return params;
}

struct FlatGrads {
  std::vector<Tensor> tensors;

  explicit FlatGrads(const std::vector<Tensor*>& params) {
    for (const Tensor* p : params) tensors.emplace_back(p->shape());
  }
  void add_encoder(const EncoderGrads& g, std::size_t offset = 0) {
    std::size_t i = offset;
    for (const Tensor* t : encoder_grad_ptrs(g)) tensors[i++] += *t;
  }
  void add_generator(const GeneratorGrads& g, std::size_t offset) {
    std::size_t i = offset;
    for (const Tensor* t : generator_grad_ptrs(g)) tensors[i++] += *t;
  }
  void scale(double s) {
    for (Tensor& t : tensors) t *= s;
  }
  std::vector<const Tensor*> ptrs() const {
    std::vector<const Tensor*> out;
    for (const Tensor& t : tensors) out.push_back(&t);
    return out;
  }
};

AperiodicityMask training_mask(const Utterance& utt, const TrainConfig& cfg) {
  if (!cfg.use_mask) return all_ones_mask(utt.mel.frame_count());
  if (utt.est_mask.voiced_count() == 0)
    throw std::runtime_error("no voiced frames in reference (" + utt.speaker + "/" +
                             utt.sentence + ")");
  return utt.est_mask;
}

Episode sample_episode(const Corpus& corpus, Rng& rng) {
  const std::string& spk = corpus.speakers[rng.next_u64() % corpus.speakers.size()];
  const auto& idx = corpus.by_speaker.at(spk);
  const std::size_t n = rng.next_u64() % idx.size();
  std::size_t m = rng.next_u64() % (idx.size() - 1);
  if (m >= n) ++m;
  std::size_t speaker_index = 0;
  for (; speaker_index < corpus.speakers.size(); ++speaker_index)
    if (corpus.speakers[speaker_index] == spk) break;
  return Episode(speaker_index, corpus.utterances[idx[n]], corpus.utterances[idx[m]]);
}

}  // namespace

Episode::Episode(std::size_t speaker_index, const Utterance& support, const Utterance& query)
    : speaker_index(speaker_index), support(&support), query(&query) {
  if (support.speaker != query.speaker)
    throw std::invalid_argument("Episode: support and query must share a speaker");
  if (support.sentence == query.sentence)
    throw std::invalid_argument("Episode: query text must differ from support (n != m)");
}

void TrainConfig::validate() const {
  if (steps == 0) throw std::invalid_argument("TrainConfig: steps must be > 0");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be > 0");
  if (support_per_query == 0)
    throw std::invalid_argument("TrainConfig: support_per_query must be > 0");
  weights.validate();
}

AperiodicityMask all_ones_mask(std::size_t frames) {
  AperiodicityMask mask;
  mask.bits.assign(frames, 1);
  return mask;
}

Checkpoint models_to_checkpoint(Models& models) {
  Checkpoint ckpt;
  {
    const auto names = encoder_param_names(models.enc);
    const auto params = encoder_params(models.enc);
    for (std::size_t i = 0; i < names.size(); ++i) ckpt.put(names[i], *params[i]);
  }
  {
    const auto names = generator_param_names(models.gen);
    const auto params = generator_params(models.gen);
    for (std::size_t i = 0; i < names.size(); ++i) ckpt.put(names[i], *params[i]);
  }
  {
    const auto names = discriminator_param_names(models.disc);
    const auto params = discriminator_params(models.disc);
    for (std::size_t i = 0; i < names.size(); ++i) ckpt.put(names[i], *params[i]);
  }
  models.proto.store(ckpt);
  return ckpt;
}

void load_models_from_checkpoint(Models& models, const Checkpoint& ckpt) {
  // A pretraining checkpoint carries only generator + prototype entries;
  // load each parameter group only when its entries are present.
  if (ckpt.contains("enc.l0.w")) {
    const auto names = encoder_param_names(models.enc);
    const auto params = encoder_params(models.enc);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!ckpt.get(names[i]).same_shape(*params[i]))
        throw std::runtime_error("checkpoint: shape mismatch for " + names[i]);
      *params[i] = ckpt.get(names[i]);
    }
  }
  if (ckpt.contains("gen.embed")) {
    const auto names = generator_param_names(models.gen);
    const auto params = generator_params(models.gen);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!ckpt.get(names[i]).same_shape(*params[i]))
        throw std::runtime_error("checkpoint: shape mismatch for " + names[i]);
      *params[i] = ckpt.get(names[i]);
    }
  }
  if (ckpt.contains("disc.psi_w")) {
    const auto names = discriminator_param_names(models.disc);
    const auto params = discriminator_params(models.disc);
    for (std::size_t i = 0; i < names.size(); ++i) *params[i] = ckpt.get(names[i]);
  }
  if (ckpt.contains("proto.table")) models.proto = PrototypeTable::restore(ckpt);
}

StepMetrics support_step(Models& models, const std::vector<Episode>& batch,
                         const TrainConfig& cfg, TrainerState& state) {
  if (!models.proto.frozen())
    throw std::runtime_error("support_step: prototypes must be frozen");
  const std::vector<Tensor*> params = trainable_params(models);
  const std::size_t gen_offset = encoder_params(models.enc).size();
  FlatGrads grads(params);

  std::vector<Tensor*> disc_params = discriminator_params(models.disc);
  FlatGrads dgrads(disc_params);

  StepMetrics metrics;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const Episode& ep : batch) {
    const Utterance& utt = *ep.support;
    const AperiodicityMask mask = training_mask(utt, cfg);
    const Tensor p = models.proto.embedding_at(ep.speaker_index);

    EncodeCache ecache;
    const Tensor v_in = encode(models.enc, utt.mel, mask, &ecache);

    GenerateCache gcache;
    const Tensor mel_gen = generate(models.gen, utt.text, v_in, &gcache);

    const double l_rec = l1_loss(mel_gen, utt.mel.frames);
    const double l_kd = kd_loss(p, v_in);

    DiscCache fake_cache, real_cache;
    const double fake = disc_forward(models.disc, mel_gen, v_in, &fake_cache);
    const double real = disc_forward(models.disc, utt.mel.frames, v_in, &real_cache);
    const double l_adv = adv_loss(fake);
    const double l_dsc = disc_loss(real, fake);

    metrics.parts.rec += l_rec * inv_b;
    metrics.parts.kd += l_kd * inv_b;
    metrics.parts.adv += l_adv * inv_b;
    metrics.l_disc += l_dsc * inv_b;

    // Generator/encoder path. Discriminator parameters are held fixed here.
    Tensor dmel = l1_loss_grad(mel_gen, utt.mel.frames);
    const DiscGrads adv_g =
        disc_backward(models.disc, fake_cache, cfg.weights.adv * 2.0 * (fake - 1.0));
    dmel += adv_g.dmel;

    GeneratorGrads gg = generate_backward(models.gen, gcache, dmel);
    Tensor dv = gg.dv;
    Tensor kd_g = kd_loss_grad_v(p, v_in);
    kd_g *= cfg.weights.kd;
    dv += kd_g;
    dv += adv_g.dv;
    const EncoderGrads eg = encode_backward(models.enc, ecache, dv);

    grads.add_encoder(eg);
    grads.add_generator(gg, gen_offset);

    // Discriminator update on (real - 1)^2 + fake^2.
    DiscGrads d_real = disc_backward(models.disc, real_cache, 2.0 * (real - 1.0));
    DiscGrads d_fake = disc_backward(models.disc, fake_cache, 2.0 * fake);
    d_real.accumulate(d_fake);
    std::size_t i = 0;
    for (const Tensor* t : discriminator_grad_ptrs(d_real)) dgrads.tensors[i++] += *t;
  }

  grads.scale(inv_b);
  dgrads.scale(inv_b);
  state.gen_adam.step(params, grads.ptrs());
  state.disc_adam.step(disc_params, dgrads.ptrs());

  metrics.l_gen = total_generator_loss(metrics.parts, cfg.weights);
  return metrics;
}

StepMetrics query_step(Models& models, const std::vector<Episode>& batch,
                       const TrainConfig& cfg, TrainerState& state) {
  if (!models.proto.frozen())
    throw std::runtime_error("query_step: prototypes must be frozen");
  const std::vector<Tensor*> params = trainable_params(models);
  const std::size_t gen_offset = encoder_params(models.enc).size();
  FlatGrads grads(params);

  StepMetrics metrics;
  metrics.is_query = true;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const Episode& ep : batch) {
    const Utterance& ref = *ep.support;
    const TextSeq& query_text = ep.query->text;
    const AperiodicityMask mask_in = training_mask(ref, cfg);

    EncodeCache c_in;
    const Tensor v_in = encode(models.enc, ref.mel, mask_in, &c_in);

    GenerateCache gcache;
    const Tensor mel_gen = generate(models.gen, query_text, v_in, &gcache);

    AperiodicityMask mask_im =
        cfg.use_mask ? oracle_mask_for_text(query_text) : all_ones_mask(mel_gen.rows());
    if (mask_im.voiced_count() == 0) {
      mask_im = all_ones_mask(mel_gen.rows());
      ++state.warnings;
      std::cerr << "warning: generated mel has no voiced frames under the text policy; "
                   "falling back to an all-ones mask\n";
    }

    EncodeCache c_im;
    const Tensor v_im = encode(models.enc, mel_gen, mask_im, &c_im);

    const double l_cyc = cycle_loss(v_in, v_im);
    metrics.parts.cyc += l_cyc * inv_b;

    auto [g_in, g_im] = cycle_loss_grads(v_in, v_im);
    g_in *= cfg.weights.cyc;
    g_im *= cfg.weights.cyc;

    const EncoderGrads eg_im = encode_backward(models.enc, c_im, g_im);
    Tensor dmel_gen = eg_im.dmel;

    if (cfg.adv_on_query) {
      DiscCache fake_cache;
      const double fake = disc_forward(models.disc, mel_gen, v_in, &fake_cache);
      metrics.parts.adv += adv_loss(fake) * inv_b;
      const DiscGrads adv_g =
          disc_backward(models.disc, fake_cache, cfg.weights.adv * 2.0 * (fake - 1.0));
      dmel_gen += adv_g.dmel;
      g_in += adv_g.dv;
    }

    GeneratorGrads gg = generate_backward(models.gen, gcache, dmel_gen);
    g_in += gg.dv;
    const EncoderGrads eg_in = encode_backward(models.enc, c_in, g_in);

    grads.add_encoder(eg_im);
    grads.add_encoder(eg_in);
    grads.add_generator(gg, gen_offset);
  }

  grads.scale(inv_b);
  state.gen_adam.step(params, grads.ptrs());

  metrics.l_gen = total_generator_loss(metrics.parts, cfg.weights);
  return metrics;
}

std::string format_metrics_csv(const std::vector<StepMetrics>& metrics) {
  std::string csv = "step,l_rec,l_kd,l_cyc,l_adv,l_disc,l_gen\n";
  char row[256];
  for (const StepMetrics& m : metrics) {
    std::snprintf(row, sizeof(row), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", m.step,
                  m.parts.rec, m.parts.kd, m.parts.cyc, m.parts.adv, m.l_disc, m.l_gen);
    csv += row;
  }
  return csv;
}

TrainResult train_zeroshot(const Corpus& corpus, Models& models, const TrainConfig& cfg,
                           const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  if (!models.proto.frozen())
    throw std::runtime_error("train_zeroshot: pretraining must supply frozen prototypes");
  for (const auto& spk : corpus.speakers) models.proto.index_of(spk);  // missing -> throws

  if (out_dir) std::filesystem::create_directories(*out_dir);
  TrainerState state(cfg);
  TrainResult result;
  Checkpoint last_good = models_to_checkpoint(models);

  const std::size_t period = cfg.support_per_query + 1;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::vector<Episode> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b)
      batch.push_back(sample_episode(corpus, state.rng));

    const bool is_query = (step - 1) % period == cfg.support_per_query;
    StepMetrics m;
    try {
      m = is_query ? query_step(models, batch, cfg, state)
                   : support_step(models, batch, cfg, state);
    } catch (const std::exception& e) {
      if (out_dir) last_good.save(*out_dir / "last_good.ckpt");
      throw std::runtime_error(std::string("train_zeroshot: aborted: ") + e.what());
    }
    if (!std::isfinite(m.l_gen) || !std::isfinite(m.l_disc)) {
      if (out_dir) last_good.save(*out_dir / "last_good.ckpt");
      throw std::runtime_error("train_zeroshot: loss diverged; last good checkpoint saved");
    }
    m.step = step;
    result.metrics.push_back(m);
    if (step % cfg.snapshot_every == 0) last_good = models_to_checkpoint(models);
  }

  result.mask_fallback_warnings = state.warnings;
  result.metrics_csv = format_metrics_csv(result.metrics);
  if (out_dir) {
    atomic_write_file(*out_dir / "metrics.csv", result.metrics_csv);
    models_to_checkpoint(models).save(*out_dir / "model.ckpt");
  }
  return result;
}

EmbeddingEval eval_embeddings(const Models& models, const Corpus& corpus, bool use_mask) {
  std::vector<Tensor> embeddings;
  std::vector<std::string> speakers;
  for (const Utterance& utt : corpus.utterances) {
    AperiodicityMask mask =
        use_mask ? utt.est_mask : all_ones_mask(utt.mel.frame_count());
    if (mask.voiced_count() == 0) mask = all_ones_mask(utt.mel.frame_count());
    embeddings.push_back(encode(models.enc, utt.mel, mask));
    speakers.push_back(utt.speaker);
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      Tensor diff = embeddings[i];
      diff -= embeddings[j];
      const double d = l2_norm(diff);
      if (speakers[i] == speakers[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  EmbeddingEval eval;
  if (n_intra > 0) eval.intra = intra / static_cast<double>(n_intra);
  if (n_inter > 0) eval.inter = inter / static_cast<double>(n_inter);
  return eval;
}

}  // namespace izt
