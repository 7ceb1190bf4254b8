// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// End-to-end acceptance harness: one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "izt/attention.hpp"
#include "izt/config.hpp"
#include "izt/corpus.hpp"
#include "izt/trainer.hpp"

using namespace izt;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& label, bool ok, const std::string& detail = "") {
  std::printf("[%2d] %-34s %s%s%s\n", index, label.c_str(), ok ? "PASS" : "FAIL",
              detail.empty() ? "" : "  -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AperiodicityMask random_mask(Rng& rng, std::size_t T) {
  AperiodicityMask mask;
  for (std::size_t t = 0; t < T; ++t) mask.bits.push_back(rng.uniform() < 0.6 ? 1 : 0);
  if (mask.voiced_count() == 0) mask.bits[0] = 1;
  if (mask.voiced_count() == T) mask.bits[T - 1] = 0;
  return mask;
}

// Scalar-loop reference for the masked pooling computation, independent of
// the vectorized implementation.
Tensor naive_pool(const Tensor& s, const AperiodicityMask& mask, const PoolParams& params) {
  const std::size_t d = params.cfg.dim, T = s.cols(), h = params.cfg.heads;
  const std::size_t dh = d / h;
  const double scale =
      1.0 / std::sqrt(static_cast<double>(params.cfg.scale_by_full_dim ? d : dh));
  auto project = [&](const Tensor& w) {
    Tensor out({d, T});
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += w.at(i, j) * s.at(j, t);
        out.at(i, t) = acc;
      }
    return out;
  };
  const Tensor q = project(params.wq), k = project(params.wk), v = project(params.wv);
  Tensor shat({d, T});
  for (std::size_t head = 0; head < h; ++head)
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> w(T, 0.0);
      double mx = -1e300;
      for (std::size_t u = 0; u < T; ++u) {
        if (!mask.bits[u]) continue;
        double score = 0.0;
        for (std::size_t j = 0; j < dh; ++j)
          score += q.at(head * dh + j, t) * k.at(head * dh + j, u);
        w[u] = score * scale;
        mx = std::max(mx, w[u]);
      }
      double z = 0.0;
      for (std::size_t u = 0; u < T; ++u)
        if (mask.bits[u]) z += (w[u] = std::exp(w[u] - mx));
      for (std::size_t u = 0; u < T; ++u) w[u] = mask.bits[u] ? w[u] / z : 0.0;
      for (std::size_t j = 0; j < dh; ++j) {
        double acc = 0.0;
        for (std::size_t u = 0; u < T; ++u) acc += w[u] * v.at(head * dh + j, u);
        shat.at(head * dh + j, t) = acc;
      }
    }
  std::size_t voiced = 0;
  for (auto b : mask.bits) voiced += b;
  const double denom = static_cast<double>(params.cfg.average_voiced_rows_only ? voiced : T);
  Tensor out({d});
  for (std::size_t t = 0; t < T; ++t) {
    if (params.cfg.average_voiced_rows_only && !mask.bits[t]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += shat.at(j, t) / denom;
  }
  return out;
}

// ---- criterion 1: gradient suite ------------------------------------------

void check_gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  auto run = [&](const std::string& label, DifferentiableOp& op,
                 const std::vector<Tensor>& inputs) {
    const GradCheckReport report = grad_check(op, inputs, 1e-4, 1e-4);
    if (!report.passed) {
      ok = false;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s max rel err %.3g; ", label.c_str(),
                    report.max_rel_err);
      detail += buf;
    }
  };
  Rng rng(101);

  for (bool voiced_only : {false, true}) {
    PoolConfig pcfg;
    pcfg.dim = 8;
    pcfg.heads = 2;
    pcfg.average_voiced_rows_only = voiced_only;
    const PoolParams pp = init_pool_params(pcfg, rng);
    PoolOp pool_op(pcfg, random_mask(rng, 6));
    run(voiced_only ? "pool(voiced-rows)" : "pool", pool_op,
        {rng.normal_tensor({8, 6}), pp.wq, pp.wk, pp.wv});
  }
  {
    const Mlp mlp = init_mlp({6, 10, 4}, rng);
    MlpOp op({true, false});
    std::vector<Tensor> inputs = {rng.normal_tensor({6, 5})};
    for (const MlpLayer& l : mlp.layers) {
      inputs.push_back(l.w);
      inputs.push_back(l.b);
    }
    run("mlp", op, inputs);
  }
  {
    EncoderConfig cfg;
    cfg.mel_bins = 100;
    cfg.hidden = {16};
    cfg.dim = 16;
    cfg.pool.heads = 2;
    EncodeOp op(cfg, random_mask(rng, 12));
    const SpeakerEncoder enc = init_speaker_encoder(cfg, rng);
    // Unit-scale input keeps ReLU pre-activations away from their kinks,
    // where central differences are not a valid derivative estimate.
    std::vector<Tensor> inputs = {rng.normal_tensor({12, 100})};
    for (const MlpLayer& l : enc.trunk.layers) {
      inputs.push_back(l.w);
      inputs.push_back(l.b);
    }
    inputs.push_back(enc.pool.wq);
    inputs.push_back(enc.pool.wk);
    inputs.push_back(enc.pool.wv);
    run("encoder", op, inputs);
  }
  {
    GeneratorConfig cfg;
    cfg.embed_dim = 8;
    cfg.cond_dim = 8;
    cfg.decoder_hidden = {16};
    cfg.mel_bins = 6;
    const Generator gen = init_generator(cfg, rng);
    GenerateOp op(cfg, TextSeq{{0, 7, 3}, {2, 1, 2}});
    std::vector<Tensor> inputs = {rng.normal_tensor({8}), gen.embed, gen.cond_w};
    for (const MlpLayer& l : gen.decoder.layers) {
      inputs.push_back(l.w);
      inputs.push_back(l.b);
    }
    run("generator", op, inputs);
  }
  {
    DiscriminatorConfig cfg;
    cfg.mel_bins = 10;
    cfg.hidden = {12, 8};
    cfg.cond_dim = 6;
    const Discriminator disc = init_discriminator(cfg, rng);
    DiscOp op(cfg);
    std::vector<Tensor> inputs = {rng.normal_tensor({5, 10}), rng.normal_tensor({6})};
    for (const MlpLayer& l : disc.phi.layers) {
      inputs.push_back(l.w);
      inputs.push_back(l.b);
    }
    inputs.push_back(disc.psi_w);
    inputs.push_back(disc.psi_b);
    inputs.push_back(disc.proj);
    run("discriminator", op, inputs);
  }

  const double secs = seconds_since(t0);
  if (secs >= 120.0) {
    ok = false;
    detail += "runtime over budget";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%.1f s", detail.c_str(), secs);
  report(1, "gradient suite (tol 1e-4)", ok, buf);
}

// ---- criterion 2: mask vs oracle on the synthetic corpus -------------------

void check_mask_oracle(const Corpus& corpus) {
  std::size_t agree = 0, total = 0;
  for (const Utterance& utt : corpus.utterances)
    for (std::size_t t = 0; t < utt.mel.frame_count(); ++t) {
      if (utt.boundary[t]) continue;
      ++total;
      if (utt.est_mask.bits[t] == utt.oracle_mask.bits[t]) ++agree;
    }
  const double acc = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%% of %zu frames", 100.0 * acc, total);
  report(2, "mask agrees with oracle >= 95%", total > 0 && acc >= 0.95, buf);
}

// ---- criteria 3 + 4: mask nullity and the pooling oracle -------------------

void check_mask_nullity() {
  bool ok = true;
  Rng rng(103);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    PoolConfig cfg;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.average_voiced_rows_only = (trial % 2 == 1);
    const PoolParams params = init_pool_params(cfg, rng);
    const std::size_t T = 4 + rng.next_u64() % 6;
    const Tensor s = rng.normal_tensor({8, T});
    const AperiodicityMask mask = random_mask(rng, T);

    PoolCache cache;
    const Tensor base = pool(s, mask, params, &cache);
    for (const Tensor& a : cache.attn)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t u = 0; u < T; ++u)
          if (!mask.bits[u] && a.at(t, u) != 0.0) ok = false;

    Tensor s2 = s;
    for (std::size_t t = 0; t < T; ++t)
      if (!mask.bits[t])
        for (std::size_t j = 0; j < 8; ++j) s2.at(j, t) += rng.normal();
    PoolCache cache2;
    const Tensor perturbed = pool(s2, mask, params, &cache2);

    if (cfg.average_voiced_rows_only) {
      for (std::size_t j = 0; j < 8; ++j)
        if (std::abs(base[j] - perturbed[j]) > 1e-12) ok = false;
    } else {
      // Change may enter only through the masked query rows.
      for (std::size_t t = 0; t < T; ++t) {
        if (!mask.bits[t]) continue;
        for (std::size_t j = 0; j < 8; ++j)
          if (std::abs(cache.pooled_seq.at(j, t) - cache2.pooled_seq.at(j, t)) > 1e-12)
            ok = false;
      }
    }
  }
  report(3, "masked keys carry zero weight", ok);
}

void check_pooling_oracle() {
  bool ok = true;
  double worst = 0.0;
  Rng rng(104);
  for (int trial = 0; trial < 50; ++trial) {
    PoolConfig cfg;
    cfg.dim = 8;
    cfg.heads = (trial % 2 == 0) ? 2 : 4;
    cfg.average_voiced_rows_only = (trial % 3 == 0);
    const PoolParams params = init_pool_params(cfg, rng);
    const std::size_t T = 3 + rng.next_u64() % 8;
    const Tensor s = rng.normal_tensor({8, T});
    const AperiodicityMask mask = random_mask(rng, T);
    const Tensor fast = pool(s, mask, params);
    const Tensor slow = naive_pool(s, mask, params);
    for (std::size_t j = 0; j < 8; ++j) worst = std::max(worst, std::abs(fast[j] - slow[j]));
  }
  ok = worst < 1e-12;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "max dev %.3g", worst);
  report(4, "pooling matches scalar oracle", ok, buf);
}

// ---- criterion 5: loss identities ------------------------------------------

void check_loss_identities() {
  bool ok = true;
  const Tensor same({3}, {0.4, -1.0, 2.0});
  ok = ok && kd_loss(same, same) == 0.0;
  Tensor e1({4});
  e1[0] = 1.0;
  ok = ok && kd_loss(e1, Tensor({4})) == 1.0;
  ok = ok && cycle_loss(same, same) == 0.0;
  ok = ok && disc_loss(1.0, 0.0) == 0.0;
  ok = ok && disc_loss(0.0, 1.0) == 2.0;
  ok = ok && disc_loss(0.5, 0.5) == 0.5;
  ok = ok && adv_loss(1.0) == 0.0;
  ok = ok && adv_loss(0.0) == 1.0;
  ok = ok && adv_loss(-1.0) == 4.0;
  LossWeights w;
  ok = ok && w.kd == 0.5 && w.cyc == 0.5 && w.adv == 0.1;
  ok = ok && total_generator_loss({.rec = 1.0, .kd = 2.0, .cyc = 4.0, .adv = 10.0}, w) == 5.0;
  ok = ok && total_generator_loss({}, w) == 0.0;
  ok = ok && total_generator_loss({.rec = 3.0}, {.kd = 0.0, .cyc = 0.0, .adv = 0.0}) == 3.0;
  report(5, "loss identities (weights .5/.5/.1)", ok);
}

// ---- criterion 6: projection affinity --------------------------------------

void check_projection_affinity() {
  Rng rng(106);
  DiscriminatorConfig cfg;
  cfg.mel_bins = 20;
  cfg.hidden = {16, 12};
  cfg.cond_dim = 8;
  const Discriminator disc = init_discriminator(cfg, rng);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor mel = rng.normal_tensor({6, 20});
    const Tensor v1 = rng.normal_tensor({8});
    const Tensor v2 = rng.normal_tensor({8});
    const double alpha = rng.uniform();
    Tensor mix({8});
    for (std::size_t i = 0; i < 8; ++i) mix[i] = alpha * v1[i] + (1.0 - alpha) * v2[i];
    const double lhs = disc_forward(disc, mel, mix);
    const double rhs =
        alpha * disc_forward(disc, mel, v1) + (1.0 - alpha) * disc_forward(disc, mel, v2);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "max dev %.3g", worst);
  report(6, "discriminator affine in v", worst < 1e-10, buf);
}

// ---- criteria 7-9: end-to-end runs ----------------------------------------

struct RunOutput {
  TrainResult result;
  Models models;
};

Models fresh_models(const AppConfig& cfg, const Checkpoint& pretrained) {
  Rng rng(cfg.train.seed);
  Models models;
  models.enc = init_speaker_encoder(cfg.encoder_config(), rng);
  models.gen = init_generator(cfg.generator_config(), rng);
  models.disc = init_discriminator(cfg.discriminator_config(), rng);
  load_models_from_checkpoint(models, pretrained);
  return models;
}

RunOutput run_zeroshot(const Corpus& corpus, const AppConfig& app, const Checkpoint& pretrained,
                       bool use_mask, bool enable_kd_cyc) {
  AppConfig cfg = app;
  cfg.train.use_mask = use_mask;
  if (!enable_kd_cyc) {
    cfg.train.weights.kd = 0.0;
    cfg.train.weights.cyc = 0.0;
  }
  RunOutput out{.result = {}, .models = fresh_models(cfg, pretrained)};
  out.result = train_zeroshot(corpus, out.models, cfg.train, std::nullopt);
  return out;
}

double mean_of(const std::vector<double>& xs, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += xs[i];
  return s / static_cast<double>(end - begin);
}

// Initial/final values of a per-step loss track, each averaged over a tenth
// of the track to damp batch noise.
std::pair<double, double> track_ends(const std::vector<double>& xs) {
  const std::size_t k = std::max<std::size_t>(1, xs.size() / 10);
  return {mean_of(xs, 0, k), mean_of(xs, xs.size() - k, xs.size())};
}

void check_training_criteria(const Corpus& corpus, const AppConfig& app) {
  const auto t0 = std::chrono::steady_clock::now();

  // Multi-speaker pretraining supplies the prototype table.
  const PretrainResult pre =
      pretrain_multispeaker(corpus, app.generator_config(), app.pretrain);
  const bool pretrain_ok = pre.loss_curve.back() < 0.5 * pre.loss_curve.front();
  Checkpoint pretrained;
  {
    Generator gen = pre.generator;
    const auto names = generator_param_names(gen);
    const auto params = generator_params(gen);
    for (std::size_t i = 0; i < names.size(); ++i) pretrained.put(names[i], *params[i]);
    pre.prototypes.store(pretrained);
  }

  const Tensor proto_before = pre.prototypes.table();

  RunOutput full = run_zeroshot(corpus, app, pretrained, true, true);    // (a)
  RunOutput nomask = run_zeroshot(corpus, app, pretrained, false, true); // (b)
  RunOutput baseline = run_zeroshot(corpus, app, pretrained, true, false);  // (c)
  const double run_secs = seconds_since(t0);

  std::vector<double> kd_track, cyc_track;
  for (const StepMetrics& m : full.result.metrics)
    (m.is_query ? cyc_track : kd_track).push_back(m.is_query ? m.parts.cyc : m.parts.kd);

  const auto [kd_first, kd_last] = track_ends(kd_track);
  const auto [cyc_first, cyc_last] = track_ends(cyc_track);
  const EmbeddingEval eval_full = eval_embeddings(full.models, corpus, true);
  const EmbeddingEval eval_nomask = eval_embeddings(nomask.models, corpus, false);

  const bool kd_ok = kd_last < 0.5 * kd_first;
  const bool cyc_ok = cyc_last < 0.8 * cyc_first;
  const bool margin_ok = eval_full.margin() > 0.0 && eval_nomask.margin() > 0.0;
  const bool time_ok = run_secs < 15.0 * 60.0;
  (void)baseline;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "pretrain %.3g->%.3g; kd %.3g->%.3g; cyc %.3g->%.3g; margins %.3g/%.3g; "
                "%.0f s",
                pre.loss_curve.front(), pre.loss_curve.back(), kd_first, kd_last, cyc_first,
                cyc_last, eval_full.margin(), eval_nomask.margin(), run_secs);
  report(7, "ablation echo (3 training runs)",
         pretrain_ok && kd_ok && cyc_ok && margin_ok && time_ok, buf);

  // Criterion 8: prototypes bitwise identical across the zero-shot phase.
  const Tensor& proto_after = full.models.proto.table();
  bool frozen_ok = proto_after.size() == proto_before.size();
  if (frozen_ok)
    frozen_ok = std::memcmp(proto_after.data(), proto_before.data(),
                            proto_before.size() * sizeof(double)) == 0;
  report(8, "prototypes frozen bitwise", frozen_ok);

  // Criterion 9: same seed, byte-identical metrics CSV.
  RunOutput repeat = run_zeroshot(corpus, app, pretrained, true, true);
  report(9, "seeded rerun byte-identical", repeat.result.metrics_csv == full.result.metrics_csv);
}

// ---- criterion 10: degenerate inputs ---------------------------------------

void check_degenerate_inputs(const AppConfig& app) {
  bool ok = true;
  std::string detail;

  AudioBuffer silence;
  silence.samples.assign(24000, 0.0);
  const MelSpectrogram mel = compute_mel(silence, app.dsp);
  const double floor_val = std::log(app.dsp.log_floor);
  for (std::size_t i = 0; i < mel.frames.size(); ++i)
    if (mel.frames[i] != floor_val) ok = false;
  const AperiodicityMask mask =
      make_mask(estimate_periodicity(silence, app.dsp), app.dsp.periodicity_threshold);
  if (mask.voiced_count() != 0) ok = false;
  if (!ok) detail = "silence mel/mask wrong";

  // An all-unvoiced reference must be a defined, catchable error.
  Rng rng(110);
  const SpeakerEncoder enc = init_speaker_encoder(app.encoder_config(), rng);
  bool threw = false;
  try {
    encode(enc, mel, mask);
  } catch (const std::invalid_argument& e) {
    threw = std::string(e.what()).find("no voiced frames") != std::string::npos;
  }
  if (!threw) {
    ok = false;
    detail += " unvoiced-reference error missing";
  }
  report(10, "degenerate input contracts", ok, detail);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  AppConfig app;

  check_gradient_suite();

  const fs::path corpus_dir = fs::temp_directory_path() / "izt_acceptance_corpus";
  fs::remove_all(corpus_dir);
  make_corpus(4, 8, app.corpus.seed, corpus_dir, app.dsp);
  const Corpus corpus = load_corpus(corpus_dir, app.dsp);

  check_mask_oracle(corpus);
  check_mask_nullity();
  check_pooling_oracle();
  check_loss_identities();
  check_projection_affinity();
  check_training_criteria(corpus, app);
  check_degenerate_inputs(app);

  fs::remove_all(corpus_dir);
  std::printf("acceptance: %d failure(s), %.0f s total\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
