// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "izt/checkpoint.hpp"

namespace izt {

PrototypeTable::PrototypeTable(std::vector<std::string> speakers, std::size_t dim, Rng& rng)
    : speakers_(std::move(speakers)) {
  if (speakers_.empty()) throw std::invalid_argument("PrototypeTable: no speakers");
  table_ = rng.normal_tensor({speakers_.size(), dim}, 0.1);
}

std::size_t PrototypeTable::index_of(const std::string& speaker) const {
  for (std::size_t i = 0; i < speakers_.size(); ++i)
    if (speakers_[i] == speaker) return i;
  throw std::runtime_error("PrototypeTable: unknown speaker " + speaker);
}

Tensor PrototypeTable::embedding(const std::string& speaker) const {
  return embedding_at(index_of(speaker));
}

Tensor PrototypeTable::embedding_at(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("PrototypeTable: index out of range");
  Tensor v({dim()});
  for (std::size_t j = 0; j < dim(); ++j) v[j] = table_.at(index, j);
  return v;
}

Tensor& PrototypeTable::mutable_table() {
  if (frozen_) throw std::runtime_error("PrototypeTable: frozen, writes are not allowed");
  return table_;
}

void PrototypeTable::store(Checkpoint& ckpt) const {
  ckpt.put("proto.table", table_);
  // Speaker order, newline-joined, packed into a byte tensor.
  std::string names;
  for (const auto& s : speakers_) names += s + "\n";
  Tensor packed({names.size()});
  for (std::size_t i = 0; i < names.size(); ++i)
    packed[i] = static_cast<double>(static_cast<unsigned char>(names[i]));
  ckpt.put("proto.speakers", packed);
}

PrototypeTable PrototypeTable::restore(const Checkpoint& ckpt) {
  PrototypeTable table;
  table.table_ = ckpt.get("proto.table");
  const Tensor& packed = ckpt.get("proto.speakers");
  std::string names;
  for (std::size_t i = 0; i < packed.size(); ++i)
    names.push_back(static_cast<char>(static_cast<int>(packed[i])));
  std::string current;
  for (char c : names) {
    if (c == '\n') {
      table.speakers_.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (table.speakers_.size() != table.table_.rows())
    throw std::runtime_error("PrototypeTable: speaker/table size mismatch in checkpoint");
  table.frozen_ = true;
  return table;
}

void GeneratorConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || cond_dim == 0 || mel_bins == 0)
    throw std::invalid_argument("GeneratorConfig: zero sizes");
}

Generator init_generator(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  Generator gen;
  gen.cfg = cfg;
  gen.embed = rng.normal_tensor({cfg.vocab_size, cfg.embed_dim}, 0.5);
  gen.cond_w = rng.normal_tensor({cfg.embed_dim, cfg.cond_dim},
                                 1.0 / std::sqrt(static_cast<double>(cfg.cond_dim)));
  std::vector<std::size_t> widths;
  widths.push_back(cfg.embed_dim);
  for (std::size_t w : cfg.decoder_hidden) widths.push_back(w);
  widths.push_back(cfg.mel_bins);
  gen.decoder = init_mlp(widths, rng);
  return gen;
}

Tensor generate(const Generator& gen, const TextSeq& text, const Tensor& v,
                GenerateCache* cache) {
  text.validate(gen.cfg.vocab_size);
  if (v.size() != gen.cfg.cond_dim)
    throw std::invalid_argument("generate: speaker embedding dimension mismatch");

  const std::size_t T = text.total_frames(), e = gen.cfg.embed_dim;
  Tensor c = matmul(gen.cond_w, Tensor({gen.cfg.cond_dim, 1},
                                       std::vector<double>(v.data(), v.data() + v.size())));
  Tensor h({e, T});
  std::size_t t = 0;
  for (std::size_t i = 0; i < text.symbols.size(); ++i) {
    const std::uint32_t sym = text.symbols[i];
    for (std::uint32_t d = 0; d < text.durations[i]; ++d, ++t)
      for (std::size_t j = 0; j < e; ++j) h.at(j, t) = gen.embed.at(sym, j) + c.at(j, 0);
  }

  MlpCache dec_cache;
  const Tensor cols = mlp_forward(gen.decoder, h, &dec_cache);
  Tensor mel({T, gen.cfg.mel_bins});
  for (std::size_t tt = 0; tt < T; ++tt)
    for (std::size_t m = 0; m < gen.cfg.mel_bins; ++m) mel.at(tt, m) = cols.at(m, tt);

  if (cache != nullptr) {
    cache->valid = true;
    cache->text = text;
    cache->v = v;
    cache->h = std::move(h);
    cache->decoder = std::move(dec_cache);
  }
  return mel;
}

void GeneratorGrads::accumulate(const GeneratorGrads& other) {
  dembed += other.dembed;
  dcond_w += other.dcond_w;
  decoder.accumulate(other.decoder);
  dv += other.dv;
}

GeneratorGrads generate_backward(const Generator& gen, const GenerateCache& cache,
                                 const Tensor& dmel) {
  if (!cache.valid) throw std::runtime_error("generate_backward: stale cache");
  const std::size_t T = cache.h.cols(), e = gen.cfg.embed_dim;
  if (dmel.rank() != 2 || dmel.rows() != T || dmel.cols() != gen.cfg.mel_bins)
    throw std::invalid_argument("generate_backward: dmel shape mismatch");

  Tensor dcols({gen.cfg.mel_bins, T});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < gen.cfg.mel_bins; ++m) dcols.at(m, t) = dmel.at(t, m);

  GeneratorGrads grads;
  grads.decoder = mlp_backward(gen.decoder, cache.decoder, dcols);
  const Tensor& dh = grads.decoder.dx;  // e x T

  grads.dembed = Tensor({gen.cfg.vocab_size, e});
  Tensor dc({e});
  std::size_t t = 0;
  for (std::size_t i = 0; i < cache.text.symbols.size(); ++i) {
    const std::uint32_t sym = cache.text.symbols[i];
    for (std::uint32_t d = 0; d < cache.text.durations[i]; ++d, ++t)
      for (std::size_t j = 0; j < e; ++j) {
        grads.dembed.at(sym, j) += dh.at(j, t);
        dc[j] += dh.at(j, t);
      }
  }

  grads.dcond_w = Tensor({e, gen.cfg.cond_dim});
  for (std::size_t j = 0; j < e; ++j)
    for (std::size_t k = 0; k < gen.cfg.cond_dim; ++k)
      grads.dcond_w.at(j, k) = dc[j] * cache.v[k];

  grads.dv = Tensor({gen.cfg.cond_dim});
  for (std::size_t k = 0; k < gen.cfg.cond_dim; ++k)
    for (std::size_t j = 0; j < e; ++j) grads.dv[k] += gen.cond_w.at(j, k) * dc[j];
  return grads;
}

GeneratorGrads zero_generator_grads(const Generator& gen, std::size_t frame_count) {
  GeneratorGrads grads;
  grads.dembed = Tensor({gen.cfg.vocab_size, gen.cfg.embed_dim});
  grads.dcond_w = Tensor({gen.cfg.embed_dim, gen.cfg.cond_dim});
  grads.decoder = zero_mlp_grads(gen.decoder, gen.cfg.embed_dim, frame_count);
  grads.dv = Tensor({gen.cfg.cond_dim});
  return grads;
}

std::vector<Tensor*> generator_params(Generator& gen) {
  std::vector<Tensor*> out{&gen.embed, &gen.cond_w};
  for (MlpLayer& layer : gen.decoder.layers) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  return out;
}

std::vector<const Tensor*> generator_grad_ptrs(const GeneratorGrads& grads) {
  std::vector<const Tensor*> out{&grads.dembed, &grads.dcond_w};
  for (std::size_t l = 0; l < grads.decoder.dw.size(); ++l) {
    out.push_back(&grads.decoder.dw[l]);
    out.push_back(&grads.decoder.db[l]);
  }
  return out;
}

std::vector<std::string> generator_param_names(const Generator& gen) {
  std::vector<std::string> names{"gen.embed", "gen.cond_w"};
  for (std::size_t l = 0; l < gen.decoder.layers.size(); ++l) {
    names.push_back("gen.dec" + std::to_string(l) + ".w");
    names.push_back("gen.dec" + std::to_string(l) + ".b");
  }
  return names;
}

PretrainResult pretrain_multispeaker(const Corpus& corpus, const GeneratorConfig& cfg,
                                     const PretrainConfig& train) {
  if (corpus.speakers.size() < 2) throw std::invalid_argument("need >=2 speakers");
  for (const auto& [spk, idx] : corpus.by_speaker)
    if (idx.size() < 2)
      throw std::invalid_argument("need >=2 sentences per speaker (" + spk + ")");
  if (corpus.utterances.empty()) throw std::invalid_argument("empty corpus");

  Rng rng(train.seed);
  PretrainResult result;
  result.generator = init_generator(cfg, rng);
  result.prototypes = PrototypeTable(corpus.speakers, cfg.cond_dim, rng);

  // Start the output layer at the corpus mean so the first reconstruction
  // error measures deviation, not the log-mel offset.
  {
    Tensor mean({cfg.mel_bins});
    std::size_t frames = 0;
    for (const Utterance& utt : corpus.utterances) {
      for (std::size_t t = 0; t < utt.mel.frame_count(); ++t)
        for (std::size_t m = 0; m < cfg.mel_bins; ++m) mean[m] += utt.mel.frames.at(t, m);
      frames += utt.mel.frame_count();
    }
    mean *= 1.0 / static_cast<double>(frames);
    result.generator.decoder.layers.back().b = mean;
  }

  std::vector<Tensor*> params = generator_params(result.generator);
  params.push_back(&result.prototypes.mutable_table());
  AdamState adam(train.adam);

  for (std::size_t step = 0; step < train.steps; ++step) {
    GeneratorGrads ggrads = zero_generator_grads(result.generator, 1);
    Tensor proto_grad({result.prototypes.size(), cfg.cond_dim});
    double loss = 0.0;

    for (std::size_t b = 0; b < train.batch_size; ++b) {
      const Utterance& utt =
          corpus.utterances[rng.next_u64() % corpus.utterances.size()];
      const std::size_t spk = result.prototypes.index_of(utt.speaker);
      const Tensor v = result.prototypes.embedding_at(spk);

      GenerateCache cache;
      const Tensor mel = generate(result.generator, utt.text, v, &cache);
      const std::size_t count = mel.size();
      double l1 = 0.0;
      Tensor dmel(mel.shape());
      for (std::size_t i = 0; i < count; ++i) {
        const double diff = mel[i] - utt.mel.frames[i];
        l1 += std::abs(diff);
        dmel[i] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) /
                  (static_cast<double>(count) * train.batch_size);
      }
      loss += l1 / static_cast<double>(count * train.batch_size);

      GeneratorGrads g = generate_backward(result.generator, cache, dmel);
      for (std::size_t j = 0; j < cfg.cond_dim; ++j) proto_grad.at(spk, j) += g.dv[j];
      g.decoder.dx = Tensor({1});  // unused in accumulation
      ggrads.dembed += g.dembed;
      ggrads.dcond_w += g.dcond_w;
      for (std::size_t l = 0; l < g.decoder.dw.size(); ++l) {
        ggrads.decoder.dw[l] += g.decoder.dw[l];
        ggrads.decoder.db[l] += g.decoder.db[l];
      }
    }
    if (!std::isfinite(loss)) throw std::runtime_error("pretrain: loss diverged");
    result.loss_curve.push_back(loss);

    std::vector<const Tensor*> grads = generator_grad_ptrs(ggrads);
    grads.push_back(&proto_grad);
    adam.step(params, grads);
  }
  result.prototypes.freeze();
  return result;
}

std::vector<Tensor> GenerateOp::forward(const std::vector<Tensor>& inputs) {
  gen_.cfg = cfg_;
  gen_.embed = inputs.at(1);
  gen_.cond_w = inputs.at(2);
  gen_.decoder.layers.clear();
  std::vector<std::size_t> widths;
  widths.push_back(cfg_.embed_dim);
  for (std::size_t w : cfg_.decoder_hidden) widths.push_back(w);
  widths.push_back(cfg_.mel_bins);
  std::size_t idx = 3;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpLayer layer;
    layer.w = inputs.at(idx++);
    layer.b = inputs.at(idx++);
    layer.relu = l + 2 < widths.size();
    gen_.decoder.layers.push_back(std::move(layer));
  }
  return {generate(gen_, text_, inputs[0], &cache_)};
}

std::vector<Tensor> GenerateOp::backward(const std::vector<Tensor>& upstream) {
  GeneratorGrads g = generate_backward(gen_, cache_, upstream.at(0));
  std::vector<Tensor> out;
  out.push_back(std::move(g.dv));
  out.push_back(std::move(g.dembed));
  out.push_back(std::move(g.dcond_w));
  for (std::size_t l = 0; l < g.decoder.dw.size(); ++l) {
    out.push_back(std::move(g.decoder.dw[l]));
    out.push_back(std::move(g.decoder.db[l]));
  }
  return out;
}

}  // namespace izt
