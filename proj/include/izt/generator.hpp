// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_GENERATOR_HPP_
#define IZT_GENERATOR_HPP_

#include <map>
#include <string>
#include <vector>

#include "izt/autodiff.hpp"
#include "izt/corpus.hpp"
#include "izt/mlp.hpp"
#include "izt/text.hpp"

namespace izt {

// Speaker-id -> prototype embedding lookup. Trainable during multi-speaker
// pretraining, frozen afterwards; writes after freeze() throw.
class PrototypeTable {
 public:
  PrototypeTable() = default;
  PrototypeTable(std::vector<std::string> speakers, std::size_t dim, Rng& rng);

  std::size_t size() const { return speakers_.size(); }
  std::size_t dim() const { return table_.rank() == 2 ? table_.cols() : 0; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  std::size_t index_of(const std::string& speaker) const;
  Tensor embedding(const std::string& speaker) const;
  Tensor embedding_at(std::size_t index) const;

  const Tensor& table() const { return table_; }
  // Throws if frozen.
  Tensor& mutable_table();

  void store(class Checkpoint& ckpt) const;
  static PrototypeTable restore(const class Checkpoint& ckpt);

 private:
  std::vector<std::string> speakers_;
  Tensor table_;  // S x d
  bool frozen_ = false;
};

struct GeneratorConfig {
  std::size_t vocab_size = 12;
  std::size_t embed_dim = 64;
  std::size_t cond_dim = 64;  // speaker embedding size d
  std::vector<std::size_t> decoder_hidden = {128};
  std::size_t mel_bins = 100;

  void validate() const;
};

// Symbol embedding repeated per duration, speaker embedding projected and
// added to every frame, then a frame-wise decoder to mel bins.
struct Generator {
  GeneratorConfig cfg;
  Tensor embed;   // vocab x embed_dim
  Tensor cond_w;  // embed_dim x cond_dim
  Mlp decoder;    // embed_dim -> ... -> mel_bins
};

Generator init_generator(const GeneratorConfig& cfg, Rng& rng);

struct GenerateCache {
  bool valid = false;
  TextSeq text;
  Tensor v;
  Tensor h;  // embed_dim x T, conditioned frame input
  MlpCache decoder;
};

// Output is T x mel_bins with T = sum of durations. Deterministic.
Tensor generate(const Generator& gen, const TextSeq& text, const Tensor& v,
                GenerateCache* cache = nullptr);

struct GeneratorGrads {
  Tensor dembed;
  Tensor dcond_w;
  MlpGrads decoder;
  Tensor dv;

  void accumulate(const GeneratorGrads& other);
};

GeneratorGrads generate_backward(const Generator& gen, const GenerateCache& cache,
                                 const Tensor& dmel);
GeneratorGrads zero_generator_grads(const Generator& gen, std::size_t frame_count);

std::vector<Tensor*> generator_params(Generator& gen);
std::vector<const Tensor*> generator_grad_ptrs(const GeneratorGrads& grads);
std::vector<std::string> generator_param_names(const Generator& gen);

struct PretrainConfig {
  std::size_t steps = 300;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  AdamConfig adam{.lr = 1e-2};
};

struct PretrainResult {
  Generator generator;
  PrototypeTable prototypes;  // frozen
  std::vector<double> loss_curve;
};

// Joint reconstruction training of the generator and the speaker lookup
// table on (text, mel) pairs; L1 on log-mel. Throws on a corpus with fewer
// than 2 speakers or 2 sentences per speaker, and on divergence.
PretrainResult pretrain_multispeaker(const Corpus& corpus, const GeneratorConfig& cfg,
                                     const PretrainConfig& train);

// Grad-check adapter: inputs {v, embed, cond_w, decoder w/b...} -> {mel}.
class GenerateOp : public DifferentiableOp {
 public:
  GenerateOp(GeneratorConfig cfg, TextSeq text) : cfg_(cfg), text_(std::move(text)) {}
  std::string name() const override { return "generator.generate"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;

 private:
  GeneratorConfig cfg_;
  TextSeq text_;
  Generator gen_;
  GenerateCache cache_;
};

}  // namespace izt

#endif  // IZT_GENERATOR_HPP_
