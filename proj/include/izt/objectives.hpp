// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef IZT_OBJECTIVES_HPP_
#define IZT_OBJECTIVES_HPP_

#include "izt/autodiff.hpp"
#include "izt/mlp.hpp"
#include "izt/tensor.hpp"

namespace izt {

struct LossWeights {
  double kd = 0.5;
  double cyc = 0.5;
  double adv = 0.1;
  // Reconstruction weight is fixed at 1.

  void validate() const;
};

struct LossParts {
  double rec = 0.0;
  double kd = 0.0;
  double cyc = 0.0;
  double adv = 0.0;
};

// L2 distance between a prototype and an encoder embedding.
double kd_loss(const Tensor& p, const Tensor& v);
// d(kd_loss)/dv; the zero-distance subgradient is the zero vector.
Tensor kd_loss_grad_v(const Tensor& p, const Tensor& v);

// L2 distance between the re-extracted and the reference embedding.
double cycle_loss(const Tensor& v_in, const Tensor& v_im);
// Gradients w.r.t. (v_in, v_im).
std::pair<Tensor, Tensor> cycle_loss_grads(const Tensor& v_in, const Tensor& v_im);

double l1_loss(const Tensor& a, const Tensor& b);
// d(l1_loss)/da.
Tensor l1_loss_grad(const Tensor& a, const Tensor& b);

// Least-squares GAN losses.
double disc_loss(double real_score, double fake_score);
double adv_loss(double fake_score);

double total_generator_loss(const LossParts& parts, const LossWeights& weights);

struct DiscriminatorConfig {
  std::size_t mel_bins = 100;
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t cond_dim = 64;
  double mel_shift = 12.0;
  double mel_scale = 8.0;

  std::size_t feat_dim() const { return hidden.back(); }
};

// Projection discriminator: score = psi(phi(Y)) + <proj(v), phi(Y)>,
// phi = frame-wise net + temporal mean, psi = scalar affine head.
struct Discriminator {
  DiscriminatorConfig cfg;
  Mlp phi;
  Tensor psi_w;  // feat_dim
  Tensor psi_b;  // scalar (shape {1})
  Tensor proj;   // feat_dim x cond_dim
};

Discriminator init_discriminator(const DiscriminatorConfig& cfg, Rng& rng);

struct DiscCache {
  bool valid = false;
  MlpCache phi;
  Tensor feat;  // feat_dim, temporal mean of phi output
  Tensor v;
  std::size_t frame_count = 0;
};

// mel is T x mel_bins; v the conditioning embedding. Affine in v for fixed mel.
double disc_forward(const Discriminator& disc, const Tensor& mel, const Tensor& v,
                    DiscCache* cache = nullptr);

struct DiscGrads {
  MlpGrads phi;
  Tensor dpsi_w;
  Tensor dpsi_b;
  Tensor dproj;
  Tensor dmel;  // T x mel_bins
  Tensor dv;

  void accumulate(const DiscGrads& other);
};

DiscGrads disc_backward(const Discriminator& disc, const DiscCache& cache, double dscore);
DiscGrads zero_disc_grads(const Discriminator& disc, std::size_t frame_count);

std::vector<Tensor*> discriminator_params(Discriminator& disc);
std::vector<const Tensor*> discriminator_grad_ptrs(const DiscGrads& grads);
std::vector<std::string> discriminator_param_names(const Discriminator& disc);

// Grad-check adapter: inputs {mel, v, phi w/b..., psi_w, psi_b, proj} -> {score}.
class DiscOp : public DifferentiableOp {
 public:
  explicit DiscOp(DiscriminatorConfig cfg) : cfg_(cfg) {}
  std::string name() const override { return "objectives.disc_forward"; }
  std::vector<Tensor> forward(const std::vector<Tensor>& inputs) override;
  std::vector<Tensor> backward(const std::vector<Tensor>& upstream) override;

 private:
  DiscriminatorConfig cfg_;
  Discriminator disc_;
  DiscCache cache_;
};

}  // namespace izt

#endif  // IZT_OBJECTIVES_HPP_
