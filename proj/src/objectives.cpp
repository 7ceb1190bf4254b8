// Copyright 2026 The izt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "izt/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace izt {

void LossWeights::validate() const {
  if (kd < 0.0 || cyc < 0.0 || adv < 0.0)
    throw std::invalid_argument("LossWeights: weights must be >= 0");
}

double kd_loss(const Tensor& p, const Tensor& v) {
  if (p.size() != v.size()) throw std::invalid_argument("kd_loss: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - v[i]) * (p[i] - v[i]);
  return std::sqrt(s);
}

Tensor kd_loss_grad_v(const Tensor& p, const Tensor& v) {
  const double norm = kd_loss(p, v);
  Tensor g({v.size()});
  if (norm == 0.0) return g;
  for (std::size_t i = 0; i < v.size(); ++i) g[i] = (v[i] - p[i]) / norm;
  return g;
}

double cycle_loss(const Tensor& v_in, const Tensor& v_im) {
  if (v_in.size() != v_im.size()) throw std::invalid_argument("cycle_loss: dimension mismatch");
  return kd_loss(v_in, v_im);
}

std::pair<Tensor, Tensor> cycle_loss_grads(const Tensor& v_in, const Tensor& v_im) {
  const double norm = cycle_loss(v_in, v_im);
  Tensor g_in({v_in.size()}), g_im({v_im.size()});
  if (norm == 0.0) return {g_in, g_im};
  for (std::size_t i = 0; i < v_in.size(); ++i) {
    g_im[i] = (v_im[i] - v_in[i]) / norm;
    g_in[i] = -g_im[i];
  }
  return {g_in, g_im};
}

double l1_loss(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

Tensor l1_loss_grad(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_loss_grad: shape mismatch");
  Tensor g(a.shape());
  const double inv = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    g[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  return g;
}

double disc_loss(double real_score, double fake_score) {
  if (!std::isfinite(real_score) || !std::isfinite(fake_score))
    throw std::invalid_argument("disc_loss: non-finite score");
  return (real_score - 1.0) * (real_score - 1.0) + fake_score * fake_score;
}

double adv_loss(double fake_score) {
  if (!std::isfinite(fake_score)) throw std::invalid_argument("adv_loss: non-finite score");
  return (fake_score - 1.0) * (fake_score - 1.0);
}

double total_generator_loss(const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  const double total =
      weights.kd * parts.kd + weights.cyc * parts.cyc + weights.adv * parts.adv + parts.rec;
  if (!std::isfinite(total)) throw std::invalid_argument("total_generator_loss: non-finite part");
  return total;
}

Discriminator init_discriminator(const DiscriminatorConfig& cfg, Rng& rng) {
  Discriminator disc;
  disc.cfg = cfg;
  std::vector<std::size_t> widths;
  widths.push_back(cfg.mel_bins);
  for (std::size_t w : cfg.hidden) widths.push_back(w);
  disc.phi = init_mlp(widths, rng);
  // All phi layers feed the feature head; keep the last one nonlinear too.
  disc.phi.layers.back().relu = true;
  disc.psi_w = rng.normal_tensor({cfg.feat_dim()},
                                 1.0 / std::sqrt(static_cast<double>(cfg.feat_dim())));
  disc.psi_b = Tensor({1});
  disc.proj = rng.normal_tensor({cfg.feat_dim(), cfg.cond_dim},
                                1.0 / std::sqrt(static_cast<double>(cfg.cond_dim)));
  return disc;
}

double disc_forward(const Discriminator& disc, const Tensor& mel, const Tensor& v,
                    DiscCache* cache) {
  if (mel.rank() != 2 || mel.cols() != disc.cfg.mel_bins)
    throw std::invalid_argument("disc_forward: mel must be T x mel_bins");
  if (v.size() != disc.cfg.cond_dim)
    throw std::invalid_argument("disc_forward: conditioning dimension mismatch");

  const std::size_t T = mel.rows(), M = mel.cols(), F = disc.cfg.feat_dim();
  Tensor x({M, T});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m)
      x.at(m, t) = (mel.at(t, m) + disc.cfg.mel_shift) / disc.cfg.mel_scale;

  MlpCache phi_cache;
  const Tensor out = mlp_forward(disc.phi, x, &phi_cache);
  Tensor feat({F});
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) feat[f] += out.at(f, t);
    feat[f] /= static_cast<double>(T);
  }

  double score = disc.psi_b[0];
  for (std::size_t f = 0; f < F; ++f) score += disc.psi_w[f] * feat[f];
  for (std::size_t f = 0; f < F; ++f) {
    double pv = 0.0;
    for (std::size_t k = 0; k < disc.cfg.cond_dim; ++k) pv += disc.proj.at(f, k) * v[k];
    score += pv * feat[f];
  }
  if (!std::isfinite(score)) throw std::runtime_error("disc_forward: non-finite score");

  if (cache != nullptr) {
    cache->valid = true;
    cache->phi = std::move(phi_cache);
    cache->feat = std::move(feat);
    cache->v = v;
    cache->frame_count = T;
  }
  return score;
}

void DiscGrads::accumulate(const DiscGrads& other) {
  phi.accumulate(other.phi);
  dpsi_w += other.dpsi_w;
  dpsi_b += other.dpsi_b;
  dproj += other.dproj;
}

DiscGrads disc_backward(const Discriminator& disc, const DiscCache& cache, double dscore) {
  if (!cache.valid) throw std::runtime_error("disc_backward: stale cache");
  const std::size_t T = cache.frame_count, M = disc.cfg.mel_bins, F = disc.cfg.feat_dim();

  DiscGrads grads;
  grads.dpsi_w = Tensor({F});
  grads.dpsi_b = Tensor({1});
  grads.dproj = Tensor({F, disc.cfg.cond_dim});
  grads.dv = Tensor({disc.cfg.cond_dim});

  grads.dpsi_b[0] = dscore;
  Tensor dfeat({F});
  for (std::size_t f = 0; f < F; ++f) {
    grads.dpsi_w[f] = dscore * cache.feat[f];
    double pv = 0.0;
    for (std::size_t k = 0; k < disc.cfg.cond_dim; ++k) {
      pv += disc.proj.at(f, k) * cache.v[k];
      grads.dproj.at(f, k) = dscore * cache.feat[f] * cache.v[k];
      grads.dv[k] += dscore * disc.proj.at(f, k) * cache.feat[f];
    }
    dfeat[f] = dscore * (disc.psi_w[f] + pv);
  }

  Tensor dout({F, T});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t t = 0; t < T; ++t) dout.at(f, t) = dfeat[f] / static_cast<double>(T);

  grads.phi = mlp_backward(disc.phi, cache.phi, dout);
  grads.dmel = Tensor({T, M});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m)
      grads.dmel.at(t, m) = grads.phi.dx.at(m, t) / disc.cfg.mel_scale;
  return grads;
}

DiscGrads zero_disc_grads(const Discriminator& disc, std::size_t frame_count) {
  DiscGrads grads;
  grads.phi = zero_mlp_grads(disc.phi, disc.cfg.mel_bins, frame_count);
  grads.dpsi_w = Tensor({disc.cfg.feat_dim()});
  grads.dpsi_b = Tensor({1});
  grads.dproj = Tensor({disc.cfg.feat_dim(), disc.cfg.cond_dim});
  grads.dmel = Tensor({frame_count, disc.cfg.mel_bins});
  grads.dv = Tensor({disc.cfg.cond_dim});
  return grads;
}

std::vector<Tensor*> discriminator_params(Discriminator& disc) {
  std::vector<Tensor*> out;
  for (MlpLayer& layer : disc.phi.layers) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  out.push_back(&disc.psi_w);
  out.push_back(&disc.psi_b);
  out.push_back(&disc.proj);
  return out;
}

std::vector<const Tensor*> discriminator_grad_ptrs(const DiscGrads& grads) {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < grads.phi.dw.size(); ++l) {
    out.push_back(&grads.phi.dw[l]);
    out.push_back(&grads.phi.db[l]);
  }
  out.push_back(&grads.dpsi_w);
  out.push_back(&grads.dpsi_b);
  out.push_back(&grads.dproj);
  return out;
}

std::vector<std::string> discriminator_param_names(const Discriminator& disc) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < disc.phi.layers.size(); ++l) {
    names.push_back("disc.phi" + std::to_string(l) + ".w");
    names.push_back("disc.phi" + std::to_string(l) + ".b");
  }
  names.push_back("disc.psi_w");
  names.push_back("disc.psi_b");
  names.push_back("disc.proj");
  return names;
}

std::vector<Tensor> DiscOp::forward(const std::vector<Tensor>& inputs) {
  disc_.cfg = cfg_;
  disc_.phi.layers.clear();
  std::size_t idx = 2;
  for (std::size_t l = 0; l < cfg_.hidden.size(); ++l) {
    MlpLayer layer;
    layer.w = inputs.at(idx++);
    layer.b = inputs.at(idx++);
    layer.relu = true;
    disc_.phi.layers.push_back(std::move(layer));
  }
  disc_.psi_w = inputs.at(idx++);
  disc_.psi_b = inputs.at(idx++);
  disc_.proj = inputs.at(idx++);
  const double score = disc_forward(disc_, inputs[0], inputs[1], &cache_);
  return {Tensor({1}, {score})};
}

std::vector<Tensor> DiscOp::backward(const std::vector<Tensor>& upstream) {
  DiscGrads g = disc_backward(disc_, cache_, upstream.at(0)[0]);
  std::vector<Tensor> out;
  out.push_back(std::move(g.dmel));
  out.push_back(std::move(g.dv));
  for (std::size_t l = 0; l < g.phi.dw.size(); ++l) {
    out.push_back(std::move(g.phi.dw[l]));
    out.push_back(std::move(g.phi.db[l]));
  }
  out.push_back(std::move(g.dpsi_w));
  out.push_back(std::move(g.dpsi_b));
  out.push_back(std::move(g.dproj));
  return out;
}

}  // namespace izt
