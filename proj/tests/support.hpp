#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "windownet/backbone.hpp"
#include "windownet/model.hpp"
#include "windownet/multiwindow.hpp"
#include "windownet/random.hpp"

namespace windownet::testing {

/// O(n^2) pair-counting AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline double brute_force_auc(std::span<const double> scores, std::span<const double> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0.5) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0.5) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Piecewise-linear regime of every clamp and ReLU the batch passes through.
/// Two parameter vectors with equal patterns lie on the same smooth piece.
inline std::vector<std::int8_t> kink_pattern(const WindowNetModel& model, std::span<const ImageTensor> images) {
  std::vector<std::int8_t> out;
  for (const auto& img : images) {
    ImageTensor x;
    if (model.front) {
      auto cache = forward(*model.front, img, model.norm, x);
      if (model.front->clamp) {
        const std::size_t hw = img.plane_size();
        for (int i = 0; i < model.front->n_windows(); ++i) {
          const double ceil = model.front->windows[i].ceiling;
          for (std::size_t p = 0; p < hw; ++p) {
            const double z = cache.preclamp[i * hw + p];
            out.push_back(z <= 0.0 ? 0 : z >= ceil ? 2 : 1);
          }
        }
      }
    } else {
      x = backbone_input(model, img);
    }
    BackboneCache bc;
    backbone_forward(model.backbone, x, &bc);
    for (double v : bc.act1) out.push_back(v > 0.0);
    for (double v : bc.act2) out.push_back(v > 0.0);
  }
  return out;
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
};

/// Central differences of the batch loss for every trainable scalar. Entries
/// whose +-h perturbation changes the kink pattern are excluded.
inline GradCheck check_model_gradients(const WindowNetModel& model, std::span<const ImageTensor> images,
                                       std::span<const double> labels, double step = 1e-5) {
  GradCheck r;
  const auto analytic = forward_backward(model, images, labels).grads.pack();
  const auto params = pack_params(model);
  const auto base_pattern = kink_pattern(model, images);
  WindowNetModel probe = model;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double h = step * std::max(1.0, std::fabs(params[i]));
    auto q = params;
    q[i] = params[i] + h;
    unpack_params(probe, q);
    const bool same_plus = kink_pattern(probe, images) == base_pattern;
    const double lp = forward_backward(probe, images, labels).loss;
    q[i] = params[i] - h;
    unpack_params(probe, q);
    const bool same_minus = kink_pattern(probe, images) == base_pattern;
    const double lm = forward_backward(probe, images, labels).loss;
    if (!same_plus || !same_minus) {
      ++r.excluded;
      continue;
    }
    r.worst = std::max(r.worst, rel_err((lp - lm) / (2.0 * h), analytic[i]));
    ++r.checked;
  }
  return r;
}

/// Gradient check of the multi-window layer alone against the scalar
/// sum(forward(layer, img) * weights).
inline GradCheck check_layer_gradients(const MultiWindowLayer& layer, const ImageTensor& img,
                                       const NormalizationSpec& norm, std::uint64_t seed, double step = 1e-5) {
  Rng rng(seed);
  ImageTensor out;
  forward(layer, img, norm, out);
  ImageTensor dout(3, img.height(), img.width(), img.bit_depth());
  for (auto& v : dout.values()) v = rng.uniform(-1.0, 1.0);
  auto objective = [&](const MultiWindowLayer& l, const ImageTensor& x) {
    const auto y = forward(l, x, norm);
    double s = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) s += y.values()[k] * dout.values()[k];
    return s;
  };
  auto pattern = [&](const MultiWindowLayer& l, const ImageTensor& x) {
    ImageTensor tmp;
    const auto c = forward(l, x, norm, tmp);
    std::vector<std::int8_t> p;
    if (!l.clamp) return p;
    const std::size_t hw = x.plane_size();
    for (int i = 0; i < l.n_windows(); ++i)
      for (std::size_t q = 0; q < hw; ++q) {
        const double z = c.preclamp[i * hw + q];
        p.push_back(z <= 0.0 ? 0 : z >= l.windows[i].ceiling ? 2 : 1);
      }
    return p;
  };
  const auto cache = forward(layer, img, norm, out);
  const auto grads = backward(layer, cache, dout);
  const auto base = pattern(layer, img);

  GradCheck r;
  auto probe = [&](double& slot, double analytic, MultiWindowLayer& l, ImageTensor& x) {
    const double orig = slot;
    const double h = step * std::max(1.0, std::fabs(orig));
    slot = orig + h;
    const bool sp = pattern(l, x) == base;
    const double fp = objective(l, x);
    slot = orig - h;
    const bool sm = pattern(l, x) == base;
    const double fm = objective(l, x);
    slot = orig;
    if (!sp || !sm) {
      ++r.excluded;
      return;
    }
    r.worst = std::max(r.worst, rel_err((fp - fm) / (2.0 * h), analytic, 1e-4));
    ++r.checked;
  };
  MultiWindowLayer l = layer;
  ImageTensor x = img;
  for (int i = 0; i < l.n_windows(); ++i) {
    probe(l.windows[i].weight, grads.grads.d_weight[i], l, x);
    probe(l.windows[i].bias, grads.grads.d_bias[i], l, x);
  }
  for (std::size_t k = 0; k < l.mixer.size(); ++k) probe(l.mixer[k], grads.grads.d_mixer[k], l, x);
  for (int c = 0; c < 3; ++c) probe(l.mixer_bias[c], grads.grads.d_mixer_bias[c], l, x);
  for (std::size_t p = 0; p < x.size(); ++p) probe(x.values()[p], grads.d_img[p], l, x);
  return r;
}

/// Random small model and batch: 4x4 or 6x6 images, 1-3 windows (clamped,
/// unclamped or no front-end), 2-3 classes, batch of 2.
struct SmallCase {
  WindowNetModel model;
  std::vector<ImageTensor> images;
  std::vector<double> labels;
};

inline SmallCase random_small_case(std::uint64_t seed) {
  Rng rng(seed);
  SmallCase s;
  const int n_classes = 2 + static_cast<int>(rng.below(2));
  const int side = rng.bernoulli(0.5) ? 4 : 6;
  const int kind = static_cast<int>(rng.below(3));
  s.model.backbone = TinyBackbone::init(n_classes, rng.bits());
  for (auto& b : s.model.backbone.conv1_b) b = rng.uniform(-0.1, 0.1);
  for (auto& b : s.model.backbone.conv2_b) b = rng.uniform(-0.1, 0.1);
  for (auto& b : s.model.backbone.fc_b) b = rng.uniform(-0.1, 0.1);
  const int n_win = 1 + static_cast<int>(rng.below(3));
  if (kind == 1) {
    std::vector<WindowSpec> ws;
    for (int i = 0; i < n_win; ++i) ws.push_back({rng.uniform(500.0, 3500.0), rng.uniform(300.0, 3000.0)});
    s.model.front = make_windowed_layer(ws, rng.bits());
    for (auto& b : s.model.front->mixer_bias) b = rng.uniform(-5.0, 5.0);
  } else if (kind == 2) {
    s.model.front = plain_mixer_init(n_win, rng.bits());
  }
  const double hi = kind == 0 ? 255.0 : 4095.0;
  for (int b = 0; b < 2; ++b) {
    ImageTensor img(1, side, side, kind == 0 ? 8 : 12);
    for (auto& v : img.values()) v = rng.uniform(0.0, hi);
    s.images.push_back(std::move(img));
    for (int c = 0; c < n_classes; ++c) s.labels.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
  }
  return s;
}

}  // namespace windownet::testing
