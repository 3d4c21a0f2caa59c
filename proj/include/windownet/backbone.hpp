#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "windownet/image.hpp"

namespace windownet {

/// Small stand-in classifier:
///   conv3x3(3->8, pad 1) -> ReLU -> avgpool2 -> conv3x3(8->16, pad 1) -> ReLU
///   -> avgpool2 -> global average pool -> linear(16 -> C)
struct TinyBackbone {
  static constexpr int kIn = 3;
  static constexpr int kMid = 8;
  static constexpr int kOut = 16;

  int n_classes = 14;
  std::vector<double> conv1_w;  ///< 8 x 3 x 3 x 3
  std::vector<double> conv1_b;  ///< 8
  std::vector<double> conv2_w;  ///< 16 x 8 x 3 x 3
  std::vector<double> conv2_b;  ///< 16
  std::vector<double> fc_w;     ///< C x 16
  std::vector<double> fc_b;     ///< C

  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static TinyBackbone init(int n_classes, std::uint64_t seed);
  void validate() const;
};

struct BackboneGrads {
  std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;

  BackboneGrads() = default;
  explicit BackboneGrads(const TinyBackbone& net);
  void add(const BackboneGrads& other);
  void scale(double k);
};

/// Activations kept between forward and backward for one sample.
struct BackboneCache {
  int height = 0, width = 0;    // input
  int h2 = 0, w2 = 0;           // after pool1
  int h4 = 0, w4 = 0;           // after pool2
  std::vector<double> input_pad;  ///< 3 x (H+2) x (W+2)
  std::vector<double> act1;       ///< 8 x H x W, post-ReLU
  std::vector<double> pool1_pad;  ///< 8 x (H/2+2) x (W/2+2)
  std::vector<double> act2;       ///< 16 x H/2 x W/2, post-ReLU
  std::vector<double> gap;        ///< 16
};

/// Returns C logits. Input must be 3 x H x W with H, W >= 4.
std::vector<double> backbone_forward(const TinyBackbone& net, const ImageTensor& x,
                                     BackboneCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns d(input) (3 x H x W).
ImageTensor backbone_backward(const TinyBackbone& net, const BackboneCache& cache,
                              std::span<const double> d_logits, BackboneGrads& grads);

}  // namespace windownet
