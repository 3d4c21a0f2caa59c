#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "windownet/image.hpp"
#include "windownet/windowing.hpp"

namespace windownet {

/// Trainable front-end: N parallel clamped affine windows on a single-channel
/// raw-pixel image, each rescaled by 255/ceiling, then mixed to 3 channels by a
/// 1x1 convolution and normalized.
///
/// With `clamp == false` the windows are plain affine channels (the
/// "no windowing" ablation); ceilings then only set the 255/ceiling rescale.
struct MultiWindowLayer {
  std::vector<AffineWindow> windows;
  std::vector<double> mixer;             ///< 3 x N, row-major
  std::array<double, 3> mixer_bias{};
  bool clamp = true;

  int n_windows() const { return static_cast<int>(windows.size()); }
  double mixer_at(int out, int in) const { return mixer[static_cast<std::size_t>(out) * windows.size() + in]; }

  /// Throws ParameterError if N < 1, the mixer shape is off, or any window is invalid.
  void validate() const;
};

struct LayerGradients {
  std::vector<double> d_weight;   ///< N
  std::vector<double> d_bias;     ///< N
  std::vector<double> d_mixer;    ///< 3 x N
  std::array<double, 3> d_mixer_bias{};

  explicit LayerGradients(int n = 0)
      : d_weight(n, 0.0), d_bias(n, 0.0), d_mixer(3 * static_cast<std::size_t>(n), 0.0) {}
  void add(const LayerGradients& other);
};

/// Values kept by forward() for backward().
struct MultiWindowCache {
  int n_windows = 0;
  int height = 0;
  int width = 0;
  std::vector<double> input;     ///< H*W raw pixels
  std::vector<double> preclamp;  ///< N x H*W, weight*px + bias
  std::vector<double> scaled;    ///< N x H*W, window output * 255/ceiling
  NormalizationSpec norm;
};

/// The 14 (level, width) initial windows, the last being the full-range window.
std::vector<WindowSpec> default_init_windows();

/// Builds a clamped layer from window specs with a uniform(+-sqrt(6/N)) mixer
/// and zero mixer bias.
MultiWindowLayer make_windowed_layer(const std::vector<WindowSpec>& init, std::uint64_t seed);

/// "No windowing" ablation: n_in plain affine channels with weights drawn from
/// uniform(+-sqrt(6/fan_in)) (fan_in = 1 for the per-channel 1x1 conv, n_in for
/// the mixer), zero biases, clamping disabled. Ceilings are set to the
/// full-range window's upper limit so the 255/ceiling rescale matches the
/// windowed layer's full-range channel.
MultiWindowLayer plain_mixer_init(int n_in, std::uint64_t seed);

MultiWindowCache forward(const MultiWindowLayer& layer, const ImageTensor& img,
                         const NormalizationSpec& norm, ImageTensor& out);
ImageTensor forward(const MultiWindowLayer& layer, const ImageTensor& img,
                    const NormalizationSpec& norm);

struct BackwardResult {
  LayerGradients grads;
  std::vector<double> d_img;  ///< H*W
};

BackwardResult backward(const MultiWindowLayer& layer, const MultiWindowCache& cache,
                        const ImageTensor& d_out);

/// from_affine() per channel in order. Throws DegenerateWindowError naming the
/// channel if any weight is zero.
std::vector<WindowSpec> recover_windows(const MultiWindowLayer& layer);

}  // namespace windownet
