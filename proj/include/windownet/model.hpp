#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windownet/backbone.hpp"
#include "windownet/image.hpp"
#include "windownet/multiwindow.hpp"

namespace windownet {

/// Optional multi-window front-end followed by the tiny backbone.
///
/// Without a front-end the input is a single-channel image already on the
/// (0, 255) scale; it is replicated to three channels and normalized. With a
/// front-end the input is raw pixels (e.g. 0..4095).
struct WindowNetModel {
  std::optional<MultiWindowLayer> front;
  TinyBackbone backbone;
  NormalizationSpec norm;

  int n_classes() const { return backbone.n_classes; }
  /// "none", "windowed" or "plain".
  std::string front_kind() const;
};

/// Trainable array in the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::size_t offset = 0;
  std::size_t size = 0;
};

std::vector<ParamBlock> param_layout(const WindowNetModel& model);
std::size_t param_count(const WindowNetModel& model);
std::vector<double> pack_params(const WindowNetModel& model);
void unpack_params(WindowNetModel& model, std::span<const double> flat);

struct ModelGrads {
  std::optional<LayerGradients> front;
  BackboneGrads backbone;

  explicit ModelGrads(const WindowNetModel& model);
  std::vector<double> pack() const;
};

/// 3-channel normalized tensor fed to the backbone.
ImageTensor backbone_input(const WindowNetModel& model, const ImageTensor& img);
std::vector<double> predict(const WindowNetModel& model, const ImageTensor& img);

struct ForwardBackwardResult {
  double loss = 0.0;
  std::vector<double> logits;  ///< B x C
  ModelGrads grads;
};

/// Mean BCE over the batch and exact gradients of every trainable parameter.
/// `labels` is row-major B x C.
ForwardBackwardResult forward_backward(const WindowNetModel& model,
                                       std::span<const ImageTensor> images,
                                       std::span<const double> labels);

}  // namespace windownet
