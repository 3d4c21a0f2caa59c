#include "windownet/model.hpp"

#include <algorithm>
#include <string>

#include "windownet/error.hpp"
#include "windownet/imagepipe.hpp"
#include "windownet/optim.hpp"

namespace windownet {

namespace {

using U32 = std::uint32_t;

// Walks trainable arrays in a fixed order; `fn(name, dims, pointer, size)`.
template <typename Model, typename Fn>
void visit_params(Model& m, Fn&& fn) {
  if (m.front) {
    auto& f = *m.front;
    const auto n = static_cast<U32>(f.windows.size());
    fn("front.weight", std::vector<U32>{n}, nullptr, std::size_t{n});
    fn("front.bias", std::vector<U32>{n}, nullptr, std::size_t{n});
    fn("front.mixer", std::vector<U32>{3, n}, f.mixer.data(), f.mixer.size());
    fn("front.mixer_bias", std::vector<U32>{3}, f.mixer_bias.data(), std::size_t{3});
  }
  auto& b = m.backbone;
  const auto c = static_cast<U32>(b.n_classes);
  fn("conv1.weight", std::vector<U32>{8, 3, 3, 3}, b.conv1_w.data(), b.conv1_w.size());
  fn("conv1.bias", std::vector<U32>{8}, b.conv1_b.data(), b.conv1_b.size());
  fn("conv2.weight", std::vector<U32>{16, 8, 3, 3}, b.conv2_w.data(), b.conv2_w.size());
  fn("conv2.bias", std::vector<U32>{16}, b.conv2_b.data(), b.conv2_b.size());
  fn("fc.weight", std::vector<U32>{c, 16}, b.fc_w.data(), b.fc_w.size());
  fn("fc.bias", std::vector<U32>{c}, b.fc_b.data(), b.fc_b.size());
}

}  // namespace

std::string WindowNetModel::front_kind() const {
  if (!front) return "none";
  return front->clamp ? "windowed" : "plain";
}

std::vector<ParamBlock> param_layout(const WindowNetModel& model) {
  std::vector<ParamBlock> out;
  std::size_t offset = 0;
  visit_params(model, [&](const char* name, std::vector<U32> dims, const double*, std::size_t n) {
    out.push_back({name, std::move(dims), offset, n});
    offset += n;
  });
  return out;
}

std::size_t param_count(const WindowNetModel& model) {
  const auto layout = param_layout(model);
  return layout.empty() ? 0 : layout.back().offset + layout.back().size;
}

std::vector<double> pack_params(const WindowNetModel& model) {
  std::vector<double> flat;
  flat.reserve(param_count(model));
  if (model.front) {
    for (const auto& w : model.front->windows) flat.push_back(w.weight);
    for (const auto& w : model.front->windows) flat.push_back(w.bias);
  }
  visit_params(model, [&](const char*, const std::vector<U32>&, const double* p, std::size_t n) {
    if (p) flat.insert(flat.end(), p, p + n);
  });
  return flat;
}

void unpack_params(WindowNetModel& model, std::span<const double> flat) {
  if (flat.size() != param_count(model)) {
    throw ParameterError("flat parameter vector has " + std::to_string(flat.size()) +
                         " entries, model expects " + std::to_string(param_count(model)));
  }
  std::size_t i = 0;
  if (model.front) {
    for (auto& w : model.front->windows) w.weight = flat[i++];
    for (auto& w : model.front->windows) w.bias = flat[i++];
  }
  visit_params(model, [&](const char*, const std::vector<U32>&, double* p, std::size_t n) {
    if (!p) return;
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(i), n, p);
    i += n;
  });
}

ModelGrads::ModelGrads(const WindowNetModel& model) : backbone(model.backbone) {
  if (model.front) front.emplace(model.front->n_windows());
}

std::vector<double> ModelGrads::pack() const {
  std::vector<double> flat;
  if (front) {
    flat.insert(flat.end(), front->d_weight.begin(), front->d_weight.end());
    flat.insert(flat.end(), front->d_bias.begin(), front->d_bias.end());
    flat.insert(flat.end(), front->d_mixer.begin(), front->d_mixer.end());
    flat.insert(flat.end(), front->d_mixer_bias.begin(), front->d_mixer_bias.end());
  }
  for (const auto* v : {&backbone.conv1_w, &backbone.conv1_b, &backbone.conv2_w,
                        &backbone.conv2_b, &backbone.fc_w, &backbone.fc_b}) {
    flat.insert(flat.end(), v->begin(), v->end());
  }
  return flat;
}

ImageTensor backbone_input(const WindowNetModel& model, const ImageTensor& img) {
  if (model.front) return forward(*model.front, img, model.norm);
  if (img.channels() != 1) {
    throw ParameterError("model without front-end expects a single-channel image, got " +
                         std::to_string(img.channels()) + " channels");
  }
  return normalize(replicate_to_rgb(img), model.norm);
}

std::vector<double> predict(const WindowNetModel& model, const ImageTensor& img) {
  return backbone_forward(model.backbone, backbone_input(model, img));
}

ForwardBackwardResult forward_backward(const WindowNetModel& model,
                                       std::span<const ImageTensor> images,
                                       std::span<const double> labels) {
  const int c = model.n_classes();
  if (images.empty()) throw ParameterError("forward_backward: empty batch");
  if (labels.size() != images.size() * static_cast<std::size_t>(c)) {
    throw ParameterError("forward_backward: labels must be B x " + std::to_string(c));
  }
  ForwardBackwardResult r{0.0, {}, ModelGrads(model)};
  r.logits.resize(labels.size());
  const double inv_n = 1.0 / static_cast<double>(labels.size());

  BackboneCache bcache;
  for (std::size_t b = 0; b < images.size(); ++b) {
    ImageTensor x;
    std::optional<MultiWindowCache> fcache;
    if (model.front) {
      fcache = forward(*model.front, images[b], model.norm, x);
    } else {
      x = backbone_input(model, images[b]);
    }
    const auto logits = backbone_forward(model.backbone, x, &bcache);
    std::copy(logits.begin(), logits.end(), r.logits.begin() + static_cast<std::ptrdiff_t>(b * c));

    // The mean-BCE gradient of one row depends only on that row's logits.
    const auto row = bce_with_logits(logits, labels.subspan(b * c, c));
    r.loss += row.loss * c * inv_n;
    std::vector<double> d_logits(row.d_logits);
    for (double& d : d_logits) d *= c * inv_n;

    ImageTensor d_x = backbone_backward(model.backbone, bcache, d_logits, r.grads.backbone);
    if (model.front) r.grads.front->add(backward(*model.front, *fcache, d_x).grads);
  }
  return r;
}

}  // namespace windownet
