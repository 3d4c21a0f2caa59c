#include "windownet/multiwindow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windownet/error.hpp"
#include "windownet/random.hpp"

namespace windownet {

namespace {

constexpr WindowSpec kFullRange{2048.0, 4096.0};

void fill_uniform(std::vector<double>& v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

}  // namespace

void MultiWindowLayer::validate() const {
  if (windows.empty()) throw ParameterError("multi-window layer needs at least one window");
  if (mixer.size() != 3 * windows.size()) {
    throw ParameterError("mixer has " + std::to_string(mixer.size()) + " entries, expected 3 x " +
                         std::to_string(windows.size()));
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    try {
      windownet::validate(windows[i]);
    } catch (const ParameterError& e) {
      throw ParameterError("window " + std::to_string(i) + ": " + e.what());
    }
  }
}

void LayerGradients::add(const LayerGradients& other) {
  if (other.d_weight.size() != d_weight.size()) {
    throw ParameterError("layer gradient shapes differ");
  }
  for (std::size_t i = 0; i < d_weight.size(); ++i) {
    d_weight[i] += other.d_weight[i];
    d_bias[i] += other.d_bias[i];
  }
  for (std::size_t i = 0; i < d_mixer.size(); ++i) d_mixer[i] += other.d_mixer[i];
  for (int c = 0; c < 3; ++c) d_mixer_bias[c] += other.d_mixer_bias[c];
}

std::vector<WindowSpec> default_init_windows() {
  return {{100, 3000},  {1250, 1000}, {1500, 3000}, {1750, 2000}, {1750, 3000},
          {2000, 2000}, {2250, 2000}, {2250, 3000}, {2500, 2000}, {2500, 3000},
          {2750, 3000}, {3250, 1000}, {750, 3000},  {2048, 4096}};
}

MultiWindowLayer make_windowed_layer(const std::vector<WindowSpec>& init, std::uint64_t seed) {
  if (init.empty()) throw ParameterError("multi-window layer needs at least one window");
  MultiWindowLayer layer;
  layer.clamp = true;
  for (const auto& w : init) layer.windows.push_back(to_affine(w));
  layer.mixer.resize(3 * init.size());
  Rng rng(derive_seed(seed, {0x6d6978ULL}));
  fill_uniform(layer.mixer, std::sqrt(6.0 / static_cast<double>(init.size())), rng);
  return layer;
}

MultiWindowLayer plain_mixer_init(int n_in, std::uint64_t seed) {
  if (n_in < 1) throw ParameterError("plain mixer needs n_in >= 1");
  MultiWindowLayer layer;
  layer.clamp = false;
  Rng rng(derive_seed(seed, {0x706c61ULL}));
  const double window_bound = std::sqrt(6.0 / 1.0);
  for (int i = 0; i < n_in; ++i) {
    AffineWindow a;
    a.weight = rng.uniform(-window_bound, window_bound);
    a.bias = 0.0;
    a.ceiling = kFullRange.upper();
    layer.windows.push_back(a);
  }
  layer.mixer.resize(3 * static_cast<std::size_t>(n_in));
  fill_uniform(layer.mixer, std::sqrt(6.0 / n_in), rng);
  return layer;
}

MultiWindowCache forward(const MultiWindowLayer& layer, const ImageTensor& img,
                         const NormalizationSpec& norm, ImageTensor& out) {
  layer.validate();
  norm.validate();
  if (img.channels() != 1) {
    throw ParameterError("multi-window forward expects a single-channel image, got " +
                         std::to_string(img.channels()) + " channels");
  }
  const int n = layer.n_windows();
  const std::size_t hw = img.plane_size();

  MultiWindowCache cache;
  cache.n_windows = n;
  cache.height = img.height();
  cache.width = img.width();
  cache.norm = norm;
  cache.input.assign(img.plane(0).begin(), img.plane(0).end());
  cache.preclamp.resize(n * hw);
  cache.scaled.resize(n * hw);

  for (int i = 0; i < n; ++i) {
    const AffineWindow& a = layer.windows[i];
    const double k = 255.0 / a.ceiling;
    double* z = cache.preclamp.data() + i * hw;
    double* s = cache.scaled.data() + i * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      z[p] = a.weight * cache.input[p] + a.bias;
      const double y = layer.clamp ? std::min(std::max(z[p], 0.0), a.ceiling) : z[p];
      s[p] = y * k;
    }
  }

  out = ImageTensor(3, img.height(), img.width(), img.bit_depth());
  for (int c = 0; c < 3; ++c) {
    auto dst = out.plane(c);
    std::fill(dst.begin(), dst.end(), layer.mixer_bias[c]);
    for (int i = 0; i < n; ++i) {
      const double m = layer.mixer_at(c, i);
      const double* s = cache.scaled.data() + i * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] += m * s[p];
    }
    for (double& v : dst) v = (v / 255.0 - norm.mean[c]) / norm.std[c];
  }
  return cache;
}

ImageTensor forward(const MultiWindowLayer& layer, const ImageTensor& img,
                    const NormalizationSpec& norm) {
  ImageTensor out;
  forward(layer, img, norm, out);
  return out;
}

BackwardResult backward(const MultiWindowLayer& layer, const MultiWindowCache& cache,
                        const ImageTensor& d_out) {
  const int n = layer.n_windows();
  if (cache.n_windows != n || d_out.channels() != 3 || d_out.height() != cache.height ||
      d_out.width() != cache.width) {
    throw ParameterError("multi-window backward: cache or gradient shape does not match layer");
  }
  const std::size_t hw = static_cast<std::size_t>(cache.height) * cache.width;

  BackwardResult r{LayerGradients(n), std::vector<double>(hw, 0.0)};

  // Gradient w.r.t. the pre-normalization mixer output.
  std::vector<double> d_mix(3 * hw);
  for (int c = 0; c < 3; ++c) {
    const double k = 1.0 / (255.0 * cache.norm.std[c]);
    auto g = d_out.plane(c);
    double sum = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      d_mix[c * hw + p] = g[p] * k;
      sum += d_mix[c * hw + p];
    }
    r.grads.d_mixer_bias[c] = sum;
  }

  std::vector<double> d_scaled(hw);
  for (int i = 0; i < n; ++i) {
    const AffineWindow& a = layer.windows[i];
    const double* s = cache.scaled.data() + i * hw;
    const double* z = cache.preclamp.data() + i * hw;

    std::fill(d_scaled.begin(), d_scaled.end(), 0.0);
    for (int c = 0; c < 3; ++c) {
      const double m = layer.mixer_at(c, i);
      const double* dm = d_mix.data() + c * hw;
      double dmix = 0.0;
      for (std::size_t p = 0; p < hw; ++p) {
        dmix += dm[p] * s[p];
        d_scaled[p] += m * dm[p];
      }
      r.grads.d_mixer[static_cast<std::size_t>(c) * n + i] = dmix;
    }

    const double k = 255.0 / a.ceiling;
    double dw = 0.0;
    double db = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      // Saturated-side convention at the kinks: only the open interval passes gradient.
      if (layer.clamp && !(z[p] > 0.0 && z[p] < a.ceiling)) continue;
      const double dz = d_scaled[p] * k;
      dw += dz * cache.input[p];
      db += dz;
      r.d_img[p] += dz * a.weight;
    }
    r.grads.d_weight[i] = dw;
    r.grads.d_bias[i] = db;
  }
  return r;
}

std::vector<WindowSpec> recover_windows(const MultiWindowLayer& layer) {
  std::vector<WindowSpec> out;
  out.reserve(layer.windows.size());
  for (std::size_t i = 0; i < layer.windows.size(); ++i) {
    try {
      out.push_back(from_affine(layer.windows[i]));
    } catch (const DegenerateWindowError&) {
      throw DegenerateWindowError("window channel " + std::to_string(i) +
                                  " has zero weight; cannot recover level and width");
    }
  }
  return out;
}

}  // namespace windownet
