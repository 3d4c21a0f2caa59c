#include "windownet/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windownet/error.hpp"
#include "windownet/random.hpp"

namespace windownet {

namespace {

void fill_uniform(std::vector<double>& v, std::size_t n, double bound, Rng& rng) {
  v.resize(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
}

// Copies `ch` planes of h x w into a zero-bordered (h+2) x (w+2) buffer.
void pad_planes(const double* src, int ch, int h, int w, std::vector<double>& dst) {
  const int pw = w + 2;
  dst.assign(static_cast<std::size_t>(ch) * (h + 2) * pw, 0.0);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(src + (static_cast<std::size_t>(c) * h + y) * w, w,
                  dst.data() + (static_cast<std::size_t>(c) * (h + 2) + y + 1) * pw + 1);
    }
  }
}

// out[o] = b[o] + sum_i w[o,i] (*) in_pad[i], 3x3 kernels, same-size output.
void conv3x3_forward(const double* in_pad, int cin, int h, int w, const double* weight,
                     const double* bias, int cout, double* out) {
  const int pw = w + 2;
  const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
  for (int o = 0; o < cout; ++o) {
    double* dst = out + static_cast<std::size_t>(o) * h * w;
    std::fill(dst, dst + static_cast<std::size_t>(h) * w, bias[o]);
    for (int i = 0; i < cin; ++i) {
      const double* k = weight + (static_cast<std::size_t>(o) * cin + i) * 9;
      const double* src = in_pad + i * pplane;
      for (int y = 0; y < h; ++y) {
        double* row = dst + static_cast<std::size_t>(y) * w;
        for (int ky = 0; ky < 3; ++ky) {
          const double* srow = src + static_cast<std::size_t>(y + ky) * pw;
          const double k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
          for (int x = 0; x < w; ++x) row[x] += k0 * srow[x] + k1 * srow[x + 1] + k2 * srow[x + 2];
        }
      }
    }
  }
}

// Given d_out (cout x h x w) accumulates d_weight/d_bias and, if d_in_pad is
// non-null, writes d(in_pad) (cin x (h+2) x (w+2)).
void conv3x3_backward(const double* in_pad, int cin, int h, int w, const double* weight,
                      int cout, const double* d_out, double* d_weight, double* d_bias,
                      double* d_in_pad) {
  const int pw = w + 2;
  const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
  if (d_in_pad) std::fill(d_in_pad, d_in_pad + cin * pplane, 0.0);
  std::vector<double> acc(static_cast<std::size_t>(w));

  for (int o = 0; o < cout; ++o) {
    const double* g = d_out + static_cast<std::size_t>(o) * h * w;
    double sb = 0.0;
    for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p) sb += g[p];
    d_bias[o] += sb;

    for (int i = 0; i < cin; ++i) {
      const double* src = in_pad + i * pplane;
      double* dk = d_weight + (static_cast<std::size_t>(o) * cin + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          std::fill(acc.begin(), acc.end(), 0.0);
          for (int y = 0; y < h; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + ky) * pw + kx;
            for (int x = 0; x < w; ++x) acc[x] += grow[x] * srow[x];
          }
          double s = 0.0;
          for (double a : acc) s += a;
          dk[ky * 3 + kx] += s;
        }
      }
      if (d_in_pad) {
        const double* k = weight + (static_cast<std::size_t>(o) * cin + i) * 9;
        double* dst = d_in_pad + i * pplane;
        for (int y = 0; y < h; ++y) {
          const double* grow = g + static_cast<std::size_t>(y) * w;
          for (int ky = 0; ky < 3; ++ky) {
            double* drow = dst + static_cast<std::size_t>(y + ky) * pw;
            const double k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
            for (int x = 0; x < w; ++x) {
              drow[x] += k0 * grow[x];
              drow[x + 1] += k1 * grow[x];
              drow[x + 2] += k2 * grow[x];
            }
          }
        }
      }
    }
  }
}

// 2x2 average pool, stride 2; odd trailing rows/columns are dropped.
void avgpool2(const double* in, int ch, int h, int w, double* out) {
  const int oh = h / 2, ow = w / 2;
  for (int c = 0; c < ch; ++c) {
    const double* src = in + static_cast<std::size_t>(c) * h * w;
    double* dst = out + static_cast<std::size_t>(c) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const double* r0 = src + static_cast<std::size_t>(2 * y) * w;
      const double* r1 = r0 + w;
      for (int x = 0; x < ow; ++x) {
        dst[y * ow + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
      }
    }
  }
}

void check_input(const ImageTensor& x) {
  if (x.channels() != TinyBackbone::kIn) {
    throw ParameterError("backbone expects 3 input channels, got " + std::to_string(x.channels()));
  }
  if (x.height() < 4 || x.width() < 4) {
    throw ParameterError("backbone input must be at least 4x4");
  }
}

}  // namespace

TinyBackbone TinyBackbone::init(int n_classes, std::uint64_t seed) {
  if (n_classes < 1) throw ParameterError("backbone needs at least one class");
  TinyBackbone net;
  net.n_classes = n_classes;
  Rng rng(derive_seed(seed, {0x62626eULL}));
  fill_uniform(net.conv1_w, kMid * kIn * 9, std::sqrt(6.0 / (kIn * 9)), rng);
  fill_uniform(net.conv2_w, kOut * kMid * 9, std::sqrt(6.0 / (kMid * 9)), rng);
  fill_uniform(net.fc_w, static_cast<std::size_t>(n_classes) * kOut, std::sqrt(6.0 / kOut), rng);
  net.conv1_b.assign(kMid, 0.0);
  net.conv2_b.assign(kOut, 0.0);
  net.fc_b.assign(n_classes, 0.0);
  return net;
}

void TinyBackbone::validate() const {
  const auto c = static_cast<std::size_t>(n_classes);
  if (n_classes < 1 || conv1_w.size() != kMid * kIn * 9 || conv1_b.size() != kMid ||
      conv2_w.size() != kOut * kMid * 9 || conv2_b.size() != kOut || fc_w.size() != c * kOut ||
      fc_b.size() != c) {
    throw ParameterError("backbone parameter shapes are inconsistent");
  }
}

BackboneGrads::BackboneGrads(const TinyBackbone& net)
    : conv1_w(net.conv1_w.size(), 0.0), conv1_b(net.conv1_b.size(), 0.0),
      conv2_w(net.conv2_w.size(), 0.0), conv2_b(net.conv2_b.size(), 0.0),
      fc_w(net.fc_w.size(), 0.0), fc_b(net.fc_b.size(), 0.0) {}

void BackboneGrads::add(const BackboneGrads& o) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ParameterError("backbone gradient shapes differ");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(conv1_w, o.conv1_w);
  acc(conv1_b, o.conv1_b);
  acc(conv2_w, o.conv2_w);
  acc(conv2_b, o.conv2_b);
  acc(fc_w, o.fc_w);
  acc(fc_b, o.fc_b);
}

void BackboneGrads::scale(double k) {
  for (auto* v : {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b}) {
    for (double& x : *v) x *= k;
  }
}

std::vector<double> backbone_forward(const TinyBackbone& net, const ImageTensor& x,
                                     BackboneCache* cache) {
  check_input(x);
  BackboneCache local;
  BackboneCache& c = cache ? *cache : local;
  const int h = x.height(), w = x.width();
  c.height = h;
  c.width = w;
  c.h2 = h / 2;
  c.w2 = w / 2;
  c.h4 = c.h2 / 2;
  c.w4 = c.w2 / 2;
  constexpr int kMid = TinyBackbone::kMid, kOut = TinyBackbone::kOut;

  pad_planes(x.values().data(), TinyBackbone::kIn, h, w, c.input_pad);
  c.act1.resize(static_cast<std::size_t>(kMid) * h * w);
  conv3x3_forward(c.input_pad.data(), TinyBackbone::kIn, h, w, net.conv1_w.data(),
                  net.conv1_b.data(), kMid, c.act1.data());
  for (double& v : c.act1) v = v > 0.0 ? v : 0.0;

  std::vector<double> pool1(static_cast<std::size_t>(kMid) * c.h2 * c.w2);
  avgpool2(c.act1.data(), kMid, h, w, pool1.data());
  pad_planes(pool1.data(), kMid, c.h2, c.w2, c.pool1_pad);

  c.act2.resize(static_cast<std::size_t>(kOut) * c.h2 * c.w2);
  conv3x3_forward(c.pool1_pad.data(), kMid, c.h2, c.w2, net.conv2_w.data(), net.conv2_b.data(),
                  kOut, c.act2.data());
  for (double& v : c.act2) v = v > 0.0 ? v : 0.0;

  // pool2 followed by global average = mean over the pooled (even) region.
  c.gap.assign(kOut, 0.0);
  const double inv = 1.0 / (4.0 * c.h4 * c.w4);
  for (int o = 0; o < kOut; ++o) {
    const double* a = c.act2.data() + static_cast<std::size_t>(o) * c.h2 * c.w2;
    double s = 0.0;
    for (int y = 0; y < 2 * c.h4; ++y) {
      for (int xx = 0; xx < 2 * c.w4; ++xx) s += a[y * c.w2 + xx];
    }
    c.gap[o] = s * inv;
  }

  std::vector<double> logits(net.n_classes);
  for (int k = 0; k < net.n_classes; ++k) {
    double s = net.fc_b[k];
    for (int o = 0; o < kOut; ++o) s += net.fc_w[k * kOut + o] * c.gap[o];
    logits[k] = s;
  }
  return logits;
}

ImageTensor backbone_backward(const TinyBackbone& net, const BackboneCache& c,
                              std::span<const double> d_logits, BackboneGrads& grads) {
  constexpr int kIn = TinyBackbone::kIn, kMid = TinyBackbone::kMid, kOut = TinyBackbone::kOut;
  if (d_logits.size() != static_cast<std::size_t>(net.n_classes)) {
    throw ParameterError("d_logits has " + std::to_string(d_logits.size()) + " entries, expected " +
                         std::to_string(net.n_classes));
  }

  std::vector<double> d_gap(kOut, 0.0);
  for (int k = 0; k < net.n_classes; ++k) {
    grads.fc_b[k] += d_logits[k];
    for (int o = 0; o < kOut; ++o) {
      grads.fc_w[k * kOut + o] += d_logits[k] * c.gap[o];
      d_gap[o] += d_logits[k] * net.fc_w[k * kOut + o];
    }
  }

  // Back through GAP + pool2 + ReLU2.
  const std::size_t plane2 = static_cast<std::size_t>(c.h2) * c.w2;
  std::vector<double> d_act2(kOut * plane2, 0.0);
  const double inv = 1.0 / (4.0 * c.h4 * c.w4);
  for (int o = 0; o < kOut; ++o) {
    const double g = d_gap[o] * inv;
    const double* a = c.act2.data() + o * plane2;
    double* d = d_act2.data() + o * plane2;
    for (int y = 0; y < 2 * c.h4; ++y) {
      for (int x = 0; x < 2 * c.w4; ++x) {
        if (a[y * c.w2 + x] > 0.0) d[y * c.w2 + x] = g;
      }
    }
  }

  std::vector<double> d_pool1_pad(static_cast<std::size_t>(kMid) * (c.h2 + 2) * (c.w2 + 2));
  conv3x3_backward(c.pool1_pad.data(), kMid, c.h2, c.w2, net.conv2_w.data(), kOut, d_act2.data(),
                   grads.conv2_w.data(), grads.conv2_b.data(), d_pool1_pad.data());

  // Back through pool1 + ReLU1.
  const int h = c.height, w = c.width;
  const std::size_t plane1 = static_cast<std::size_t>(h) * w;
  std::vector<double> d_act1(kMid * plane1, 0.0);
  const int pw2 = c.w2 + 2;
  for (int m = 0; m < kMid; ++m) {
    const double* dp = d_pool1_pad.data() + static_cast<std::size_t>(m) * (c.h2 + 2) * pw2;
    const double* a = c.act1.data() + m * plane1;
    double* d = d_act1.data() + m * plane1;
    for (int y = 0; y < 2 * c.h2; ++y) {
      const double* dprow = dp + static_cast<std::size_t>(y / 2 + 1) * pw2 + 1;
      for (int x = 0; x < 2 * c.w2; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (a[p] > 0.0) d[p] = 0.25 * dprow[x / 2];
      }
    }
  }

  std::vector<double> d_in_pad(static_cast<std::size_t>(kIn) * (h + 2) * (w + 2));
  conv3x3_backward(c.input_pad.data(), kIn, h, w, net.conv1_w.data(), kMid, d_act1.data(),
                   grads.conv1_w.data(), grads.conv1_b.data(), d_in_pad.data());

  ImageTensor d_in(kIn, h, w, 12);
  for (int i = 0; i < kIn; ++i) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(d_in_pad.data() + (static_cast<std::size_t>(i) * (h + 2) + y + 1) * (w + 2) + 1,
                  w, &d_in.at(i, y, 0));
    }
  }
  return d_in;
}

}  // namespace windownet
