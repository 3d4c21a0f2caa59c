#include "windownet/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windownet/error.hpp"

namespace windownet {

void validate(const WindowSpec& w) {
  if (!std::isfinite(w.level) || !std::isfinite(w.width)) {
    throw ParameterError("window level and width must be finite");
  }
  if (!(w.width > 0.0)) {
    throw ParameterError("window width must be positive, got " + std::to_string(w.width));
  }
  if (!(w.lower() < w.upper())) {
    throw ParameterError("window lower limit must be below its upper limit");
  }
}

void validate(const AffineWindow& a) {
  if (!std::isfinite(a.weight) || !std::isfinite(a.bias) || !std::isfinite(a.ceiling)) {
    throw ParameterError("affine window parameters must be finite");
  }
  if (!(a.ceiling > 0.0)) {
    throw ParameterError("affine window ceiling must be positive, got " +
                         std::to_string(a.ceiling));
  }
}

double apply_window(double px, const WindowSpec& w) {
  validate(w);
  return std::min(std::max(px, w.lower()), w.upper());
}

void apply_window(std::span<double> pixels, const WindowSpec& w) {
  validate(w);
  const double lo = w.lower();
  const double hi = w.upper();
  for (double& px : pixels) px = std::min(std::max(px, lo), hi);
}

AffineWindow to_affine(const WindowSpec& w) {
  validate(w);
  AffineWindow a;
  a.ceiling = w.upper();
  if (!(a.ceiling > 0.0)) {
    throw ParameterError("window upper limit must be positive to serve as clamp ceiling");
  }
  a.weight = a.ceiling / w.width;
  a.bias = -a.weight * w.lower();
  if (!std::isfinite(a.weight) || !std::isfinite(a.bias)) {
    throw ParameterError("window produces a non-finite affine form");
  }
  return a;
}

WindowSpec from_affine(const AffineWindow& a) {
  validate(a);
  if (a.weight == 0.0) {
    throw DegenerateWindowError("affine window has zero weight; level and width are undefined");
  }
  WindowSpec w;
  w.width = a.ceiling / a.weight;
  w.level = -a.bias / a.weight + w.width / 2.0;
  return w;
}

double apply_affine(double px, const AffineWindow& a) {
  validate(a);
  return std::min(std::max(a.weight * px + a.bias, 0.0), a.ceiling);
}

void apply_affine(std::span<double> pixels, const AffineWindow& a) {
  validate(a);
  for (double& px : pixels) px = std::min(std::max(a.weight * px + a.bias, 0.0), a.ceiling);
}

AffineGrad affine_grad(double px, const AffineWindow& a) {
  const double z = a.weight * px + a.bias;
  if (z > 0.0 && z < a.ceiling) return {px, 1.0, a.weight};
  return {};
}

}  // namespace windownet
