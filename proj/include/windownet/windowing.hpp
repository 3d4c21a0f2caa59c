#pragma once

#include <span>

namespace windownet {

/// Display window in raw pixel units: everything below `lower()` renders black,
/// everything above `upper()` renders white.
///
/// A spec returned by from_affine() may carry a negative width; that marks an
/// inverted window (contrast flipped by a negative learned weight).
struct WindowSpec {
  double level = 0.0;
  double width = 1.0;

  double lower() const { return level - width / 2.0; }
  double upper() const { return level + width / 2.0; }
  bool inverted() const { return width < 0.0; }

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// The window rewritten as clamp(weight * px + bias, 0, ceiling).
/// `ceiling` is fixed at construction; only weight and bias are trained.
struct AffineWindow {
  double weight = 1.0;
  double bias = 0.0;
  double ceiling = 1.0;

  friend bool operator==(const AffineWindow&, const AffineWindow&) = default;
};

/// Partial derivatives of apply_affine().
struct AffineGrad {
  double d_weight = 0.0;
  double d_bias = 0.0;
  double d_px = 0.0;
};

/// Throws ParameterError unless width > 0 and both limits are finite.
void validate(const WindowSpec& w);
/// Throws ParameterError unless ceiling > 0 and every field is finite.
void validate(const AffineWindow& a);

double apply_window(double px, const WindowSpec& w);
void apply_window(std::span<double> pixels, const WindowSpec& w);

/// weight = U/WW, bias = -weight * L, ceiling = U.
/// Throws ParameterError when U <= 0 (no positive clamp ceiling exists).
AffineWindow to_affine(const WindowSpec& w);

/// width = ceiling / weight, level = -bias / weight + width / 2.
/// Throws DegenerateWindowError when weight == 0. A negative weight yields an
/// inverted spec (negative width) instead of an error.
WindowSpec from_affine(const AffineWindow& a);

double apply_affine(double px, const AffineWindow& a);
void apply_affine(std::span<double> pixels, const AffineWindow& a);

/// Gradient inside the open linear region 0 < weight*px + bias < ceiling is
/// (px, 1, weight). Saturated regions and the two kinks themselves give zeros.
AffineGrad affine_grad(double px, const AffineWindow& a);

}  // namespace windownet
