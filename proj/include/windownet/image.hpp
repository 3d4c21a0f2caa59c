#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace windownet {

/// Rank-3 (channels x height x width) array of real pixels, row-major, plus the
/// nominal bit depth the values came from.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, int bit_depth = 12);
  ImageTensor(int channels, int height, int width, int bit_depth, std::vector<double> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int bit_depth() const { return bit_depth_; }
  void set_bit_depth(int bits);

  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }

  std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Largest representable value at the declared bit depth, 2^bits - 1.
  double nominal_max() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  int bit_depth_ = 12;
  std::vector<double> data_;
};

/// Per-channel mean/std applied after division by 255.
struct NormalizationSpec {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};

  static NormalizationSpec imagenet() { return {}; }
  void validate() const;

  friend bool operator==(const NormalizationSpec&, const NormalizationSpec&) = default;
};

}  // namespace windownet
