#include "windownet/image.hpp"

#include <cmath>
#include <string>

#include "windownet/error.hpp"

namespace windownet {

namespace {

void check_dims(int channels, int height, int width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ParameterError("image dimensions must be positive, got " + std::to_string(channels) +
                         "x" + std::to_string(height) + "x" + std::to_string(width));
  }
}

void check_bits(int bits) {
  if (bits != 8 && bits != 12 && bits != 16) {
    throw ParameterError("bit depth must be 8, 12 or 16, got " + std::to_string(bits));
  }
}

}  // namespace

ImageTensor::ImageTensor(int channels, int height, int width, int bit_depth)
    : channels_(channels), height_(height), width_(width), bit_depth_(bit_depth) {
  check_dims(channels, height, width);
  check_bits(bit_depth);
  data_.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
}

ImageTensor::ImageTensor(int channels, int height, int width, int bit_depth,
                         std::vector<double> data)
    : channels_(channels), height_(height), width_(width), bit_depth_(bit_depth),
      data_(std::move(data)) {
  check_dims(channels, height, width);
  check_bits(bit_depth);
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ParameterError("image payload has " + std::to_string(data_.size()) +
                         " values, expected " +
                         std::to_string(static_cast<std::size_t>(channels) * height * width));
  }
}

void ImageTensor::set_bit_depth(int bits) {
  check_bits(bits);
  bit_depth_ = bits;
}

double ImageTensor::nominal_max() const { return std::ldexp(1.0, bit_depth_) - 1.0; }

void NormalizationSpec::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(mean[c]) || !std::isfinite(std[c]) || !(std[c] > 0.0)) {
      throw ParameterError("normalization std must be positive and finite (channel " +
                           std::to_string(c) + ")");
    }
  }
}

}  // namespace windownet
