#pragma once

#include <filesystem>
#include <string>

#include "windownet/image.hpp"

namespace windownet {

enum class QuantizeMode {
  RoundRescale,  ///< px' = round(px * (2^t - 1) / (2^s - 1))
  Shift,         ///< px' = floor(px / 2^(s - t))
};

enum class Interpolation { Bilinear, Nearest };

/// Reads a binary PGM ("P5", maxval up to 65535) or a WNT1 tensor container,
/// chosen by the file's magic bytes.
ImageTensor load_image(const std::filesystem::path& path);

/// 8-bit or 16-bit big-endian P5 graymap of a single-channel image. Values are
/// rounded and clamped to [0, maxval]. `comment` becomes a header comment line.
void save_pgm(const ImageTensor& img, const std::filesystem::path& path, int maxval,
              const std::string& comment = {});

/// Lossless WNT1 container: magic "WNT1", u32 bit depth, u32 rank (3),
/// u32 dims (channels, height, width), f64 payload; little-endian.
void save_tensor(const ImageTensor& img, const std::filesystem::path& path);

/// Half-pixel-centre resampling (corner alignment off). Source coordinates are
/// clamped to the image, so output extrema never leave the input range.
ImageTensor resize(const ImageTensor& img, int height, int width,
                   Interpolation mode = Interpolation::Bilinear);

ImageTensor quantize(const ImageTensor& img, int target_bits,
                     QuantizeMode mode = QuantizeMode::RoundRescale);

/// Multiplies every value by 255 / source_max. Bit depth metadata is kept.
ImageTensor scale_to_255(const ImageTensor& img, double source_max);

/// out_c = (in_c / 255 - mean_c) / std_c on a 3-channel image.
ImageTensor normalize(const ImageTensor& img, const NormalizationSpec& spec);
ImageTensor denormalize(const ImageTensor& img, const NormalizationSpec& spec);

/// Replicates a single-channel image into three identical channels.
ImageTensor replicate_to_rgb(const ImageTensor& img);

}  // namespace windownet
