#include "windownet/imagepipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "windownet/error.hpp"

namespace windownet {

namespace {

int bit_depth_for_maxval(long maxval) {
  if (maxval <= 255) return 8;
  if (maxval <= 4095) return 12;
  return 16;
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw IoError(path + ": malformed PGM header (unexpected end of file)");
  return tok;
}

long pgm_number(std::istream& in, const std::string& path, const char* field) {
  const std::string tok = pgm_token(in, path);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      tok.size() > 9) {
    throw IoError(path + ": malformed PGM header, bad " + field + " '" + tok + "'");
  }
  return std::stol(tok);
}

ImageTensor load_pgm(std::ifstream& in, const std::string& path) {
  in.seekg(2);
  const long width = pgm_number(in, path, "width");
  const long height = pgm_number(in, path, "height");
  const long maxval = pgm_number(in, path, "maxval");
  if (width < 1 || height < 1) throw IoError(path + ": malformed PGM header, zero-sized image");
  if (maxval < 1 || maxval > 65535) {
    throw IoError(path + ": malformed PGM header, maxval " + std::to_string(maxval) +
                  " outside [1, 65535]");
  }
  // pgm_token consumed exactly one whitespace byte after maxval.
  const auto header_bytes = static_cast<std::size_t>(in.tellg());
  const std::size_t bytes_per_px = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);

  std::vector<unsigned char> raw(n * bytes_per_px);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != raw.size()) {
    throw IoError(path + ": truncated pixel payload at byte offset " +
                  std::to_string(header_bytes + got) + " (expected " +
                  std::to_string(header_bytes + raw.size()) + " bytes)");
  }

  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bytes_per_px == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
    if (v > static_cast<unsigned>(maxval)) {
      throw DataError(path + ": pixel " + std::to_string(i) + " value " + std::to_string(v) +
                      " exceeds maxval " + std::to_string(maxval));
    }
    data[i] = v;
  }
  return ImageTensor(1, static_cast<int>(height), static_cast<int>(width),
                     bit_depth_for_maxval(maxval), std::move(data));
}

ImageTensor load_wnt(std::ifstream& in, const std::string& path) {
  detail::ByteReader reader(in, path);
  char magic[4];
  reader.read(magic, 4);
  const auto bits = reader.u32();
  const auto rank = reader.u32();
  if (rank != 3) throw IoError(path + ": WNT1 rank must be 3, got " + std::to_string(rank));
  std::uint32_t dims[3];
  for (auto& d : dims) d = reader.u32();
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || dims[0] > 4096 || dims[1] > 65536 ||
      dims[2] > 65536) {
    throw IoError(path + ": WNT1 header has implausible dimensions");
  }
  if (bits != 8 && bits != 12 && bits != 16) {
    throw IoError(path + ": WNT1 header has unsupported bit depth " + std::to_string(bits));
  }
  std::vector<double> data(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (double& v : data) {
    v = reader.f64();
    if (!std::isfinite(v)) {
      throw DataError(path + ": non-finite value before byte offset " +
                      std::to_string(reader.offset()));
    }
  }
  return ImageTensor(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                     static_cast<int>(dims[2]), static_cast<int>(bits), std::move(data));
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open file");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') {
    in.clear();
    return load_pgm(in, path.string());
  }
  if (in.gcount() == 4 && std::string(magic, 4) == "WNT1") {
    in.clear();
    in.seekg(0);
    return load_wnt(in, path.string());
  }
  throw IoError(path.string() + ": unsupported format (expected P5 graymap or WNT1 tensor)");
}

void save_pgm(const ImageTensor& img, const std::filesystem::path& path, int maxval,
              const std::string& comment) {
  if (img.channels() != 1) throw ParameterError("PGM output requires a single-channel image");
  if (maxval < 1 || maxval > 65535) throw ParameterError("PGM maxval must be in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << img.width() << " " << img.height() << "\n" << maxval << "\n";
  for (double v : img.values()) {
    const auto q = static_cast<unsigned>(std::clamp(std::round(v), 0.0, double(maxval)));
    if (maxval > 255) out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

void save_tensor(const ImageTensor& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write("WNT1", 4);
  detail::write_u32(out, static_cast<std::uint32_t>(img.bit_depth()));
  detail::write_u32(out, 3);
  detail::write_u32(out, static_cast<std::uint32_t>(img.channels()));
  detail::write_u32(out, static_cast<std::uint32_t>(img.height()));
  detail::write_u32(out, static_cast<std::uint32_t>(img.width()));
  for (double v : img.values()) detail::write_f64(out, v);
  if (!out) throw IoError(path.string() + ": write failed");
}

ImageTensor resize(const ImageTensor& img, int height, int width, Interpolation mode) {
  if (height < 1 || width < 1) {
    throw ParameterError("resize target must be at least 1x1, got " + std::to_string(height) +
                         "x" + std::to_string(width));
  }
  ImageTensor out(img.channels(), height, width, img.bit_depth());
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  const int max_y = img.height() - 1;
  const int max_x = img.width() - 1;

  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(max_y));
      for (int x = 0; x < width; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(max_x));
        if (mode == Interpolation::Nearest) {
          const int ny = std::min(static_cast<int>(std::floor((y + 0.5) * sy)), max_y);
          const int nx = std::min(static_cast<int>(std::floor((x + 0.5) * sx)), max_x);
          out.at(c, y, x) = img.at(c, ny, nx);
          continue;
        }
        const int y0 = static_cast<int>(fy);
        const int x0 = static_cast<int>(fx);
        const int y1 = std::min(y0 + 1, max_y);
        const int x1 = std::min(x0 + 1, max_x);
        const double wy = fy - y0;
        const double wx = fx - x0;
        const double top = wx == 0.0 ? img.at(c, y0, x0)
                                     : (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        const double bot = wx == 0.0 ? img.at(c, y1, x0)
                                     : (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, y, x) = wy == 0.0 ? top : (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

ImageTensor quantize(const ImageTensor& img, int target_bits, QuantizeMode mode) {
  if (target_bits != 8 && target_bits != 12 && target_bits != 16) {
    throw ParameterError("target bit depth must be 8, 12 or 16, got " +
                         std::to_string(target_bits));
  }
  if (target_bits > img.bit_depth()) {
    throw ParameterError("cannot quantize " + std::to_string(img.bit_depth()) + "-bit data up to " +
                         std::to_string(target_bits) + " bits");
  }
  ImageTensor out = img;
  out.set_bit_depth(target_bits);
  const double src_max = std::ldexp(1.0, img.bit_depth()) - 1.0;
  const double dst_max = std::ldexp(1.0, target_bits) - 1.0;
  const double step = std::ldexp(1.0, img.bit_depth() - target_bits);
  for (double& v : out.values()) {
    v = mode == QuantizeMode::RoundRescale ? std::round(v * dst_max / src_max)
                                           : std::floor(v / step);
  }
  return out;
}

ImageTensor scale_to_255(const ImageTensor& img, double source_max) {
  if (!(source_max > 0.0) || !std::isfinite(source_max)) {
    throw ParameterError("scale source maximum must be positive");
  }
  ImageTensor out = img;
  const double k = 255.0 / source_max;
  for (double& v : out.values()) v *= k;
  return out;
}

ImageTensor normalize(const ImageTensor& img, const NormalizationSpec& spec) {
  spec.validate();
  if (img.channels() != 3) {
    throw ParameterError("normalize expects 3 channels, got " + std::to_string(img.channels()));
  }
  ImageTensor out = img;
  for (int c = 0; c < 3; ++c) {
    for (double& v : out.plane(c)) v = (v / 255.0 - spec.mean[c]) / spec.std[c];
  }
  return out;
}

ImageTensor denormalize(const ImageTensor& img, const NormalizationSpec& spec) {
  spec.validate();
  if (img.channels() != 3) {
    throw ParameterError("denormalize expects 3 channels, got " + std::to_string(img.channels()));
  }
  ImageTensor out = img;
  for (int c = 0; c < 3; ++c) {
    for (double& v : out.plane(c)) v = (v * spec.std[c] + spec.mean[c]) * 255.0;
  }
  return out;
}

ImageTensor replicate_to_rgb(const ImageTensor& img) {
  if (img.channels() != 1) {
    throw ParameterError("replicate_to_rgb expects 1 channel, got " +
                         std::to_string(img.channels()));
  }
  ImageTensor out(3, img.height(), img.width(), img.bit_depth());
  for (int c = 0; c < 3; ++c) std::copy(img.plane(0).begin(), img.plane(0).end(), out.plane(c).begin());
  return out;
}

}  // namespace windownet
