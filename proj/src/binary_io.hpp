#pragma once

// Little-endian primitives shared by the tensor container and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "windownet/error.hpp"

namespace windownet::detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, double v) {
  auto bits = byteswap_if_big(std::bit_cast<std::uint64_t>(v));
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

/// Reader that tracks its byte offset so truncation errors can name it.
class ByteReader {
 public:
  ByteReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IoError(what_ + ": truncated at byte offset " +
                    std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())) +
                    " (needed " + std::to_string(n) + " bytes from offset " +
                    std::to_string(offset_) + ")");
    }
    offset_ += n;
  }

  std::uint32_t u32() {
    std::uint32_t v;
    read(&v, sizeof v);
    return byteswap_if_big(v);
  }

  double f64() {
    std::uint64_t bits;
    read(&bits, sizeof bits);
    return std::bit_cast<double>(byteswap_if_big(bits));
  }

  std::size_t offset() const { return offset_; }
  const std::string& what() const { return what_; }

 private:
  std::istream& in_;
  std::string what_;
  std::size_t offset_ = 0;
};

}  // namespace windownet::detail
